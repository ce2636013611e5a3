#include "phenopat/features.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "phenopat/error.hpp"
#include "phenopat/io.hpp"

namespace phenopat {

// ---------------------------------------------------------------------------
// Sparse helpers

double dot(const SparseVector& x, std::span<const double> dense) {
  double s = 0.0;
  for (const auto& e : x.entries) s += e.value * dense[e.index];
  return s;
}

double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->index < j->index) {
      ++i;
    } else if (j->index < i->index) {
      ++j;
    } else {
      s += i->value * j->value;
      ++i;
      ++j;
    }
  }
  return s;
}

double squared_norm(const SparseVector& x) {
  double s = 0.0;
  for (const auto& e : x.entries) s += e.value * e.value;
  return s;
}

void append_block(SparseVector& target, const SparseVector& block, std::uint32_t offset) {
  for (const auto& e : block.entries) target.entries.push_back({e.index + offset, e.value});
}

std::vector<double> to_dense(const SparseVector& x, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  for (const auto& e : x.entries) out.at(e.index) = e.value;
  return out;
}

SparseVector from_dense(std::span<const double> dense) {
  SparseVector out;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) out.entries.push_back({static_cast<std::uint32_t>(i), dense[i]});
  }
  return out;
}

namespace {

SparseVector from_counts(const std::map<std::uint32_t, double>& counts) {
  SparseVector v;
  v.entries.reserve(counts.size());
  for (const auto& [index, value] : counts) v.entries.push_back({index, value});
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// TF-IDF

TfidfModel fit_tfidf(std::span<const TokenList> train, const Vocabulary& vocabulary) {
  if (train.empty()) throw std::invalid_argument("fit_tfidf: empty training set");
  std::vector<std::size_t> df(vocabulary.size(), 0);
  std::vector<std::size_t> last_doc(vocabulary.size(), train.size());
  for (std::size_t d = 0; d < train.size(); ++d) {
    for (const auto& token : train[d]) {
      auto i = vocabulary.index_of(token);
      if (i && last_doc[*i] != d) {
        last_doc[*i] = d;
        ++df[*i];
      }
    }
  }
  TfidfModel model;
  model.vocabulary = vocabulary;
  model.documents = train.size();
  model.idf.resize(vocabulary.size());
  const double n = static_cast<double>(train.size());
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    model.idf[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[i]))) + 1.0;
  }
  return model;
}

SparseVector count_vector(const Vocabulary& vocabulary, const TokenList& tokens) {
  std::map<std::uint32_t, double> counts;
  for (const auto& token : tokens) {
    if (auto i = vocabulary.index_of(token)) counts[static_cast<std::uint32_t>(*i)] += 1.0;
  }
  return from_counts(counts);
}

SparseVector transform_tfidf(const TfidfModel& model, const TokenList& tokens) {
  SparseVector v = count_vector(model.vocabulary, tokens);
  for (auto& e : v.entries) e.value *= model.idf[e.index];
  return v;
}

// ---------------------------------------------------------------------------
// Categorical and concept features

std::optional<std::size_t> CategoryUniverse::index_of(std::string_view value) const {
  auto it = index_.find(value);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SparseVector encode_categorical(std::string_view value, const CategoryUniverse& universe) {
  SparseVector v;
  if (auto i = universe.index_of(value)) v.entries.push_back({static_cast<std::uint32_t>(*i), 1.0});
  return v;
}

SparseVector concept_features(const ConceptIndex& annotations, std::string_view fragment_id,
                              ConceptMode mode, const CategoryUniverse& universe) {
  std::map<std::uint32_t, double> counts;
  for (const auto& a : annotations.for_fragment(fragment_id)) {
    const std::string& key = mode == ConceptMode::Cui ? a.cui : a.semantic_type;
    if (auto i = universe.index_of(key)) counts[static_cast<std::uint32_t>(*i)] += 1.0;
  }
  return from_counts(counts);
}

// ---------------------------------------------------------------------------
// Embedding projection

AlignedEmbeddings::AlignedEmbeddings(std::size_t rows, std::size_t dim, std::vector<double> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (data_.size() != rows_ * dim_) {
    throw ValidationError("aligned embeddings: expected " + std::to_string(rows_ * dim_) +
                          " values, got " + std::to_string(data_.size()));
  }
}

AlignedEmbeddings AlignedEmbeddings::align(const EmbeddingTable& table, const Vocabulary& vocabulary) {
  const std::size_t dim = table.dim();
  std::vector<double> data(vocabulary.size() * dim, 0.0);
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (auto v = table.find(vocabulary.tokens()[i])) {
      std::copy(v->begin(), v->end(), data.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }
  }
  return AlignedEmbeddings(vocabulary.size(), dim, std::move(data));
}

std::vector<double> embed_project(const SparseVector& counts, const AlignedEmbeddings& table) {
  std::vector<double> out(table.dim(), 0.0);
  for (const auto& e : counts.entries) {
    if (e.index >= table.rows()) {
      throw ValidationError("embed_project: vocabulary index " + std::to_string(e.index) +
                            " outside embedding rows " + std::to_string(table.rows()));
    }
    const auto row = table.row(e.index);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += e.value * row[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

void l2_normalize_inplace(std::span<double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  if (s == 0.0) return;
  const double n = std::sqrt(s);
  for (double& x : v) x /= n;
}

std::vector<double> l2_normalize(std::vector<double> v) {
  l2_normalize_inplace(v);
  return v;
}

SparseVector l2_normalize(SparseVector v) {
  const double s = squared_norm(v);
  if (s == 0.0) return v;
  const double n = std::sqrt(s);
  for (auto& e : v.entries) e.value /= n;
  return v;
}

// ---------------------------------------------------------------------------
// Configurations

std::string FeatureConfig::name() const {
  std::string out = base == FeatureBase::Bow ? "BOW" : "Embedding";
  if (site) out += " + Site";
  if (phenotype) out += " + Pheno";
  if (cui) out += " + CUI";
  if (semantic_type) out += " + ST";
  return out;
}

FeatureConfig FeatureConfig::parse(std::string_view name) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= name.size()) {
    std::size_t plus = name.find('+', start);
    std::string_view part = name.substr(start, plus == std::string_view::npos ? name.npos : plus - start);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    parts.emplace_back(part);
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  FeatureConfig config;
  if (parts.empty()) throw ValidationError("empty feature config name");
  if (parts[0] == "BOW") {
    config.base = FeatureBase::Bow;
  } else if (parts[0] == "Embedding") {
    config.base = FeatureBase::Embedding;
  } else {
    throw ValidationError("unknown feature base \"" + parts[0] + "\"");
  }
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i] == "Site") {
      config.site = true;
    } else if (parts[i] == "Pheno") {
      config.phenotype = true;
    } else if (parts[i] == "CUI") {
      config.cui = true;
    } else if (parts[i] == "ST") {
      config.semantic_type = true;
    } else {
      throw ValidationError("unknown feature extra \"" + parts[i] + "\"");
    }
  }
  return config;
}

std::vector<FeatureConfig> standard_feature_configs() {
  std::vector<FeatureConfig> out;
  for (auto base : {FeatureBase::Bow, FeatureBase::Embedding}) {
    FeatureConfig plain{base};
    out.push_back(plain);
    FeatureConfig c = plain;
    c.site = true;
    out.push_back(c);
    c = plain;
    c.phenotype = true;
    out.push_back(c);
    c = plain;
    c.cui = true;
    out.push_back(c);
    c = plain;
    c.semantic_type = true;
    out.push_back(c);
  }
  return out;
}

void write_triplets_csv(const FeatureMatrix& matrix, std::ostream& out) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  out << "row_id,column_name,value\n";
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    for (const auto& e : matrix.rows[r].entries) {
      out << quote(matrix.row_ids[r]) << ',' << quote(matrix.columns[e.index]) << ','
          << format_double(e.value) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Featurizer

Featurizer Featurizer::fit(const FeatureConfig& config, std::span<const Fragment> train,
                           const FeatureArtifacts& artifacts) {
  if (config.needs_concepts() && artifacts.concepts == nullptr) {
    throw ValidationError("feature config \"" + config.name() + "\" requires concept annotations");
  }
  if (config.needs_embeddings() && artifacts.embeddings == nullptr) {
    throw ValidationError("feature config \"" + config.name() + "\" requires word embeddings");
  }
  Featurizer f;
  f.config_ = config;
  f.stopwords_ = artifacts.stopwords ? *artifacts.stopwords : default_stopwords();
  f.concepts_ = artifacts.concepts;

  std::vector<TokenList> tokens;
  tokens.reserve(train.size());
  for (const auto& fragment : train) tokens.push_back(preprocess(fragment.text, f.stopwords_));
  const Vocabulary vocab = Vocabulary::build(tokens);

  if (config.base == FeatureBase::Bow) {
    if (!train.empty()) {
      f.tfidf_ = fit_tfidf(tokens, vocab);
    } else {
      f.tfidf_.vocabulary = vocab;
    }
    for (const auto& t : vocab.tokens()) f.columns_.push_back("bow:" + t);
  } else {
    f.tfidf_.vocabulary = vocab;
    f.embeddings_ = AlignedEmbeddings::align(*artifacts.embeddings, vocab);
    for (std::size_t k = 0; k < artifacts.embeddings->dim(); ++k) {
      f.columns_.push_back("emb:" + std::to_string(k));
    }
  }

  std::vector<std::string> sites, phenotypes, cuis, types;
  for (const auto& fragment : train) {
    sites.push_back(fragment.site);
    phenotypes.push_back(fragment.phenotype);
    if (f.concepts_) {
      for (const auto& a : f.concepts_->for_fragment(fragment.id)) {
        cuis.push_back(a.cui);
        types.push_back(a.semantic_type);
      }
    }
  }
  if (config.site) {
    f.sites_ = CategoryUniverse::from_values(sites);
    for (const auto& n : f.sites_.names()) f.columns_.push_back("site:" + n);
  }
  if (config.phenotype) {
    f.phenotypes_ = CategoryUniverse::from_values(phenotypes);
    for (const auto& n : f.phenotypes_.names()) f.columns_.push_back("pheno:" + n);
  }
  if (config.cui) {
    f.cuis_ = CategoryUniverse::from_values(cuis);
    for (const auto& n : f.cuis_.names()) f.columns_.push_back("cui:" + n);
  }
  if (config.semantic_type) {
    f.semantic_types_ = CategoryUniverse::from_values(types);
    for (const auto& n : f.semantic_types_.names()) f.columns_.push_back("st:" + n);
  }
  return f;
}

SparseVector Featurizer::row(const Fragment& fragment) const {
  const TokenList tokens = preprocess(fragment.text, stopwords_);
  SparseVector out;
  std::uint32_t offset = 0;
  if (config_.base == FeatureBase::Bow) {
    out = transform_tfidf(tfidf_, tokens);
    offset = static_cast<std::uint32_t>(tfidf_.vocabulary.size());
  } else {
    out = from_dense(embed_project(count_vector(tfidf_.vocabulary, tokens), embeddings_));
    offset = static_cast<std::uint32_t>(embeddings_.dim());
  }
  auto add = [&](const SparseVector& block, std::size_t width) {
    append_block(out, block, offset);
    offset += static_cast<std::uint32_t>(width);
  };
  if (config_.site) add(encode_categorical(fragment.site, sites_), sites_.size());
  if (config_.phenotype) add(encode_categorical(fragment.phenotype, phenotypes_), phenotypes_.size());
  if (config_.cui) {
    add(concept_features(*concepts_, fragment.id, ConceptMode::Cui, cuis_), cuis_.size());
  }
  if (config_.semantic_type) {
    add(concept_features(*concepts_, fragment.id, ConceptMode::SemanticType, semantic_types_),
        semantic_types_.size());
  }
  return config_.normalize ? l2_normalize(std::move(out)) : out;
}

FeatureMatrix Featurizer::transform(std::span<const Fragment> fragments) const {
  FeatureMatrix m;
  m.config_name = config_.name();
  m.columns = columns_;
  m.row_ids.reserve(fragments.size());
  m.rows.reserve(fragments.size());
  for (const auto& f : fragments) {
    m.row_ids.push_back(f.id);
    m.rows.push_back(row(f));
  }
  return m;
}

std::pair<FeatureMatrix, FeatureMatrix> build_features(const Corpus& corpus, const Split& split,
                                                       const FeatureConfig& config,
                                                       const FeatureArtifacts& artifacts) {
  const auto train = corpus.select(split.train);
  const auto test = corpus.select(split.test);
  const Featurizer featurizer = Featurizer::fit(config, train, artifacts);
  return {featurizer.transform(train), featurizer.transform(test)};
}

}  // namespace phenopat
