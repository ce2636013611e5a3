#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phenopat/concepts.hpp"
#include "phenopat/corpus.hpp"
#include "phenopat/embeddings.hpp"
#include "phenopat/sparse.hpp"

namespace phenopat {

// ---------------------------------------------------------------------------
// TF-IDF

struct TfidfModel {
  Vocabulary vocabulary;
  std::vector<double> idf;  // one per vocabulary entry
  std::size_t documents = 0;
};

// idf[t] = ln((1 + N) / (1 + df(t))) + 1 over the N training documents.
// Throws std::invalid_argument for an empty training set.
TfidfModel fit_tfidf(std::span<const TokenList> train, const Vocabulary& vocabulary);
// entry[t] = count(t) * idf[t]; out-of-vocabulary tokens are dropped.
SparseVector transform_tfidf(const TfidfModel& model, const TokenList& tokens);
// Raw in-vocabulary term counts.
SparseVector count_vector(const Vocabulary& vocabulary, const TokenList& tokens);

// ---------------------------------------------------------------------------
// Categorical and concept features

// Sorted distinct values with dense indices.
class CategoryUniverse {
 public:
  CategoryUniverse() = default;
  template <class Range>
  static CategoryUniverse from_values(const Range& values) {
    CategoryUniverse u;
    for (const auto& v : values) u.index_.emplace(std::string(v), 0);
    std::size_t i = 0;
    for (auto& [name, index] : u.index_) {
      index = i++;
      u.names_.push_back(name);
    }
    return u;
  }

  std::optional<std::size_t> index_of(std::string_view value) const;
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::string> names_;
};

// One-hot over the universe; values outside it encode to all zeros.
SparseVector encode_categorical(std::string_view value, const CategoryUniverse& universe);

enum class ConceptMode { Cui, SemanticType };

// Occurrence counts of each CUI (or semantic type) annotated on the fragment.
SparseVector concept_features(const ConceptIndex& annotations, std::string_view fragment_id,
                              ConceptMode mode, const CategoryUniverse& universe);

// ---------------------------------------------------------------------------
// Embedding projection

// Embedding rows re-indexed to a vocabulary. Tokens without a vector get zero.
class AlignedEmbeddings {
 public:
  AlignedEmbeddings() = default;
  // `data` is row-major rows x dim. Throws ValidationError on a size mismatch.
  AlignedEmbeddings(std::size_t rows, std::size_t dim, std::vector<double> data);
  static AlignedEmbeddings align(const EmbeddingTable& table, const Vocabulary& vocabulary);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// sum_t count(t) * embedding(t). Throws ValidationError when the count vector
// references a row the aligned table does not have.
std::vector<double> embed_project(const SparseVector& counts, const AlignedEmbeddings& table);

// ---------------------------------------------------------------------------
// Normalization

void l2_normalize_inplace(std::span<double> v);
std::vector<double> l2_normalize(std::vector<double> v);
SparseVector l2_normalize(SparseVector v);

// ---------------------------------------------------------------------------
// Feature configurations and matrices

enum class FeatureBase { Bow, Embedding };

struct FeatureConfig {
  FeatureBase base = FeatureBase::Bow;
  bool site = false;
  bool phenotype = false;
  bool cui = false;
  bool semantic_type = false;
  bool normalize = true;

  // "BOW", "BOW + Site", "Embedding + CUI", "BOW + Pheno + ST", ...
  std::string name() const;
  // Inverse of name(). Throws ValidationError on unknown parts.
  static FeatureConfig parse(std::string_view name);
  bool needs_concepts() const { return cui || semantic_type; }
  bool needs_embeddings() const { return base == FeatureBase::Embedding; }

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// The ten bag-of-words / embedding experiment rows.
std::vector<FeatureConfig> standard_feature_configs();

struct FeatureMatrix {
  std::string config_name;
  std::vector<std::string> row_ids;
  std::vector<std::string> columns;
  std::vector<SparseVector> rows;

  std::size_t cols() const { return columns.size(); }
};

// Sparse triplet CSV: header "row_id,column_name,value", one line per nonzero.
void write_triplets_csv(const FeatureMatrix& matrix, std::ostream& out);

// Optional inputs a configuration may require. Pointers are non-owning.
struct FeatureArtifacts {
  const StopWords* stopwords = nullptr;  // default_stopwords() when null
  const ConceptIndex* concepts = nullptr;
  const EmbeddingTable* embeddings = nullptr;
};

// Everything fitted on the training fragments: vocabulary, idf, universes and
// the vocabulary-aligned embedding matrix. Column blocks are laid out as
// [base | site | phenotype | cui | st] and rows are L2-normalized as a whole.
class Featurizer {
 public:
  // Throws ValidationError when the config needs concepts or embeddings that
  // are missing from `artifacts`.
  static Featurizer fit(const FeatureConfig& config, std::span<const Fragment> train,
                        const FeatureArtifacts& artifacts);

  FeatureMatrix transform(std::span<const Fragment> fragments) const;
  const std::vector<std::string>& columns() const { return columns_; }
  const FeatureConfig& config() const { return config_; }
  const TfidfModel& tfidf() const { return tfidf_; }

 private:
  SparseVector row(const Fragment& fragment) const;

  FeatureConfig config_;
  StopWords stopwords_;
  const ConceptIndex* concepts_ = nullptr;
  TfidfModel tfidf_;
  AlignedEmbeddings embeddings_;
  CategoryUniverse sites_;
  CategoryUniverse phenotypes_;
  CategoryUniverse cuis_;
  CategoryUniverse semantic_types_;
  std::vector<std::string> columns_;
};

// Fits on split.train and transforms both halves.
std::pair<FeatureMatrix, FeatureMatrix> build_features(const Corpus& corpus, const Split& split,
                                                       const FeatureConfig& config,
                                                       const FeatureArtifacts& artifacts);

}  // namespace phenopat
