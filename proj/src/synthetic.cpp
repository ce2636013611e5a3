#include "phenopat/synthetic.hpp"

#include <cstdio>
#include <stdexcept>

#include "json.hpp"
#include "phenopat/error.hpp"
#include "phenopat/io.hpp"
#include "phenopat/random.hpp"

namespace phenopat {

namespace {

const std::vector<std::string>& pick_pool(const std::vector<std::string>& pool,
                                          const std::vector<std::string>& fallback) {
  return pool.empty() ? fallback : pool;
}

}  // namespace

SyntheticConfig default_synthetic_config(std::size_t per_class) {
  SyntheticConfig config;
  auto add = [&](PatternId id, std::vector<std::string> cues) {
    config.classes[id] = SyntheticClass{std::move(cues), per_class, {}};
  };
  add(PatternId::ConfirmDiseaseWasChecked, {"screened", "screening", "lab", "tested", "measured"});
  add(PatternId::RuleOfN, {"least", "occurrences", "recurring", "minimum", "twice"});
  add(PatternId::UseDistinctDates, {"distinct", "separate", "apart", "dates", "days"});
  add(PatternId::WhereDidItHappen, {"inpatient", "outpatient", "hospital", "admission", "emergency"});
  add(PatternId::CredentialsOfTheActor,
      {"physician", "specialist", "ophthalmologist", "neurologist", "provider"});
  add(PatternId::CheckForNegation, {"negated", "negative", "absence", "denies", "ruled"});
  config.filler = {"patient",  "diagnosis", "record",   "medication", "visit",   "note",
                   "encounter", "code",     "icd",      "mention",    "criteria", "case",
                   "control",  "condition", "data",     "algorithm",  "problem", "list",
                   "history",  "required",  "event",    "report",     "review",  "document",
                   "cohort",   "entry",     "value",    "result",     "order",   "type"};
  config.sites = {"CCHMC",      "CHOP", "Columbia",    "Geisinger",    "Group Health",
                  "Marshfield", "Mayo", "Mount Sinai", "Northwestern", "Vanderbilt"};
  config.phenotypes = {"Autism", "Cataract",       "Dementia", "HDL",
                       "Heart Failure", "Hypothyroidism", "MS", "T2DM"};
  return config;
}

SyntheticConfig parse_synthetic_config(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("synthetic config", 0, e.what());
  }
  if (!doc.is_object()) throw ParseError("synthetic config", 0, "expected a JSON object");
  SyntheticConfig config = default_synthetic_config(0);
  config.classes.clear();
  for (const auto& [name, entry] : doc.items()) {
    auto id = parse_pattern(name);
    if (!id) throw ValidationError("synthetic config: unknown class " + name);
    SyntheticClass cls;
    cls.cues = entry.at("cues").get<std::vector<std::string>>();
    cls.count = entry.at("count").get<std::size_t>();
    if (auto co = entry.find("co_labels"); co != entry.end()) {
      for (const auto& [other, rate] : co->items()) {
        auto other_id = parse_pattern(other);
        if (!other_id) throw ValidationError("synthetic config: unknown co-label " + other);
        cls.co_labels[*other_id] = rate.get<double>();
      }
    }
    config.classes[*id] = std::move(cls);
  }
  return config;
}

SyntheticConfig load_synthetic_config(const std::filesystem::path& path) {
  return parse_synthetic_config(read_file(path));
}

Corpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  if (config.classes.empty()) throw std::invalid_argument("synthetic config has no classes");
  for (const auto& [id, cls] : config.classes) {
    if (cls.cues.empty()) {
      throw std::invalid_argument("synthetic class " + std::string(pattern_name(id)) +
                                  " has no cue words");
    }
  }
  const SyntheticConfig defaults = default_synthetic_config(0);
  const auto& filler = pick_pool(config.filler, defaults.filler);
  const auto& sites = pick_pool(config.sites, defaults.sites);
  const auto& phenotypes = pick_pool(config.phenotypes, defaults.phenotypes);
  const std::size_t max_filler = std::max(config.min_filler, config.max_filler);

  Rng rng(derive_seed(seed, "synthetic"));
  std::vector<Fragment> fragments;
  for (const auto& [id, cls] : config.classes) {
    for (std::size_t k = 0; k < cls.count; ++k) {
      Fragment f;
      char buf[32];
      std::snprintf(buf, sizeof buf, "syn-%04zu", fragments.size() + 1);
      f.id = buf;
      f.labels.insert(id);

      std::vector<std::string> words;
      const std::size_t first = rng.below(cls.cues.size());
      words.push_back(cls.cues[first]);
      if (cls.cues.size() > 1 && rng.bernoulli(0.5)) {
        std::size_t second = rng.below(cls.cues.size() - 1);
        if (second >= first) ++second;
        words.push_back(cls.cues[second]);
      }
      for (const auto& [other, rate] : cls.co_labels) {
        if (!rng.bernoulli(rate)) continue;
        f.labels.insert(other);
        auto it = config.classes.find(other);
        if (it != config.classes.end()) {
          words.push_back(it->second.cues[rng.below(it->second.cues.size())]);
        }
      }
      const std::size_t n_filler =
          config.min_filler + rng.below(max_filler - config.min_filler + 1);
      for (std::size_t i = 0; i < n_filler; ++i) words.push_back(filler[rng.below(filler.size())]);
      if (rng.bernoulli(config.number_rate)) words.push_back(std::to_string(2 + rng.below(4)));
      rng.shuffle(words);

      for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) f.text += ' ';
        f.text += words[i];
      }
      f.site = sites[rng.below(sites.size())];
      f.phenotype = phenotypes[rng.below(phenotypes.size())];
      fragments.push_back(std::move(f));
    }
  }
  return Corpus(std::move(fragments));
}

EmbeddingTable synthetic_embeddings(const SyntheticConfig& config, std::size_t dim,
                                    std::uint64_t seed, double spread) {
  if (dim == 0) throw std::invalid_argument("synthetic_embeddings: dim must be positive");
  EmbeddingTable table(dim, "synthetic(dim=" + std::to_string(dim) + ",seed=" +
                                std::to_string(seed) + ")");
  Rng rng(derive_seed(seed, "synthetic-embeddings"));
  std::vector<double> v(dim);
  auto add = [&](const std::string& token, const std::vector<double>* centre, double half_width) {
    for (std::size_t k = 0; k < dim; ++k) {
      v[k] = (centre ? (*centre)[k] : 0.0) + rng.uniform(-half_width, half_width);
    }
    if (!table.index_of(token)) table.add(token, v);
  };
  for (const auto& [id, cls] : config.classes) {
    std::vector<double> centre(dim);
    for (auto& x : centre) x = rng.uniform(-0.5, 0.5);
    for (const auto& cue : cls.cues) {
      for (const auto& token : tokenize(cue)) add(token, &centre, spread);
    }
  }
  const SyntheticConfig defaults = default_synthetic_config(0);
  for (const auto& word : pick_pool(config.filler, defaults.filler)) {
    for (const auto& token : tokenize(word)) add(token, nullptr, 0.5);
  }
  add("_number", nullptr, 0.5);
  return table;
}

}  // namespace phenopat
