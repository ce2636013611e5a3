#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "phenopat/corpus.hpp"
#include "phenopat/embeddings.hpp"

namespace phenopat {

struct SyntheticClass {
  std::vector<std::string> cues;
  std::size_t count = 0;
  // Probability that a fragment of this class also carries the keyed label
  // (and one of that label's cue words).
  std::map<PatternId, double> co_labels;
};

struct SyntheticConfig {
  std::map<PatternId, SyntheticClass> classes;
  std::vector<std::string> filler;
  std::vector<std::string> sites;
  std::vector<std::string> phenotypes;
  std::size_t min_filler = 3;
  std::size_t max_filler = 6;
  double number_rate = 0.3;
};

// Six classes with clinical-flavoured cue words, `per_class` fragments each.
SyntheticConfig default_synthetic_config(std::size_t per_class = 20);

// JSON object mapping class name -> {"cues": [...], "count": n, "co_labels"?: {...}}.
// Filler, site and phenotype pools come from default_synthetic_config().
SyntheticConfig parse_synthetic_config(std::string_view json_text);
SyntheticConfig load_synthetic_config(const std::filesystem::path& path);

// Fragments mixing class cue words with shared filler words. Deterministic in
// (config, seed). Throws std::invalid_argument for an empty class set or a
// class without cues.
Corpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Stand-in for pretrained vectors: each class gets a random centre in
// [-0.5, 0.5]^dim and its cue words scatter around it by at most `spread` per
// coordinate. Filler words and "_number" are uniform in [-0.5, 0.5]^dim. A cue
// shared by two classes keeps its first vector.
EmbeddingTable synthetic_embeddings(const SyntheticConfig& config, std::size_t dim,
                                    std::uint64_t seed, double spread = 0.15);

}  // namespace phenopat
