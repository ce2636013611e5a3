#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phenopat/cnn.hpp"
#include "phenopat/concepts.hpp"
#include "phenopat/corpus.hpp"
#include "phenopat/embeddings.hpp"
#include "phenopat/eval.hpp"
#include "phenopat/features.hpp"
#include "phenopat/svm.hpp"

namespace phenopat {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr std::string_view kCnnExperiment = "CNN";

// Mirrors the experiment config file. Relative paths in the file are resolved
// against the file's directory.
struct ExperimentConfig {
  std::filesystem::path corpus;
  std::optional<std::filesystem::path> annotations;
  std::optional<std::filesystem::path> lexicon;  // used when annotations are absent
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> stopwords;
  // Skip-gram embeddings trained on the training fragments when no
  // embeddings file is given. The seed is derived from `seed`.
  std::optional<SgnsOptions> train_embeddings;
  std::vector<std::string> experiments;  // feature config names and/or "CNN"
  Ratio split_ratio;
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  std::size_t jobs = 1;
  GridConfig grid;
  CnnConfig cnn;  // embedding_dim and seed are filled in at run time

  // Ten feature rows plus the CNN row.
  static std::vector<std::string> default_experiments();
  // Throws ParseError / ValidationError. Unknown keys are rejected.
  static ExperimentConfig parse(std::string_view json_text, const std::filesystem::path& base_dir);
  static ExperimentConfig load(const std::filesystem::path& path);
  // Checks experiment names and that every required input is configured.
  void validate() const;
};

// Inputs loaded and fitted once per run.
struct PreparedInputs {
  Corpus corpus;
  StopWords stopwords;
  std::optional<ConceptIndex> concepts;
  std::shared_ptr<const EmbeddingTable> embeddings;
  Split split;
  std::map<std::string, std::string> input_hashes;  // file name -> sha256
};

// Loads the corpus and optional inputs, splits with derive_seed(seed, "split")
// (or uses `split`), and trains embeddings if requested.
PreparedInputs prepare_inputs(const ExperimentConfig& config, std::ostream& log,
                              std::optional<Split> split = std::nullopt);

std::string split_to_json(const Split& split);
// Throws ValidationError when ids are unknown or the halves overlap.
Split split_from_json(std::string_view text, const Corpus& corpus);

// File name stem for an experiment name, e.g. "BOW + Site" -> "bow_site".
std::string experiment_slug(std::string_view name);

struct Failure {
  std::string experiment;
  std::optional<PatternId> pattern;  // empty: the whole experiment failed
  std::string message;
};

// Relative path -> content, written together at the end of a command.
using OutputSet = std::map<std::string, std::string>;

struct ExperimentOutcome {
  ReportRow row;
  std::vector<Failure> failures;
};

// One-vs-all SVM rows. Writes models/<slug>/<Pattern>.json and
// grid/<slug>/<Pattern>.csv into `outputs`.
ExperimentOutcome run_svm_experiment(const PreparedInputs& inputs, const FeatureConfig& features,
                                     const ExperimentConfig& config, OutputSet& outputs,
                                     std::ostream& log);
// Per-pattern CNN row named "CNN-<dim>". Writes models/cnn/ and traces/cnn/.
ExperimentOutcome run_cnn_experiment(const PreparedInputs& inputs, const ExperimentConfig& config,
                                     OutputSet& outputs, std::ostream& log);
std::string cnn_experiment_name(std::size_t dim);

// Report rows from stored models against the test half of the split.
// Missing model files mark that pattern as failed.
ExperimentOutcome evaluate_svm_models(const PreparedInputs& inputs, const FeatureConfig& features,
                                      const std::filesystem::path& model_dir);
ExperimentOutcome evaluate_cnn_models(const PreparedInputs& inputs,
                                      const std::filesystem::path& model_dir);

// graphs/<a>-<b>.{graphml,dot,json} and graphs/<a>-<b>.stats.json for the
// three axis pairs.
void add_graph_outputs(const Corpus& corpus, OutputSet& outputs);

void add_report_outputs(std::span<const ReportRow> rows, OutputSet& outputs);

// manifest.json: seed, versions, input and output hashes, failures. Keys are
// sorted and no timestamps are recorded.
std::string build_manifest(const ExperimentConfig& config, const PreparedInputs& inputs,
                           const OutputSet& outputs, std::span<const Failure> failures);

// Writes every output atomically under `dir`.
void write_outputs(const std::filesystem::path& dir, const OutputSet& outputs);

struct RunSummary {
  std::vector<ReportRow> rows;
  std::vector<Failure> failures;
  int exit_code = 0;  // 0 ok, 2 partial failure, 1 nothing could be evaluated
};

// The whole experiment matrix: split, every configured row, graphs, report
// and manifest under config.out.
RunSummary run_all(const ExperimentConfig& config, std::ostream& log);

}  // namespace phenopat
