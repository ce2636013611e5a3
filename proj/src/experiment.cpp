#include "phenopat/experiment.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cctype>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "phenopat/error.hpp"
#include "phenopat/graph.hpp"
#include "phenopat/io.hpp"
#include "phenopat/random.hpp"

namespace phenopat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError(where + ": unknown key \"" + key + "\"");
    }
  }
}

GridConfig parse_grid(const json& j) {
  reject_unknown(j, {"c_grid", "penalties", "folds", "tolerance", "max_iterations"}, "grid");
  GridConfig g;
  if (j.contains("c_grid")) g.c_grid = j.at("c_grid").get<std::vector<double>>();
  if (j.contains("penalties")) {
    g.penalties.clear();
    for (const auto& p : j.at("penalties")) g.penalties.push_back(parse_penalty(p.get<std::string>()));
  }
  g.folds = get_or<std::size_t>(j, "folds", g.folds);
  g.solver.tolerance = get_or<double>(j, "tolerance", g.solver.tolerance);
  g.solver.max_iterations = get_or<std::size_t>(j, "max_iterations", g.solver.max_iterations);
  for (double c : g.c_grid) {
    if (!(c > 0.0)) throw ValidationError("grid: every C must be positive");
  }
  return g;
}

CnnConfig parse_cnn(const json& j) {
  reject_unknown(j, {"filter_widths", "filters_per_width", "batch_size", "epochs", "dropout",
                     "learning_rate", "validation_fraction"},
                 "cnn");
  CnnConfig c;
  if (j.contains("filter_widths")) c.filter_widths = j.at("filter_widths").get<std::vector<std::size_t>>();
  c.filters_per_width = get_or<std::size_t>(j, "filters_per_width", c.filters_per_width);
  c.batch_size = get_or<std::size_t>(j, "batch_size", c.batch_size);
  c.epochs = get_or<std::size_t>(j, "epochs", c.epochs);
  c.dropout = get_or<double>(j, "dropout", c.dropout);
  c.learning_rate = get_or<double>(j, "learning_rate", c.learning_rate);
  c.validation_fraction = get_or<double>(j, "validation_fraction", c.validation_fraction);
  c.validate();
  return c;
}

SgnsOptions parse_sgns(const json& j) {
  reject_unknown(j, {"dim", "window", "negatives", "epochs", "learning_rate"}, "train_embeddings");
  SgnsOptions o;
  o.dim = get_or<std::size_t>(j, "dim", o.dim);
  o.window = get_or<std::size_t>(j, "window", o.window);
  o.negatives = get_or<std::size_t>(j, "negatives", o.negatives);
  o.epochs = get_or<std::size_t>(j, "epochs", o.epochs);
  o.learning_rate = get_or<double>(j, "learning_rate", o.learning_rate);
  return o;
}

std::string hash_file(const fs::path& path) { return sha256_hex(read_file(path)); }

std::vector<LabelSet> labels_of(const std::vector<Fragment>& fragments) {
  std::vector<LabelSet> out;
  out.reserve(fragments.size());
  for (const auto& f : fragments) out.push_back(f.labels);
  return out;
}

// Failed patterns are scored as all-negative so the row can still be
// assembled; their cells are printed as NA.
ExperimentOutcome assemble(const std::string& name,
                           std::array<std::optional<PatternPredictions>, kPatternCount> predictions,
                           std::span<const LabelSet> gold, std::vector<Failure> failures) {
  ExperimentOutcome outcome;
  outcome.row.experiment = name;
  for (auto id : kAllPatterns) {
    auto& p = predictions[pattern_index(id)];
    if (!p) {
      outcome.row.failed.push_back(id);
      p = PatternPredictions{std::vector<bool>(gold.size(), false),
                             std::vector<double>(gold.size(), 0.0)};
    }
  }
  outcome.row.report = evaluate_multilabel(name, predictions, gold);
  outcome.failures = std::move(failures);
  return outcome;
}

std::string failure_text(const Failure& f) {
  std::string s = f.experiment;
  if (f.pattern) s += " / " + std::string(pattern_name(*f.pattern));
  return s + ": " + f.message;
}

FeatureArtifacts artifacts_of(const PreparedInputs& inputs) {
  FeatureArtifacts a;
  a.stopwords = &inputs.stopwords;
  a.concepts = inputs.concepts ? &*inputs.concepts : nullptr;
  a.embeddings = inputs.embeddings.get();
  return a;
}

}  // namespace

std::vector<std::string> ExperimentConfig::default_experiments() {
  std::vector<std::string> names;
  for (const auto& c : standard_feature_configs()) names.push_back(c.name());
  names.emplace_back(kCnnExperiment);
  return names;
}

ExperimentConfig ExperimentConfig::parse(std::string_view json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("config", 0, e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  reject_unknown(j,
                 {"corpus", "annotations", "lexicon", "embeddings", "stopwords", "train_embeddings",
                  "experiments", "split_ratio", "seed", "out", "jobs", "grid", "cnn"},
                 "config");
  ExperimentConfig c;
  try {
    if (j.contains("corpus")) c.corpus = resolve(base_dir, j.at("corpus").get<std::string>());
    for (auto [key, field] : {std::pair{"annotations", &c.annotations}, std::pair{"lexicon", &c.lexicon},
                              std::pair{"embeddings", &c.embeddings},
                              std::pair{"stopwords", &c.stopwords}}) {
      if (j.contains(key) && !j.at(key).is_null()) *field = resolve(base_dir, j.at(key).get<std::string>());
    }
    if (j.contains("train_embeddings") && !j.at("train_embeddings").is_null()) {
      c.train_embeddings = parse_sgns(j.at("train_embeddings"));
    }
    c.experiments = j.contains("experiments") ? j.at("experiments").get<std::vector<std::string>>()
                                              : default_experiments();
    if (j.contains("split_ratio")) {
      const double r = j.at("split_ratio").get<double>();
      if (!(r > 0.0 && r < 1.0)) throw ValidationError("split_ratio must be in (0, 1)");
      c.split_ratio = Ratio::from_decimal(r);
    }
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    if (j.contains("out")) c.out = resolve(base_dir, j.at("out").get<std::string>());
    c.jobs = get_or<std::size_t>(j, "jobs", c.jobs);
    if (j.contains("grid")) c.grid = parse_grid(j.at("grid"));
    if (j.contains("cnn")) c.cnn = parse_cnn(j.at("cnn"));
  } catch (const json::exception& e) {
    throw ParseError("config", 0, e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  return parse(read_file(path), path.parent_path());
}

void ExperimentConfig::validate() const {
  if (corpus.empty()) throw ValidationError("no corpus configured");
  if (experiments.empty()) throw ValidationError("no experiments configured");
  if (jobs == 0) throw ValidationError("jobs must be at least 1");
  std::set<std::string> seen;
  for (const auto& name : experiments) {
    if (!seen.insert(name).second) throw ValidationError("experiment \"" + name + "\" listed twice");
    const bool is_cnn = name == kCnnExperiment;
    const bool needs_embeddings = is_cnn || FeatureConfig::parse(name).needs_embeddings();
    const bool needs_concepts = !is_cnn && FeatureConfig::parse(name).needs_concepts();
    if (needs_embeddings && !embeddings && !train_embeddings) {
      throw ValidationError("experiment \"" + name +
                            "\" needs word embeddings: pass --embeddings or configure train_embeddings");
    }
    if (needs_embeddings && embeddings && !fs::exists(*embeddings)) {
      throw ValidationError("experiment \"" + name + "\" needs word embeddings but " +
                            embeddings->string() + " does not exist");
    }
    if (needs_concepts && !annotations && !lexicon) {
      throw ValidationError("experiment \"" + name +
                            "\" needs concept annotations: pass --annotations or configure a lexicon");
    }
    const auto& concept_file = annotations ? annotations : lexicon;
    if (needs_concepts && !fs::exists(*concept_file)) {
      throw ValidationError("experiment \"" + name + "\" needs concept annotations but " +
                            concept_file->string() + " does not exist");
    }
  }
}

PreparedInputs prepare_inputs(const ExperimentConfig& config, std::ostream& log,
                              std::optional<Split> split) {
  PreparedInputs in;
  log << "loading corpus " << config.corpus.string() << "\n";
  in.corpus = parse_corpus(config.corpus);
  in.input_hashes["corpus:" + config.corpus.filename().string()] = hash_file(config.corpus);
  if (config.stopwords) {
    in.stopwords = load_stopwords(*config.stopwords);
    in.input_hashes["stopwords:" + config.stopwords->filename().string()] = hash_file(*config.stopwords);
  } else {
    in.stopwords = default_stopwords();
  }
  if (config.annotations) {
    auto anns = parse_annotations(*config.annotations);
    validate_annotations(anns, in.corpus);
    in.concepts.emplace(anns);
    in.input_hashes["annotations:" + config.annotations->filename().string()] =
        hash_file(*config.annotations);
  } else if (config.lexicon) {
    const auto lexicon = ConceptLexicon::load(*config.lexicon);
    in.concepts.emplace(lexicon.annotate(in.corpus));
    in.input_hashes["lexicon:" + config.lexicon->filename().string()] = hash_file(*config.lexicon);
  }
  if (split) {
    in.split = std::move(*split);
  } else {
    in.split = split_corpus(in.corpus, config.split_ratio, derive_seed(config.seed, "split"));
  }
  for (const auto& w : in.split.warnings) log << "warning: " << w << "\n";
  if (config.embeddings) {
    log << "loading embeddings " << config.embeddings->string() << "\n";
    in.embeddings = std::make_shared<const EmbeddingTable>(load_embeddings(*config.embeddings));
    in.input_hashes["embeddings:" + config.embeddings->filename().string()] =
        hash_file(*config.embeddings);
  } else if (config.train_embeddings) {
    std::vector<TokenList> sentences;
    for (const auto& f : in.corpus.select(in.split.train)) {
      sentences.push_back(preprocess(f.text, in.stopwords));
    }
    SgnsOptions options = *config.train_embeddings;
    options.seed = derive_seed(config.seed, "sgns");
    log << "training skip-gram embeddings (dim " << options.dim << ")\n";
    in.embeddings = std::make_shared<const EmbeddingTable>(train_sgns(sentences, options).table);
  }
  return in;
}

std::string split_to_json(const Split& split) {
  json j = {{"seed", split.seed},
            {"ratio", {{"numerator", split.ratio.numerator}, {"denominator", split.ratio.denominator}}},
            {"train", split.train},
            {"test", split.test},
            {"warnings", split.warnings}};
  return j.dump(1) + "\n";
}

Split split_from_json(std::string_view text, const Corpus& corpus) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("split", 0, e.what());
  }
  Split s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.ratio.numerator = j.at("ratio").at("numerator").get<std::int64_t>();
    s.ratio.denominator = j.at("ratio").at("denominator").get<std::int64_t>();
    s.train = j.at("train").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    s.warnings = get_or<std::vector<std::string>>(j, "warnings", {});
  } catch (const json::exception& e) {
    throw ParseError("split", 0, e.what());
  }
  std::set<std::string> seen;
  for (const auto* half : {&s.train, &s.test}) {
    for (const auto& id : *half) {
      if (!corpus.find(id)) throw ValidationError("split references unknown fragment \"" + id + "\"");
      if (!seen.insert(id).second) throw ValidationError("split lists fragment \"" + id + "\" twice");
    }
  }
  return s;
}

std::string experiment_slug(std::string_view name) {
  std::string slug;
  bool pending = false;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (pending && !slug.empty()) slug += '_';
      pending = false;
      slug += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      pending = true;
    }
  }
  return slug;
}

std::string cnn_experiment_name(std::size_t dim) { return "CNN-" + std::to_string(dim); }

ExperimentOutcome run_svm_experiment(const PreparedInputs& inputs, const FeatureConfig& features,
                                     const ExperimentConfig& config, OutputSet& outputs,
                                     std::ostream& log) {
  const std::string name = features.name();
  const std::string slug = experiment_slug(name);
  log << "[" << name << "] featurizing\n";
  const auto [train, test] = build_features(inputs.corpus, inputs.split, features, artifacts_of(inputs));
  const auto train_labels = labels_of(inputs.corpus.select(inputs.split.train));
  const auto gold = labels_of(inputs.corpus.select(inputs.split.test));
  log << "[" << name << "] training one-vs-all (" << train.cols() << " columns)\n";
  const auto ova = train_one_vs_all(train, train_labels, config.grid,
                                    derive_seed(config.seed, "svm:" + name), config.jobs);

  std::array<std::optional<PatternPredictions>, kPatternCount> predictions;
  std::vector<Failure> failures;
  for (const auto& fit : ova.fits) {
    const std::string pname(pattern_name(fit.pattern));
    if (!fit.outcome) {
      failures.push_back({name, fit.pattern, fit.error});
      continue;
    }
    const auto& model = fit.outcome->model;
    PatternPredictions p;
    for (const auto& row : test.rows) {
      const double s = decision_function(model, row);
      p.scores.push_back(s);
      p.predicted.push_back(predict_score(s));
    }
    predictions[pattern_index(fit.pattern)] = std::move(p);
    outputs["models/" + slug + "/" + pname + ".json"] = model_to_json(model);
    std::ostringstream grid;
    write_grid_report(fit.outcome->result, grid);
    outputs["grid/" + slug + "/" + pname + ".csv"] = grid.str();
  }
  return assemble(name, std::move(predictions), gold, std::move(failures));
}

ExperimentOutcome run_cnn_experiment(const PreparedInputs& inputs, const ExperimentConfig& config,
                                     OutputSet& outputs, std::ostream& log) {
  if (!inputs.embeddings) throw ValidationError("CNN experiment needs word embeddings");
  CnnConfig cfg = config.cnn;
  cfg.embedding_dim = inputs.embeddings->dim();
  cfg.seed = derive_seed(config.seed, "cnn");
  const std::string name = cnn_experiment_name(cfg.embedding_dim);
  log << "[" << name << "] training " << kPatternCount << " classifiers, " << cfg.epochs
      << " epochs each\n";
  const auto train = inputs.corpus.select(inputs.split.train);
  const auto test = inputs.corpus.select(inputs.split.test);
  const auto fits = train_cnn_per_pattern(train, inputs.embeddings, cfg, inputs.stopwords, config.jobs);

  std::vector<TokenList> test_tokens;
  for (const auto& f : test) test_tokens.push_back(preprocess(f.text, inputs.stopwords));
  std::array<std::optional<PatternPredictions>, kPatternCount> predictions;
  std::vector<Failure> failures;
  for (const auto& fit : fits) {
    const std::string pname(pattern_name(fit.pattern));
    if (!fit.result) {
      failures.push_back({name, fit.pattern, fit.error});
      continue;
    }
    const auto& model = fit.result->model;
    PatternPredictions p;
    for (const auto& tokens : test_tokens) {
      const double prob = cnn_predict_proba(model, tokens);
      p.scores.push_back(prob);
      p.predicted.push_back(cnn_predict(prob));
    }
    predictions[pattern_index(fit.pattern)] = std::move(p);
    outputs["models/cnn/" + pname + ".json"] = cnn_model_to_json(model);
    std::ostringstream trace;
    write_cnn_trace(fit.result->trace, trace);
    outputs["traces/cnn/" + pname + ".csv"] = trace.str();
  }
  return assemble(name, std::move(predictions), labels_of(test), std::move(failures));
}

ExperimentOutcome evaluate_svm_models(const PreparedInputs& inputs, const FeatureConfig& features,
                                      const fs::path& model_dir) {
  const std::string name = features.name();
  const auto [train, test] = build_features(inputs.corpus, inputs.split, features, artifacts_of(inputs));
  (void)train;
  std::array<std::optional<PatternPredictions>, kPatternCount> predictions;
  std::vector<Failure> failures;
  for (auto id : kAllPatterns) {
    const fs::path path = model_dir / (std::string(pattern_name(id)) + ".json");
    if (!fs::exists(path)) {
      failures.push_back({name, id, "no model file " + path.string()});
      continue;
    }
    const auto model = model_from_json(read_file(path));
    if (model.columns != test.columns) {
      throw ValidationError(path.string() + ": model columns do not match the \"" + name +
                            "\" features of this split");
    }
    PatternPredictions p;
    for (const auto& row : test.rows) {
      const double s = decision_function(model, row);
      p.scores.push_back(s);
      p.predicted.push_back(predict_score(s));
    }
    predictions[pattern_index(id)] = std::move(p);
  }
  return assemble(name, std::move(predictions), labels_of(inputs.corpus.select(inputs.split.test)),
                  std::move(failures));
}

ExperimentOutcome evaluate_cnn_models(const PreparedInputs& inputs, const fs::path& model_dir) {
  if (!inputs.embeddings) throw ValidationError("CNN evaluation needs word embeddings");
  const std::string name = cnn_experiment_name(inputs.embeddings->dim());
  const auto test = inputs.corpus.select(inputs.split.test);
  std::array<std::optional<PatternPredictions>, kPatternCount> predictions;
  std::vector<Failure> failures;
  for (auto id : kAllPatterns) {
    const fs::path path = model_dir / (std::string(pattern_name(id)) + ".json");
    if (!fs::exists(path)) {
      failures.push_back({name, id, "no model file " + path.string()});
      continue;
    }
    const auto model = cnn_model_from_json(read_file(path), inputs.embeddings);
    PatternPredictions p;
    for (const auto& f : test) {
      const double prob = cnn_predict_proba(model, preprocess(f.text, inputs.stopwords));
      p.scores.push_back(prob);
      p.predicted.push_back(cnn_predict(prob));
    }
    predictions[pattern_index(id)] = std::move(p);
  }
  return assemble(name, std::move(predictions), labels_of(test), std::move(failures));
}

void add_graph_outputs(const Corpus& corpus, OutputSet& outputs) {
  const std::pair<EntityKind, EntityKind> axes[] = {
      {EntityKind::Site, EntityKind::Phenotype},
      {EntityKind::Pattern, EntityKind::Phenotype},
      {EntityKind::Pattern, EntityKind::Site},
  };
  for (const auto& [a, b] : axes) {
    const auto graph = build_cooccurrence(corpus, a, b);
    const std::string stem =
        "graphs/" + std::string(entity_kind_name(a)) + "-" + std::string(entity_kind_name(b));
    for (auto format : {GraphFormat::GraphML, GraphFormat::Dot, GraphFormat::Json}) {
      outputs[stem + "." + std::string(graph_format_extension(format))] = export_graph(graph, format);
    }
    outputs[stem + ".stats.json"] = graph_stats_json(graph_stats(graph));
  }
}

void add_report_outputs(std::span<const ReportRow> rows, OutputSet& outputs) {
  std::ostringstream rounded, full;
  write_report_csv(rows, rounded, 2);
  write_report_csv(rows, full, -1);
  outputs["report.csv"] = rounded.str();
  outputs["report_full.csv"] = full.str();
}

std::string build_manifest(const ExperimentConfig& config, const PreparedInputs& inputs,
                           const OutputSet& outputs, std::span<const Failure> failures) {
  json out = json::object();
  for (const auto& [path, content] : outputs) out[path] = sha256_hex(content);
  json fails = json::array();
  for (const auto& f : failures) {
    fails.push_back({{"experiment", f.experiment},
                     {"pattern", f.pattern ? json(std::string(pattern_name(*f.pattern))) : json()},
                     {"message", f.message}});
  }
  json grid_c = json::array();
  for (double c : config.grid.c_grid) grid_c.push_back(c);
  json penalties = json::array();
  for (auto p : config.grid.penalties) penalties.push_back(penalty_name(p));
  json j = {
      {"tool", "phenopat"},
      {"version", kVersion},
      {"libraries",
       {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
      {"seed", config.seed},
      {"split_ratio", std::to_string(config.split_ratio.numerator) + "/" +
                          std::to_string(config.split_ratio.denominator)},
      {"experiments", config.experiments},
      {"grid", {{"c_grid", grid_c}, {"penalties", penalties}, {"folds", config.grid.folds}}},
      {"cnn",
       {{"filter_widths", config.cnn.filter_widths},
        {"filters_per_width", config.cnn.filters_per_width},
        {"batch_size", config.cnn.batch_size},
        {"epochs", config.cnn.epochs},
        {"dropout", config.cnn.dropout},
        {"learning_rate", config.cnn.learning_rate},
        {"validation_fraction", config.cnn.validation_fraction}}},
      {"inputs", inputs.input_hashes},
      {"outputs", std::move(out)},
      {"failures", std::move(fails)},
  };
  return j.dump(1) + "\n";
}

void write_outputs(const fs::path& dir, const OutputSet& outputs) {
  for (const auto& [path, content] : outputs) write_file_atomic(dir / path, content);
}

RunSummary run_all(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const PreparedInputs inputs = prepare_inputs(config, log);
  OutputSet outputs;
  outputs["split.json"] = split_to_json(inputs.split);
  RunSummary summary;
  for (const auto& name : config.experiments) {
    ExperimentOutcome outcome;
    try {
      outcome = name == kCnnExperiment
                    ? run_cnn_experiment(inputs, config, outputs, log)
                    : run_svm_experiment(inputs, FeatureConfig::parse(name), config, outputs, log);
    } catch (const Error& e) {
      outcome.row.experiment = name == kCnnExperiment && inputs.embeddings
                                   ? cnn_experiment_name(inputs.embeddings->dim())
                                   : name;
      outcome.failures.push_back({outcome.row.experiment, std::nullopt, e.what()});
    }
    for (const auto& f : outcome.failures) log << "failed: " << failure_text(f) << "\n";
    summary.rows.push_back(std::move(outcome.row));
    summary.failures.insert(summary.failures.end(), outcome.failures.begin(), outcome.failures.end());
  }
  add_graph_outputs(inputs.corpus, outputs);
  add_report_outputs(summary.rows, outputs);
  const std::string manifest = build_manifest(config, inputs, outputs, summary.failures);
  outputs["manifest.json"] = manifest;
  write_outputs(config.out, outputs);

  const bool any_evaluated = std::any_of(summary.rows.begin(), summary.rows.end(),
                                         [](const ReportRow& r) { return r.report.has_value(); });
  summary.exit_code = summary.failures.empty() ? 0 : (any_evaluated ? 2 : 1);
  log << "wrote " << outputs.size() << " files to " << config.out.string() << "\n";
  return summary;
}

}  // namespace phenopat
