// phenopat: command-line front end for the fragment classification pipeline.

#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "phenopat/error.hpp"
#include "phenopat/experiment.hpp"
#include "phenopat/graph.hpp"
#include "phenopat/io.hpp"
#include "phenopat/random.hpp"
#include "phenopat/synthetic.hpp"

namespace fs = std::filesystem;
using namespace phenopat;

namespace {

struct CommonFlags {
  std::string config;
  std::string corpus;
  std::string annotations;
  std::string lexicon;
  std::string embeddings;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_out = true) {
  cmd->add_option("--config", f.config, "experiment config (JSON)");
  cmd->add_option("--corpus", f.corpus, "fragment corpus (JSON Lines)");
  cmd->add_option("--annotations", f.annotations, "concept annotations (JSON Lines)");
  cmd->add_option("--lexicon", f.lexicon, "phrase lexicon used when no annotations are given");
  cmd->add_option("--embeddings", f.embeddings, "word vectors (text format)");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  if (needs_out) cmd->add_option("--out", f.out, "output directory");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(f.config);
  if (f.config.empty()) c.experiments = ExperimentConfig::default_experiments();
  if (!f.corpus.empty()) c.corpus = f.corpus;
  if (!f.annotations.empty()) c.annotations = fs::path(f.annotations);
  if (!f.lexicon.empty()) c.lexicon = fs::path(f.lexicon);
  if (!f.embeddings.empty()) c.embeddings = fs::path(f.embeddings);
  if (!f.out.empty()) c.out = f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.jobs) c.jobs = *f.jobs;
  if (c.corpus.empty()) throw ValidationError("no corpus: pass --corpus or set it in --config");
  return c;
}

std::optional<Split> load_split(const std::string& path, const Corpus& corpus) {
  if (path.empty()) return std::nullopt;
  return split_from_json(read_file(path), corpus);
}

int report_and_exit(std::span<const ReportRow> rows, const std::vector<Failure>& failures,
                    const fs::path& out, OutputSet outputs) {
  add_report_outputs(rows, outputs);
  write_outputs(out, outputs);
  for (const auto& f : failures) {
    std::cerr << "failed: " << f.experiment;
    if (f.pattern) std::cerr << " / " << pattern_name(*f.pattern);
    std::cerr << ": " << f.message << "\n";
  }
  std::cout << outputs.at("report.csv");
  return failures.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-pattern classification of phenotype algorithm fragments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic cue-word corpus");
  std::string gen_out, gen_config, gen_embeddings;
  std::size_t per_class = 20, gen_dim = 100;
  std::uint64_t gen_seed = 1;
  gen->add_option("--out", gen_out, "corpus file to write")->required();
  gen->add_option("--synthetic-config", gen_config, "class -> {cues, count} JSON");
  gen->add_option("--per-class", per_class, "fragments per class with the built-in config");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--embeddings-out", gen_embeddings, "also write clustered word vectors here");
  gen->add_option("--dim", gen_dim, "dimension of the written word vectors")->check(CLI::PositiveNumber);

  // ingest
  CommonFlags ingest_flags;
  auto* ingest = app.add_subcommand("ingest", "validate inputs and print a corpus summary");
  add_common(ingest, ingest_flags);

  // split
  CommonFlags split_flags;
  double split_ratio = 0.0;
  auto* split = app.add_subcommand("split", "label-stratified train/test split");
  add_common(split, split_flags);
  split->add_option("--ratio", split_ratio, "train share, default 0.7");

  // featurize
  CommonFlags feat_flags;
  std::string feat_name = "BOW", feat_split;
  auto* featurize = app.add_subcommand("featurize", "write train/test feature matrices");
  add_common(featurize, feat_flags);
  featurize->add_option("--feature", feat_name, "feature configuration, e.g. \"BOW + Site\"");
  featurize->add_option("--split", feat_split, "split file from `split`");

  // train-svm
  CommonFlags svm_flags;
  std::vector<std::string> svm_features;
  std::string svm_split;
  auto* train_svm = app.add_subcommand("train-svm", "grid-searched one-vs-all SVMs");
  add_common(train_svm, svm_flags);
  train_svm->add_option("--feature", svm_features, "feature configuration(s); default: config rows");
  train_svm->add_option("--split", svm_split, "split file from `split`");

  // train-cnn
  CommonFlags cnn_flags;
  std::string cnn_split;
  std::optional<std::size_t> cnn_epochs;
  auto* train_cnn_cmd = app.add_subcommand("train-cnn", "per-pattern CNN classifiers");
  add_common(train_cnn_cmd, cnn_flags);
  train_cnn_cmd->add_option("--split", cnn_split, "split file from `split`");
  train_cnn_cmd->add_option("--epochs", cnn_epochs, "override the epoch count");

  // evaluate
  CommonFlags eval_flags;
  std::string eval_split, eval_models, eval_feature = "BOW";
  bool eval_cnn = false;
  auto* evaluate = app.add_subcommand("evaluate", "score stored models on the test split");
  add_common(evaluate, eval_flags);
  evaluate->add_option("--models", eval_models, "directory with <Pattern>.json models")->required();
  evaluate->add_option("--feature", eval_feature, "feature configuration of SVM models");
  evaluate->add_flag("--cnn", eval_cnn, "models are CNN models");
  evaluate->add_option("--split", eval_split, "split file from `split`");

  // graph
  CommonFlags graph_flags;
  auto* graph = app.add_subcommand("graph", "co-occurrence networks and summary statistics");
  add_common(graph, graph_flags);

  // run-all
  CommonFlags all_flags;
  auto* run_all_cmd = app.add_subcommand("run-all", "the full experiment matrix");
  add_common(run_all_cmd, all_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const auto cfg = gen_config.empty() ? default_synthetic_config(per_class)
                                          : load_synthetic_config(gen_config);
      std::ostringstream out;
      write_corpus(generate_synthetic(cfg, gen_seed), out);
      write_file_atomic(gen_out, out.str());
      std::cerr << "wrote " << gen_out << "\n";
      if (!gen_embeddings.empty()) {
        std::ostringstream vectors;
        save_embeddings(synthetic_embeddings(cfg, gen_dim, gen_seed), vectors);
        write_file_atomic(gen_embeddings, vectors.str());
        std::cerr << "wrote " << gen_embeddings << "\n";
      }
      return 0;
    }

    if (*ingest) {
      const auto cfg = resolve(ingest_flags);
      const auto in = prepare_inputs(cfg, std::cerr);
      nlohmann::json labels = nlohmann::json::object();
      for (auto id : kAllPatterns) {
        std::size_t n = 0;
        for (const auto& f : in.corpus.fragments()) n += f.labels.contains(id) ? 1 : 0;
        labels[std::string(pattern_name(id))] = n;
      }
      nlohmann::json summary = {{"fragments", in.corpus.size()},
                                {"sites", in.corpus.sites()},
                                {"phenotypes", in.corpus.phenotypes()},
                                {"labels", labels},
                                {"annotations", in.concepts ? in.concepts->size() : 0},
                                {"embedding_rows", in.embeddings ? in.embeddings->size() : 0},
                                {"embedding_dim", in.embeddings ? in.embeddings->dim() : 0},
                                {"inputs", in.input_hashes}};
      std::cout << summary.dump(1) << "\n";
      if (!ingest_flags.out.empty()) {
        write_file_atomic(fs::path(ingest_flags.out) / "summary.json", summary.dump(1) + "\n");
      }
      return 0;
    }

    if (*split) {
      auto cfg = resolve(split_flags);
      if (split_ratio != 0.0) {
        if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ValidationError("--ratio must be in (0, 1)");
        cfg.split_ratio = Ratio::from_decimal(split_ratio);
      }
      cfg.embeddings.reset();
      cfg.train_embeddings.reset();
      const auto in = prepare_inputs(cfg, std::cerr);
      write_file_atomic(cfg.out / "split.json", split_to_json(in.split));
      std::cerr << "train " << in.split.train.size() << ", test " << in.split.test.size() << "\n";
      return 0;
    }

    if (*featurize) {
      const auto cfg = resolve(feat_flags);
      const auto corpus = parse_corpus(cfg.corpus);
      const auto in = prepare_inputs(cfg, std::cerr, load_split(feat_split, corpus));
      const auto features = FeatureConfig::parse(feat_name);
      FeatureArtifacts art{&in.stopwords, in.concepts ? &*in.concepts : nullptr, in.embeddings.get()};
      if (features.needs_embeddings() && !art.embeddings) {
        throw ValidationError("\"" + feat_name + "\" needs --embeddings");
      }
      if (features.needs_concepts() && !art.concepts) {
        throw ValidationError("\"" + feat_name + "\" needs --annotations or --lexicon");
      }
      const auto [train, test] = build_features(in.corpus, in.split, features, art);
      std::ostringstream tr, te;
      write_triplets_csv(train, tr);
      write_triplets_csv(test, te);
      const std::string slug = experiment_slug(feat_name);
      write_file_atomic(cfg.out / (slug + "_train.csv"), tr.str());
      write_file_atomic(cfg.out / (slug + "_test.csv"), te.str());
      std::cerr << train.cols() << " columns\n";
      return 0;
    }

    if (*train_svm || *train_cnn_cmd || *run_all_cmd) {
      if (*run_all_cmd) {
        const auto cfg = resolve(all_flags);
        const auto summary = run_all(cfg, std::cerr);
        std::cout << read_file(cfg.out / "report.csv");
        return summary.exit_code;
      }
      const bool cnn = train_cnn_cmd->parsed();
      auto cfg = resolve(cnn ? cnn_flags : svm_flags);
      if (cnn) {
        cfg.experiments = {std::string(kCnnExperiment)};
        if (cnn_epochs) cfg.cnn.epochs = *cnn_epochs;
      } else {
        if (!svm_features.empty()) cfg.experiments = svm_features;
        std::erase(cfg.experiments, std::string(kCnnExperiment));
      }
      cfg.validate();
      const auto corpus = parse_corpus(cfg.corpus);
      const auto in = prepare_inputs(cfg, std::cerr, load_split(cnn ? cnn_split : svm_split, corpus));
      OutputSet outputs;
      outputs["split.json"] = split_to_json(in.split);
      std::vector<ReportRow> rows;
      std::vector<Failure> failures;
      for (const auto& name : cfg.experiments) {
        auto outcome = cnn ? run_cnn_experiment(in, cfg, outputs, std::cerr)
                           : run_svm_experiment(in, FeatureConfig::parse(name), cfg, outputs, std::cerr);
        rows.push_back(outcome.row);
        failures.insert(failures.end(), outcome.failures.begin(), outcome.failures.end());
      }
      return report_and_exit(rows, failures, cfg.out, std::move(outputs));
    }

    if (*evaluate) {
      const auto cfg = resolve(eval_flags);
      const auto corpus = parse_corpus(cfg.corpus);
      const auto in = prepare_inputs(cfg, std::cerr, load_split(eval_split, corpus));
      auto outcome = eval_cnn ? evaluate_cnn_models(in, eval_models)
                              : evaluate_svm_models(in, FeatureConfig::parse(eval_feature), eval_models);
      std::vector<ReportRow> rows = {outcome.row};
      return report_and_exit(rows, outcome.failures, cfg.out, {});
    }

    if (*graph) {
      const auto cfg = resolve(graph_flags);
      const auto corpus = parse_corpus(cfg.corpus);
      OutputSet outputs;
      add_graph_outputs(corpus, outputs);
      write_outputs(cfg.out, outputs);
      std::cerr << "wrote " << outputs.size() << " files to " << cfg.out.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
