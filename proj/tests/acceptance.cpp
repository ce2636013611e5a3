// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "phenopat/cnn.hpp"
#include "phenopat/concepts.hpp"
#include "phenopat/eval.hpp"
#include "phenopat/experiment.hpp"
#include "phenopat/graph.hpp"
#include "phenopat/io.hpp"
#include "phenopat/random.hpp"
#include "phenopat/svm.hpp"
#include "phenopat/synthetic.hpp"

using namespace phenopat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

fs::path data_dir() { return PHENOPAT_DATA_DIR; }

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^ static_cast<std::uint64_t>(
                                                 std::chrono::steady_clock::now().time_since_epoch().count()));
    path_ = fs::temp_directory_path() / ("phenopat-accept-" + tag + "-" + std::to_string(rng.next() % 1000000));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + PHENOPAT_CLI + "\" " + args + " >\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string fmt(double v, int decimals = 3) { return format_fixed(v, decimals); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1e", v);
  return buf;
}

// ---------------------------------------------------------------------------

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] > 0 && y[j] < 0) {
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
    }
  }
  return wins / pairs;
}

Outcome metric_oracles() {
  Outcome o;
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(99);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial % 2 ? rng.uniform(-1, 1) : static_cast<double>(rng.below(4));
      y[i] = rng.bernoulli(0.5) ? 1 : -1;
    }
    y[0] = 1;
    y[1] = -1;
    o.require(roc_auc(s, y) == pairwise_auc(s, y), "AUROC differs from the all-pairs count");

    std::vector<BinaryCounts> per(kPatternCount);
    std::vector<double> f1;
    std::size_t tp = 0, fp = 0, fn = 0;
    double sum = 0;
    for (auto& c : per) {
      std::vector<bool> pred(n), gold(n);
      for (std::size_t i = 0; i < n; ++i) {
        pred[i] = rng.bernoulli(0.4);
        gold[i] = rng.bernoulli(0.4);
        tp += pred[i] && gold[i];
        fp += pred[i] && !gold[i];
        fn += !pred[i] && gold[i];
      }
      c = count_binary(pred, gold);
      f1.push_back(f1_from_counts(c));
      const double den = static_cast<double>(2 * c.tp + c.fp + c.fn);
      sum += den == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / den;
    }
    const double den = static_cast<double>(2 * tp + fp + fn);
    o.require(micro_f1(per) == (den == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / den), "micro-F1 mismatch");
    o.require(macro_f1(f1) == sum / static_cast<double>(kPatternCount), "macro-F1 mismatch");
  }
  o.detail = o.pass ? "200 random instances" : o.detail;
  return o;
}

// ---------------------------------------------------------------------------

struct Data {
  std::vector<SparseVector> rows;
  std::vector<int> labels;
  std::size_t dim = 0;
  BinaryProblem problem() const { return {rows, labels, dim}; }
  void add(const std::vector<double>& x, int y) {
    dim = std::max(dim, x.size());
    rows.push_back(from_dense(x));
    labels.push_back(y);
  }
};

Data noisy(std::uint64_t seed, std::size_t n, std::size_t d, double flip) {
  Rng rng(seed);
  std::vector<double> w(d);
  for (auto& x : w) x = rng.uniform(-1, 1);
  Data data;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(d);
    double s = 0.1;
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = rng.uniform(-1, 1);
      s += w[k] * x[k];
    }
    data.add(x, (s > 0) != rng.bernoulli(flip) ? 1 : -1);
  }
  data.labels[0] = 1;
  data.labels[1] = -1;
  return data;
}

double train_accuracy(const LinearModel& m, const Data& d) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.rows.size(); ++i) ok += predict(m, d.rows[i]) == (d.labels[i] > 0);
  return static_cast<double>(ok) / static_cast<double>(d.rows.size());
}

Outcome svm_solver() {
  Outcome o;
  Data pair;
  pair.add({1, 0}, 1);
  pair.add({-1, 0}, -1);
  Data twenty;
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const int y = i % 2 ? -1 : 1;
    twenty.add({y * rng.uniform(0.5, 2.0), rng.uniform(-1, 1), rng.uniform(-1, 1)}, y);
  }
  for (auto penalty : {Penalty::L1, Penalty::L2}) {
    o.require(train_accuracy(train_linear_svm(pair.problem(), 1.0, penalty, {}), pair) == 1.0,
              "2-point fixture not separated");
    o.require(train_accuracy(train_linear_svm(twenty.problem(), 1.0, penalty, ClassWeights::balanced(twenty.labels)),
                             twenty) == 1.0,
              "20-point fixture not separated");
  }

  int points = 0;
  double worst_grad = 0;
  for (std::uint64_t seed = 1; points < 50; ++seed) {
    const Data d = noisy(seed, 15, 5, 0.3);
    const auto cw = ClassWeights::balanced(d.labels);
    std::vector<double> w(d.dim);
    for (auto& x : w) x = rng.uniform(-2, 2);
    const double b = rng.uniform(-1, 1);
    const double C = std::pow(10.0, rng.uniform(-2, 2));
    bool kink = false;
    for (std::size_t i = 0; i < d.rows.size(); ++i) kink |= std::abs(1 - d.labels[i] * (dot(d.rows[i], w) + b)) < 1e-3;
    if (kink) continue;
    const auto g = l2_objective_gradient(d.problem(), w, b, C, cw);
    const double h = 1e-6;
    for (std::size_t k = 0; k <= d.dim; ++k) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (k < d.dim) {
        wp[k] += h;
        wm[k] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd = (svm_objective(d.problem(), wp, bp, C, Penalty::L2, cw) -
                         svm_objective(d.problem(), wm, bm, C, Penalty::L2, cw)) /
                        (2 * h);
      worst_grad = std::max(worst_grad, std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k])));
    }
    ++points;
  }
  o.require(worst_grad <= 1e-5, "gradient off by " + std::to_string(worst_grad));

  double worst_dup = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Data d = noisy(seed, 24, 6, 0.2);
    Data dup = d;
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
      if (d.labels[i] > 0) {
        dup.rows.push_back(d.rows[i]);
        dup.labels.push_back(1);
      }
    }
    for (auto penalty : {Penalty::L1, Penalty::L2}) {
      const double a =
          fit_linear_svm(d.problem(), 0.7, penalty, {2.0, 1.0}, SolverOptions::reference()).trace.primal_objective;
      const double b =
          fit_linear_svm(dup.problem(), 0.7, penalty, {1.0, 1.0}, SolverOptions::reference()).trace.primal_objective;
      worst_dup = std::max(worst_dup, std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}));
    }
  }
  o.require(worst_dup <= 1e-6, "duplication vs weighting off by " + std::to_string(worst_dup));
  if (o.pass) o.detail = "gradient err " + sci(worst_grad) + ", dup/weight err " + sci(worst_dup);
  return o;
}

// ---------------------------------------------------------------------------

Outcome grid_search() {
  Outcome o;
  double lo = 1, hi = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Data d = noisy(seed, 150, 10, 0.0);
    Rng rng(derive_seed(seed, "noise-labels"));
    for (auto& y : d.labels) y = rng.bernoulli(0.5) ? 1 : -1;
    const auto out = grid_search_cv(d.problem(), GridConfig{}, seed);
    o.require(out.result.candidates.size() == 20, "candidate count " + std::to_string(out.result.candidates.size()));
    o.require(out.result.fits == 60 && out.result.folds == 3, "expected 3 folds per candidate");
    const auto grid = default_c_grid();
    double best = 0;
    for (const auto& c : out.result.candidates) {
      o.require(std::find(grid.begin(), grid.end(), c.C) != grid.end(), "candidate outside the grid");
      best = std::max(best, c.mean_auroc);
    }
    lo = std::min(lo, best);
    hi = std::max(hi, best);
  }
  o.require(lo >= 0.35 && hi <= 0.65, "best mean AUROC range [" + fmt(lo) + ", " + fmt(hi) + "]");
  if (o.pass) o.detail = "20 candidates x 3 folds; noise best AUROC in [" + fmt(lo) + ", " + fmt(hi) + "]";
  return o;
}

// ---------------------------------------------------------------------------

Outcome cnn_checks() {
  Outcome o;
  {
    auto table = std::make_shared<EmbeddingTable>(300, "zeros");
    table->add("x", std::vector<double>(300, 0.1));
    CnnConfig c;
    c.embedding_dim = 300;
    CnnModel m(c, table);
    m.initialize(1);
    o.require(pooled_features(m, SequenceMatrix::Constant(20, 300, 0.1)).size() == 150, "pooled length");
  }

  // gradient check, dimension 10, six tokens
  double worst = 0;
  {
    Rng rng(3);
    auto table = std::make_shared<EmbeddingTable>(10, "rand");
    for (int i = 0; i < 6; ++i) {
      std::vector<double> v(10);
      for (auto& x : v) x = rng.uniform(-0.5, 0.5);
      table->add("t" + std::to_string(i), v);
    }
    CnnConfig c;
    c.embedding_dim = 10;
    CnnModel m(c, table);
    m.initialize(3);
    const std::vector<SequenceMatrix> batch = {m.encode({"t0", "t1", "t2", "t3", "t4", "t5"})};
    const std::vector<double> target = {1.0};
    const auto g = compute_gradients(m, batch, target, std::uint64_t{9});
    for (Eigen::Index i = 0; i < m.parameters().size(); ++i) {
      CnnModel p = m, q = m;
      p.parameters()[i] += 1e-5;
      q.parameters()[i] -= 1e-5;
      const double fd = (compute_gradients(p, batch, target, std::uint64_t{9}).loss -
                         compute_gradients(q, batch, target, std::uint64_t{9}).loss) /
                        2e-5;
      worst = std::max(worst, std::abs(fd - g.gradient[i]) / std::max({std::abs(fd), std::abs(g.gradient[i]), 1e-6}));
    }
  }
  o.require(worst <= 1e-4, "gradient relative error " + std::to_string(worst));

  // overfit: two cue-word classes of twenty fragments
  SyntheticConfig synth = default_synthetic_config(20);
  std::erase_if(synth.classes, [](const auto& kv) {
    return kv.first != PatternId::WhereDidItHappen && kv.first != PatternId::CredentialsOfTheActor;
  });
  const Corpus corpus = generate_synthetic(synth, 2);
  std::vector<TokenList> docs;
  std::vector<int> y;
  for (const auto& f : corpus.fragments()) {
    docs.push_back(preprocess(f.text, default_stopwords()));
    y.push_back(f.labels.contains(PatternId::WhereDidItHappen) ? 1 : 0);
  }
  const auto table = std::make_shared<EmbeddingTable>(synthetic_embeddings(synth, 100, 2));
  CnnConfig c;  // batch 15, dropout 0.5, lr 0.001, 200 epochs
  c.embedding_dim = 100;
  const auto result = train_cnn(docs, y, table, c);
  std::vector<bool> pred, gold;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    pred.push_back(cnn_predict(cnn_predict_proba(result.model, docs[i])));
    gold.push_back(y[i] == 1);
  }
  const double f1 = f1_from_counts(count_binary(pred, gold));
  o.require(docs.size() == 40 && f1 == 1.0, "train F1 " + fmt(f1) + " on " + std::to_string(docs.size()));
  if (o.pass) o.detail = "pooled 150, gradient err " + sci(worst) + ", train F1 1.0 on 40 examples";
  return o;
}

// ---------------------------------------------------------------------------

Outcome synthetic_reproduction() {
  Outcome o;
  int bow_wins = 0;
  std::string scores;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ScratchDir dir("repro");
    auto config = ExperimentConfig::load(data_dir() / "experiment_synthetic.json");
    config.experiments = {"BOW", std::string(kCnnExperiment)};
    config.seed = seed;
    config.out = dir / "out";
    std::ostringstream log;
    const RunSummary run = run_all(config, log);
    if (run.rows.size() != 2 || !run.rows[0].report || !run.rows[1].report) {
      o.require(false, "seed " + std::to_string(seed) + ": a row failed");
      continue;
    }
    const double bow = run.rows[0].report->macro_f1;
    const double cnn = run.rows[1].report->macro_f1;
    o.require(bow >= 0.90, "seed " + std::to_string(seed) + ": BOW macro-F1 " + fmt(bow));
    o.require(cnn >= 0.80, "seed " + std::to_string(seed) + ": CNN macro-F1 " + fmt(cnn));
    bow_wins += bow >= cnn;
    scores += (scores.empty() ? "" : " ") + fmt(bow, 2) + "/" + fmt(cnn, 2);
  }
  o.require(bow_wins >= 3, "BOW >= CNN on only " + std::to_string(bow_wins) + " of 5 seeds");
  if (o.pass) o.detail = "BOW/CNN macro-F1 by seed: " + scores + "; BOW ahead on " + std::to_string(bow_wins) + "/5";
  return o;
}

// ---------------------------------------------------------------------------

Outcome split_contract() {
  Outcome o;
  const std::map<PatternId, std::pair<int, int>> reference = {
      {PatternId::WhereDidItHappen, {14, 5}},  {PatternId::CredentialsOfTheActor, {14, 5}},
      {PatternId::CheckForNegation, {15, 6}},  {PatternId::ConfirmDiseaseWasChecked, {15, 6}},
      {PatternId::UseDistinctDates, {28, 11}}, {PatternId::RuleOfN, {39, 14}}};
  std::vector<Fragment> frags;
  for (const auto& [id, counts] : reference) {
    for (int i = 0; i < counts.first + counts.second; ++i) {
      frags.push_back({std::string(pattern_name(id)) + std::to_string(i), "text", "s", "p", {id}});
    }
  }
  const Corpus corpus(std::move(frags));
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Split s = split_corpus(corpus, Ratio::from_decimal(0.7), seed);
    std::map<PatternId, std::pair<int, int>> got;
    for (const auto& id : s.train) ++got[corpus.find(id)->labels.members()[0]].first;
    for (const auto& id : s.test) ++got[corpus.find(id)->labels.members()[0]].second;
    for (const auto& [id, want] : reference) {
      o.require(std::abs(got[id].first - want.first) <= 1 && std::abs(got[id].second - want.second) <= 1,
                std::string(pattern_name(id)) + " split " + std::to_string(got[id].first) + "/" +
                    std::to_string(got[id].second));
    }
  }
  if (o.pass) o.detail = "six reference class sizes, 10 seeds, all within 1";
  return o;
}

// ---------------------------------------------------------------------------

Outcome graph_oracle() {
  Outcome o;
  Rng rng(77);
  const std::vector<std::pair<EntityKind, EntityKind>> axes = {
      {EntityKind::Site, EntityKind::Phenotype}, {EntityKind::Pattern, EntityKind::Phenotype},
      {EntityKind::Pattern, EntityKind::Site}};
  auto names = [](const Fragment& f, EntityKind k) {
    std::vector<std::string> out;
    if (k == EntityKind::Site) out.push_back(f.site);
    if (k == EntityKind::Phenotype) out.push_back(f.phenotype);
    if (k == EntityKind::Pattern) {
      for (auto id : f.labels.members()) out.emplace_back(pattern_name(id));
    }
    return out;
  };
  int fixtures = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Fragment> frags;
    const std::size_t n = 1 + rng.below(50);
    for (std::size_t i = 0; i < n; ++i) {
      LabelSet labels{kAllPatterns[rng.below(kPatternCount)]};
      if (rng.bernoulli(0.3)) labels.insert(kAllPatterns[rng.below(kPatternCount)]);
      frags.push_back({"f" + std::to_string(i), "t", "site" + std::to_string(rng.below(5)),
                       "ph" + std::to_string(rng.below(6)), labels});
    }
    const Corpus corpus(std::move(frags));
    for (const auto& [ka, kb] : axes) {
      const auto g = build_cooccurrence(corpus, ka, kb);
      for (const auto& node : g.nodes) {
        std::size_t size = 0;
        for (const auto& f : corpus.fragments()) {
          for (const auto& x : names(f, node.kind)) size += x == node.name;
        }
        o.require(size == node.size, "node size differs from recount");
      }
      std::size_t edges = 0;
      std::map<std::pair<std::string, std::string>, std::size_t> recount;
      for (const auto& f : corpus.fragments()) {
        for (const auto& a : names(f, ka)) {
          for (const auto& b : names(f, kb)) ++recount[{a, b}];
        }
      }
      for (const auto& e : g.edges) {
        o.require(recount[{e.a, e.b}] == e.weight, "edge weight differs from recount");
        ++edges;
      }
      o.require(edges == recount.size(), "edge count differs from recount");
      o.require(graph_from_json(export_graph(g, GraphFormat::Json)) == g, "json round trip");
      for (auto f : {GraphFormat::GraphML, GraphFormat::Dot, GraphFormat::Json}) {
        o.require(export_graph(g, f) == export_graph(build_cooccurrence(corpus, ka, kb), f), "export not byte-stable");
      }
      ++fixtures;
    }
  }
  if (o.pass) o.detail = std::to_string(fixtures) + " graphs from corpora of at most 50 fragments";
  return o;
}

// ---------------------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  ScratchDir dir("determinism");
  const auto config = quoted(data_dir() / "experiment_synthetic.json");
  const int a = run_cli("run-all --config " + config + " --out " + quoted(dir / "a"), dir / "a.log");
  const int b = run_cli("run-all --config " + config + " --out " + quoted(dir / "b"), dir / "b.log");
  o.require(a == 0 && b == 0, "run-all exit codes " + std::to_string(a) + ", " + std::to_string(b));
  if (!o.pass) return o;
  const std::string ma = read_file(dir / "a/manifest.json");
  o.require(ma == read_file(dir / "b/manifest.json"), "manifests differ");
  if (o.pass) o.detail = "manifest sha256 " + sha256_hex(ma).substr(0, 16) + " on both runs";
  return o;
}

// ---------------------------------------------------------------------------

Outcome user_supplied_inputs() {
  Outcome o;
  ScratchDir dir("user");
  // a fresh corpus, concept annotations in the documented JSON Lines format and
  // 200-d vectors, none of them the bundled files
  SyntheticConfig synth = default_synthetic_config(25);
  synth.classes[PatternId::RuleOfN].count = 35;
  const Corpus corpus = generate_synthetic(synth, 11);
  const auto annotations = ConceptLexicon::load(data_dir() / "toy_lexicon.jsonl").annotate(corpus);
  {
    std::ofstream c(dir / "fragments.jsonl");
    write_corpus(corpus, c);
    std::ofstream a(dir / "metamap.jsonl");
    write_annotations(annotations, a);
    std::ofstream e(dir / "vectors.txt");
    save_embeddings(synthetic_embeddings(synth, 200, 11), e);
  }
  const int rc = run_cli("run-all --corpus " + quoted(dir / "fragments.jsonl") + " --annotations " +
                             quoted(dir / "metamap.jsonl") + " --embeddings " + quoted(dir / "vectors.txt") +
                             " --seed 3 --out " + quoted(dir / "out"),
                         dir / "run.log");
  o.require(rc == 0, "run-all exit code " + std::to_string(rc));
  if (!o.pass) return o;

  std::istringstream report(read_file(dir / "out/report.csv"));
  std::string line;
  std::getline(report, line);
  o.require(line == "experiment,Disease,Rule of N,Dates,Credential,Where,Negation,Macro-f1,Micro-f1", "header");
  auto expected = ExperimentConfig::default_experiments();
  expected.back() = cnn_experiment_name(200);
  std::size_t rows = 0;
  while (std::getline(report, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    o.require(rows < expected.size() && cells.size() == 9 && cells[0] == expected[rows], "row " + line);
    for (std::size_t k = 1; k < cells.size(); ++k) o.require(cells[k] != "NA", "NA cell in " + line);
    ++rows;
  }
  o.require(rows == 11, std::to_string(rows) + " rows");
  if (o.pass) {
    o.detail = "11 rows x 8 metric columns from " + std::to_string(corpus.size()) + " fragments, " +
               std::to_string(annotations.size()) + " annotations";
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string title;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "metric oracles", 10, metric_oracles},
      {2, "svm solver", 30, svm_solver},
      {3, "grid search", 0, grid_search},
      {4, "cnn checks", 300, cnn_checks},
      {5, "synthetic reproduction", 0, synthetic_reproduction},
      {6, "split contract", 0, split_contract},
      {7, "graph oracle", 0, graph_oracle},
      {8, "run-all determinism", 0, determinism},
      {9, "user-supplied inputs", 0, user_supplied_inputs},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s && o.pass) {
      o.pass = false;
      o.detail = "took " + fmt(secs, 1) + " s, budget " + fmt(c.budget_s, 0) + " s";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << "  " << c.title << "  (" << o.detail << "; "
              << fmt(secs, 1) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
