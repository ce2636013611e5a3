#include "phenopat/svm.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "phenopat/error.hpp"
#include "phenopat/eval.hpp"
#include "phenopat/io.hpp"
#include "phenopat/random.hpp"

namespace phenopat {

std::string_view penalty_name(Penalty p) { return p == Penalty::L1 ? "l1" : "l2"; }

Penalty parse_penalty(std::string_view name) {
  if (name == "l1") return Penalty::L1;
  if (name == "l2") return Penalty::L2;
  throw ValidationError("unknown penalty \"" + std::string(name) + "\"");
}

ClassWeights ClassWeights::balanced(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int y : labels) pos += y > 0 ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw DegenerateLabelsError();
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(pos)), n / (2.0 * static_cast<double>(neg))};
}

double decision_function(const LinearModel& model, const SparseVector& x) {
  double s = model.bias;
  for (const auto& e : x.entries) {
    if (e.index >= model.weights.size()) {
      throw ValidationError("decision_function: feature index " + std::to_string(e.index) +
                            " beyond model dimension " + std::to_string(model.weights.size()));
    }
    s += model.weights[e.index] * e.value;
  }
  return s;
}

double decision_function(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) {
    throw ValidationError("decision_function: dimension " + std::to_string(x.size()) +
                          " does not match model dimension " + std::to_string(model.weights.size()));
  }
  double s = model.bias;
  for (std::size_t i = 0; i < x.size(); ++i) s += model.weights[i] * x[i];
  return s;
}

bool predict(const LinearModel& model, const SparseVector& x) {
  return predict_score(decision_function(model, x));
}

std::vector<double> default_c_grid() {
  std::vector<double> grid;
  for (int e = -6; e <= 3; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

namespace {

struct FoldData {
  std::vector<SparseVector> train_rows;
  std::vector<int> train_labels;
  std::vector<SparseVector> val_rows;
  std::vector<int> val_labels;
  bool usable = false;
};

bool both_classes(std::span<const int> labels) {
  bool pos = false, neg = false;
  for (int y : labels) (y > 0 ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

GridSearchOutcome grid_search_cv(const BinaryProblem& problem, const GridConfig& grid,
                                 std::uint64_t seed) {
  if (grid.folds < 2) throw std::invalid_argument("grid_search_cv: need at least 2 folds");
  if (grid.c_grid.empty() || grid.penalties.empty()) {
    throw std::invalid_argument("grid_search_cv: empty candidate grid");
  }
  if (!both_classes(problem.labels)) throw DegenerateLabelsError();

  std::vector<std::vector<std::size_t>> item_labels;
  for (int y : problem.labels) item_labels.push_back({y > 0 ? 0u : 1u});
  const std::vector<std::int64_t> weights(grid.folds, 1);
  const auto fold_of = stratified_assign(item_labels, 2, weights, derive_seed(seed, "cv-folds"));

  std::vector<FoldData> folds(grid.folds);
  for (std::size_t i = 0; i < problem.rows.size(); ++i) {
    for (std::size_t f = 0; f < grid.folds; ++f) {
      if (fold_of[i] == f) {
        folds[f].val_rows.push_back(problem.rows[i]);
        folds[f].val_labels.push_back(problem.labels[i]);
      } else {
        folds[f].train_rows.push_back(problem.rows[i]);
        folds[f].train_labels.push_back(problem.labels[i]);
      }
    }
  }
  for (auto& f : folds) f.usable = both_classes(f.train_labels) && both_classes(f.val_labels);
  if (std::none_of(folds.begin(), folds.end(), [](const FoldData& f) { return f.usable; })) {
    throw DegenerateLabelsError("every cross-validation fold is single-class");
  }

  GridSearchOutcome outcome;
  GridSearchResult& result = outcome.result;
  result.folds = grid.folds;
  for (double C : grid.c_grid) {
    for (Penalty penalty : grid.penalties) {
      CandidateScore candidate;
      candidate.C = C;
      candidate.penalty = penalty;
      double sum = 0.0;
      std::size_t defined = 0;
      for (const auto& fold : folds) {
        if (!fold.usable) {
          candidate.fold_auroc.push_back(std::nullopt);
          continue;
        }
        BinaryProblem sub{fold.train_rows, fold.train_labels, problem.dim};
        const auto model = train_linear_svm(sub, C, penalty, ClassWeights::balanced(fold.train_labels),
                                            grid.solver);
        ++result.fits;
        std::vector<double> scores;
        scores.reserve(fold.val_rows.size());
        for (const auto& x : fold.val_rows) scores.push_back(decision_function(model, x));
        const double auc = roc_auc(scores, fold.val_labels);
        candidate.fold_auroc.push_back(auc);
        sum += auc;
        ++defined;
      }
      candidate.mean_auroc = sum / static_cast<double>(defined);
      result.candidates.push_back(std::move(candidate));
    }
  }

  // Scan in (C ascending, L2 before L1) order; only a strictly better mean wins.
  std::vector<std::size_t> order(result.candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = result.candidates[a];
    const auto& cb = result.candidates[b];
    if (ca.C != cb.C) return ca.C < cb.C;
    return ca.penalty == Penalty::L2 && cb.penalty == Penalty::L1;
  });
  std::size_t best = order.front();
  for (std::size_t k : order) {
    if (result.candidates[k].mean_auroc > result.candidates[best].mean_auroc) best = k;
  }
  result.best_C = result.candidates[best].C;
  result.best_penalty = result.candidates[best].penalty;
  outcome.model = train_linear_svm(problem, result.best_C, result.best_penalty,
                                   ClassWeights::balanced(problem.labels), grid.solver);
  return outcome;
}

void write_grid_report(const GridSearchResult& result, std::ostream& out) {
  out << "C,penalty,fold,auroc\n";
  for (const auto& c : result.candidates) {
    for (std::size_t f = 0; f < c.fold_auroc.size(); ++f) {
      out << format_double(c.C) << ',' << penalty_name(c.penalty) << ',' << f << ','
          << (c.fold_auroc[f] ? format_double(*c.fold_auroc[f]) : std::string("NA")) << '\n';
    }
  }
}

bool OneVsAllModel::complete() const {
  return fits.size() == kPatternCount &&
         std::all_of(fits.begin(), fits.end(), [](const PatternFit& f) { return f.outcome.has_value(); });
}

OneVsAllModel train_one_vs_all(const FeatureMatrix& features, std::span<const LabelSet> labels,
                               const GridConfig& grid, std::uint64_t seed, std::size_t jobs) {
  if (features.rows.size() != labels.size()) {
    throw ValidationError("train_one_vs_all: feature rows and label sets differ in length");
  }
  OneVsAllModel ova;
  ova.fits.resize(kPatternCount);
  parallel_for(kPatternCount, jobs, [&](std::size_t p) {
    const PatternId id = kAllPatterns[p];
    PatternFit& fit = ova.fits[p];
    fit.pattern = id;
    std::vector<int> y(labels.size());
    std::size_t positives = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      y[i] = labels[i].contains(id) ? 1 : -1;
      positives += y[i] > 0 ? 1 : 0;
    }
    if (positives < grid.folds || positives == labels.size()) {
      fit.error = "degenerate labels: " + std::to_string(positives) + " positive of " +
                  std::to_string(labels.size()) + " (need >= " + std::to_string(grid.folds) +
                  " positives and at least one negative)";
      return;
    }
    try {
      BinaryProblem problem{features.rows, y, features.cols()};
      auto outcome = grid_search_cv(problem, grid, derive_seed(seed, "svm-pattern", p));
      outcome.model.config = features.config_name;
      outcome.model.columns = features.columns;
      fit.outcome = std::move(outcome);
    } catch (const Error& e) {
      fit.error = e.what();
    }
  });
  return ova;
}

std::string model_to_json(const LinearModel& model) {
  using nlohmann::json;
  json weights = json::array();
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    const std::string column = i < model.columns.size() ? model.columns[i] : "#" + std::to_string(i);
    weights.push_back({{"column", column}, {"value", model.weights[i]}});
  }
  json j = {
      {"penalty", penalty_name(model.penalty)},
      {"C", model.C},
      {"bias", model.bias},
      {"weights", std::move(weights)},
      {"config", model.config},
      {"class_weights", {{"positive", model.class_weights.positive},
                         {"negative", model.class_weights.negative}}},
  };
  return j.dump(1) + "\n";
}

LinearModel model_from_json(std::string_view text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("model", 0, e.what());
  }
  LinearModel m;
  try {
    m.penalty = parse_penalty(j.at("penalty").get<std::string>());
    m.C = j.at("C").get<double>();
    m.bias = j.at("bias").get<double>();
    m.config = j.value("config", "");
    for (const auto& w : j.at("weights")) {
      m.columns.push_back(w.at("column").get<std::string>());
      m.weights.push_back(w.at("value").get<double>());
    }
    if (auto cw = j.find("class_weights"); cw != j.end()) {
      m.class_weights = {cw->at("positive").get<double>(), cw->at("negative").get<double>()};
    }
  } catch (const json::exception& e) {
    throw ParseError("model", 0, e.what());
  }
  if (!(m.C > 0.0)) throw ValidationError("model C must be positive");
  return m;
}

}  // namespace phenopat
