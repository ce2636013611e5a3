#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phenopat/corpus.hpp"
#include "phenopat/features.hpp"
#include "phenopat/sparse.hpp"

namespace phenopat {

enum class Penalty { L1, L2 };

std::string_view penalty_name(Penalty p);  // "l1" / "l2"
Penalty parse_penalty(std::string_view name);

// Per-class multipliers on the hinge terms.
struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;

  // cw(c) = N / (2 * N_c). Throws DegenerateLabelsError if a class is absent.
  static ClassWeights balanced(std::span<const int> labels);
  double of(int label) const { return label > 0 ? positive : negative; }
};

// Training rows with labels in {-1, +1}. Non-owning.
struct BinaryProblem {
  std::span<const SparseVector> rows;
  std::span<const int> labels;
  std::size_t dim = 0;
};

struct SolverOptions {
  // SMO stops once the relative duality gap is below this value.
  double tolerance = 1e-6;
  std::size_t max_iterations = 10'000'000;

  // Settings used as the long-run reference solve.
  static SolverOptions reference() { return {1e-12, 200'000'000}; }
};

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  Penalty penalty = Penalty::L2;
  double C = 1.0;
  ClassWeights class_weights;
  std::string config;                // feature configuration the model was trained on
  std::vector<std::string> columns;  // optional column names, same length as weights
};

struct SolveTrace {
  // Objective the solver itself minimizes, recorded once per pass over the
  // data (SMO: dual objective; L1: LP objective). Non-increasing.
  std::vector<double> objective;
  std::size_t iterations = 0;
  bool converged = false;
  double primal_objective = 0.0;
  double duality_gap = 0.0;  // L2 only
};

struct LinearSvmFit {
  LinearModel model;
  SolveTrace trace;
};

// minimize R(w) + C * sum_i cw(y_i) * max(0, 1 - y_i (w.x_i + b)),
// R = ||w||_1 (L1) or 0.5 ||w||_2^2 (L2), bias unpenalized.
// Throws DegenerateLabelsError for single-class labels, ValidationError for
// non-finite features or labels outside {-1, +1}, std::invalid_argument for C <= 0.
LinearSvmFit fit_linear_svm(const BinaryProblem& problem, double C, Penalty penalty,
                            const ClassWeights& weights, const SolverOptions& options = {});
LinearModel train_linear_svm(const BinaryProblem& problem, double C, Penalty penalty,
                             const ClassWeights& weights, const SolverOptions& options = {});

double svm_objective(const BinaryProblem& problem, std::span<const double> w, double b, double C,
                     Penalty penalty, const ClassWeights& weights);
// Gradient of the L2 objective w.r.t. (w, b) at a point where no example sits
// exactly on the margin. Returned vector has length dim + 1 (bias last).
std::vector<double> l2_objective_gradient(const BinaryProblem& problem, std::span<const double> w,
                                          double b, double C, const ClassWeights& weights);

// w.x + b. Throws ValidationError when x references a column beyond the model.
double decision_function(const LinearModel& model, const SparseVector& x);
double decision_function(const LinearModel& model, std::span<const double> x);
// Positive iff the score is strictly greater than zero.
bool predict(const LinearModel& model, const SparseVector& x);
inline bool predict_score(double score) { return score > 0.0; }

// ---------------------------------------------------------------------------
// Model selection

// 10^-6, 10^-5, ..., 10^3.
std::vector<double> default_c_grid();

struct GridConfig {
  std::vector<double> c_grid = default_c_grid();
  std::vector<Penalty> penalties = {Penalty::L1, Penalty::L2};
  std::size_t folds = 3;
  SolverOptions solver;
};

struct CandidateScore {
  double C = 0.0;
  Penalty penalty = Penalty::L2;
  std::vector<std::optional<double>> fold_auroc;  // nullopt: fold skipped
  double mean_auroc = 0.0;
};

struct GridSearchResult {
  double best_C = 0.0;
  Penalty best_penalty = Penalty::L2;
  std::size_t folds = 3;
  std::size_t fits = 0;  // fold fits performed
  std::vector<CandidateScore> candidates;
};

struct GridSearchOutcome {
  GridSearchResult result;
  LinearModel model;  // best candidate refit on all rows
};

// Stratified k-fold CV maximizing mean validation AUROC. Class weights are
// balanced per training fold. Ties go to the smaller C, then to L2. Folds
// whose validation (or training) part is single-class are skipped; if every
// fold of every candidate is skipped, throws DegenerateLabelsError.
GridSearchOutcome grid_search_cv(const BinaryProblem& problem, const GridConfig& grid,
                                 std::uint64_t seed);

// CSV "C,penalty,fold,auroc" with "NA" for skipped folds.
void write_grid_report(const GridSearchResult& result, std::ostream& out);

// ---------------------------------------------------------------------------
// One-vs-all

struct PatternFit {
  PatternId pattern;
  std::optional<GridSearchOutcome> outcome;
  std::string error;  // set when outcome is empty
};

struct OneVsAllModel {
  std::vector<PatternFit> fits;  // one per pattern, enumeration order

  bool complete() const;
  const PatternFit& at(PatternId id) const { return fits.at(pattern_index(id)); }
};

// One grid-searched classifier per pattern; pattern p's seed is
// derive_seed(seed, "svm-pattern", index(p)). Patterns with fewer positives
// than folds (or no negatives) record an error instead of aborting the rest.
OneVsAllModel train_one_vs_all(const FeatureMatrix& features, std::span<const LabelSet> labels,
                               const GridConfig& grid, std::uint64_t seed, std::size_t jobs = 1);

// {"penalty","C","bias","weights":[{"column","value"}],"config","class_weights"}.
std::string model_to_json(const LinearModel& model);
LinearModel model_from_json(std::string_view text);

}  // namespace phenopat
