// Exact solvers for the hinge-loss linear SVM.
//
// L2: SMO on the dual  min_a 0.5 a'Qa - e'a,  0 <= a_i <= C cw_i,  y'a = 0,
//     Q_ij = y_i y_j x_i.x_j  (working-set selection with second-order
//     information, as in LIBSVM). The equality constraint is what keeps the
//     bias unpenalized.
// L1: dense-tableau primal simplex on
//     min sum_j (u_j + v_j) + C sum_i cw_i xi_i
//     s.t. y_i (x_i.(u - v) + b+ - b-) + xi_i - s_i = 1,  all variables >= 0,
//     starting from the feasible basis {xi}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "phenopat/error.hpp"
#include "phenopat/svm.hpp"

namespace phenopat {

namespace {

constexpr double kTau = 1e-12;

void validate_problem(const BinaryProblem& problem, double C) {
  if (!(C > 0.0) || !std::isfinite(C)) throw std::invalid_argument("C must be positive and finite");
  if (problem.rows.size() != problem.labels.size()) {
    throw ValidationError("row count and label count differ");
  }
  bool has_pos = false, has_neg = false;
  for (int y : problem.labels) {
    if (y == 1) {
      has_pos = true;
    } else if (y == -1) {
      has_neg = true;
    } else {
      throw ValidationError("labels must be -1 or +1");
    }
  }
  if (!has_pos || !has_neg) throw DegenerateLabelsError();
  for (const auto& row : problem.rows) {
    for (const auto& e : row.entries) {
      if (!std::isfinite(e.value)) throw ValidationError("non-finite feature value");
      if (e.index >= problem.dim) throw ValidationError("feature index beyond problem dimension");
    }
  }
}

std::vector<double> scores_without_bias(const BinaryProblem& problem, std::span<const double> w) {
  std::vector<double> s(problem.rows.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = dot(problem.rows[i], w);
  return s;
}

// Weighted training error of sign(s + b), score exactly 0 counted negative.
double weighted_error(std::span<const double> s, std::span<const int> y, std::span<const double> u,
                      double b) {
  double err = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s[i] + b > 0.0) != (y[i] > 0)) err += u[i];
  }
  return err;
}

// A flat hinge minimum leaves b undetermined on [lo, hi]. Among the pieces of
// that interval cut at the points where a prediction flips, take the one with
// the lowest weighted training error (widest on ties) and return its midpoint.
double break_flat_tie(std::span<const double> s, std::span<const int> y, std::span<const double> u,
                      double lo, double hi) {
  std::vector<double> cuts = {lo};
  for (double si : s) {
    if (-si > lo && -si < hi) cuts.push_back(-si);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  double best_b = 0.5 * (lo + hi);
  double best_err = std::numeric_limits<double>::infinity();
  double best_width = -1.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double width = cuts[k + 1] - cuts[k];
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    const double err = weighted_error(s, y, u, mid);
    if (err < best_err || (err == best_err && width > best_width)) {
      best_err = err;
      best_width = width;
      best_b = mid;
    }
  }
  return best_b;
}

// Minimizer of sum_i u_i max(0, 1 - y_i (s_i + b)).
double optimal_bias(std::span<const double> s, std::span<const int> y, std::span<const double> u) {
  struct Breakpoint {
    double at;
    double weight;
  };
  std::vector<Breakpoint> points;
  points.reserve(s.size());
  double slope = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] > 0) {
      points.push_back({1.0 - s[i], u[i]});
      slope -= u[i];
    } else {
      points.push_back({-1.0 - s[i], u[i]});
    }
    total += u[i];
  }
  std::sort(points.begin(), points.end(), [](const Breakpoint& a, const Breakpoint& b) {
    return a.at < b.at || (a.at == b.at && a.weight < b.weight);
  });
  const double flat = 1e-12 * total;
  for (std::size_t i = 0; i < points.size();) {
    std::size_t j = i;
    while (j < points.size() && points[j].at == points[i].at) slope += points[j++].weight;
    if (slope > flat) return points[i].at;
    if (slope >= -flat) {
      if (j == points.size()) return points[i].at;
      return break_flat_tie(s, y, u, points[i].at, points[j].at);
    }
    i = j;
  }
  return points.empty() ? 0.0 : points.back().at;
}

std::vector<double> upper_bounds(const BinaryProblem& problem, double C, const ClassWeights& cw) {
  std::vector<double> u(problem.labels.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = C * cw.of(problem.labels[i]);
  return u;
}

double finalize_bias(const BinaryProblem& problem, std::span<const double> w,
                     std::span<const double> upper) {
  const auto s = scores_without_bias(problem, w);
  return optimal_bias(s, problem.labels, upper);
}

// ---------------------------------------------------------------------------
// L2: SMO

LinearSvmFit solve_l2(const BinaryProblem& problem, double C, const ClassWeights& cw,
                      const SolverOptions& options) {
  const std::size_t n = problem.rows.size();
  const std::size_t dim = problem.dim;
  const auto& y = problem.labels;
  const auto upper = upper_bounds(problem, C, cw);

  // Gram matrix of the (small) training set.
  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      K[i * n + j] = K[j * n + i] = dot(problem.rows[i], problem.rows[j]);
    }
  }
  auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K[i * n + j]; };

  std::vector<double> alpha(n, 0.0);
  std::vector<double> G(n, -1.0);
  double dual = 0.0;  // 0.5 a'Qa - e'a, tracked per step
  const double kkt_eps = 1e-12;

  LinearSvmFit fit;
  fit.model.weights.assign(dim, 0.0);
  auto evaluate = [&]() {
    std::fill(fit.model.weights.begin(), fit.model.weights.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (alpha[i] == 0.0) continue;
      for (const auto& e : problem.rows[i].entries) fit.model.weights[e.index] += alpha[i] * y[i] * e.value;
    }
    fit.model.bias = finalize_bias(problem, fit.model.weights, upper);
    const double primal =
        svm_objective(problem, fit.model.weights, fit.model.bias, C, Penalty::L2, cw);
    double exact_dual = 0.0;
    for (std::size_t i = 0; i < n; ++i) exact_dual += 0.5 * alpha[i] * (G[i] - 1.0);
    fit.trace.primal_objective = primal;
    fit.trace.duality_gap = primal + exact_dual;
    return fit.trace.duality_gap <= options.tolerance * primal;
  };

  std::size_t iter = 0;
  bool kkt_optimal = false;
  while (iter < options.max_iterations) {
    // Working set selection.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (alpha[t] < upper[t] && -G[t] >= gmax) {
          gmax = -G[t];
          i = t;
        }
      } else if (alpha[t] > 0.0 && G[t] >= gmax) {
        gmax = G[t];
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_decrease = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (alpha[t] > 0.0) {
          const double grad_diff = gmax + G[t];
          gmax2 = std::max(gmax2, G[t]);
          if (grad_diff > 0.0) {
            double quad = K[i * n + i] + K[t * n + t] - 2.0 * y[i] * Q(i, t);
            if (quad <= 0.0) quad = kTau;
            const double decrease = -(grad_diff * grad_diff) / quad;
            if (decrease <= best_decrease) {
              j = t;
              best_decrease = decrease;
            }
          }
        }
      } else if (alpha[t] < upper[t]) {
        const double grad_diff = gmax - G[t];
        gmax2 = std::max(gmax2, -G[t]);
        if (grad_diff > 0.0) {
          double quad = K[i * n + i] + K[t * n + t] + 2.0 * y[i] * Q(i, t);
          if (quad <= 0.0) quad = kTau;
          const double decrease = -(grad_diff * grad_diff) / quad;
          if (decrease <= best_decrease) {
            j = t;
            best_decrease = decrease;
          }
        }
      }
    }
    if (i == n || j == n || gmax + gmax2 < kkt_eps) {
      kkt_optimal = true;
      break;
    }

    const double old_i = alpha[i];
    const double old_j = alpha[j];
    const double Ci = upper[i];
    const double Cj = upper[j];
    const double Qij = Q(i, j);
    double g_dir = 0.0;
    double q_dir = 0.0;
    if (y[i] != y[j]) {
      double quad = K[i * n + i] + K[j * n + j] + 2.0 * Qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > Ci - Cj) {
        if (alpha[i] > Ci) {
          alpha[i] = Ci;
          alpha[j] = Ci - diff;
        }
      } else if (alpha[j] > Cj) {
        alpha[j] = Cj;
        alpha[i] = Cj + diff;
      }
      g_dir = G[i] + G[j];
      q_dir = K[i * n + i] + K[j * n + j] + 2.0 * Qij;
    } else {
      double quad = K[i * n + i] + K[j * n + j] - 2.0 * Qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > Ci) {
        if (alpha[i] > Ci) {
          alpha[i] = Ci;
          alpha[j] = sum - Ci;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > Cj) {
        if (alpha[j] > Cj) {
          alpha[j] = Cj;
          alpha[i] = sum - Cj;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
      g_dir = G[j] - G[i];
      q_dir = K[i * n + i] + K[j * n + j] - 2.0 * Qij;
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    // Step length along the feasible direction; the decrease is d(g + qd/2).
    const double d = dj;
    // Never positive in exact arithmetic; a zero-length step may round above 0.
    const double change = d * (g_dir + 0.5 * q_dir * d);
    dual += std::min(change, 0.0);
    for (std::size_t k = 0; k < n; ++k) G[k] += Q(k, i) * di + Q(k, j) * dj;
    ++iter;

    if (iter % std::max<std::size_t>(n, 1) == 0) {
      fit.trace.objective.push_back(dual);
      if (evaluate()) {
        fit.trace.converged = true;
        break;
      }
    }
  }
  fit.trace.objective.push_back(dual);
  const bool gap_ok = evaluate();
  fit.trace.converged = fit.trace.converged || gap_ok || kkt_optimal;
  fit.trace.iterations = iter;
  return fit;
}

// ---------------------------------------------------------------------------
// L1: primal simplex

LinearSvmFit solve_l1(const BinaryProblem& problem, double C, const ClassWeights& cw,
                      const SolverOptions& options) {
  const std::size_t n = problem.rows.size();
  const std::size_t d = problem.dim;
  const auto& y = problem.labels;
  const auto upper = upper_bounds(problem, C, cw);

  const std::size_t u0 = 0, v0 = d, bp = 2 * d, bn = 2 * d + 1, xi0 = 2 * d + 2, s0 = xi0 + n;
  const std::size_t cols = s0 + n;

  std::vector<double> cost(cols, 0.0);
  for (std::size_t j = 0; j < 2 * d; ++j) cost[j] = 1.0;
  for (std::size_t i = 0; i < n; ++i) cost[xi0 + i] = upper[i];
  const double max_cost = *std::max_element(cost.begin(), cost.end());

  std::vector<double> T(n * cols, 0.0);
  std::vector<double> rhs(n, 1.0);
  std::vector<std::size_t> basis(n);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = &T[i * cols];
    for (const auto& e : problem.rows[i].entries) {
      row[u0 + e.index] = y[i] * e.value;
      row[v0 + e.index] = -y[i] * e.value;
    }
    row[bp] = y[i];
    row[bn] = -y[i];
    row[xi0 + i] = 1.0;
    row[s0 + i] = -1.0;
    basis[i] = xi0 + i;
  }
  std::vector<double> reduced;
  double objective = 0.0;
  // Recomputed from the tableau now and then; the per-pivot update drifts.
  auto reprice = [&] {
    reduced = cost;
    objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double cb = cost[basis[i]];
      objective += cb * rhs[i];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < cols; ++j) reduced[j] -= cb * T[i * cols + j];
    }
    for (std::size_t i = 0; i < n; ++i) reduced[basis[i]] = 0.0;
  };
  reprice();

  const double price_eps = 1e-11 * (1.0 + max_cost);
  const double pivot_eps = 1e-11;
  const std::size_t max_pivots =
      std::min<std::size_t>(options.max_iterations, 200 * (n + cols) + 1000);

  LinearSvmFit fit;
  std::size_t pivots = 0;
  std::size_t degenerate_run = 0;
  bool optimal = false;
  std::vector<char> blocked(cols, 0);
  while (pivots < max_pivots) {
    const bool bland = degenerate_run > 50;
    std::size_t q = cols;
    double most_negative = -price_eps;
    for (std::size_t j = 0; j < cols; ++j) {
      if (reduced[j] < most_negative && !blocked[j]) {
        q = j;
        if (bland) break;
        most_negative = reduced[j];
      }
    }
    if (q == cols) {
      optimal = true;
      break;
    }
    std::size_t p = n;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double a = T[i * cols + q];
      if (a <= pivot_eps) continue;
      const double ratio = rhs[i] / a;
      if (p == n || ratio < best_ratio || (ratio == best_ratio && basis[i] < basis[p])) {
        best_ratio = ratio;
        p = i;
      }
    }
    if (p == n) {
      // All costs are non-negative, so a column without a usable pivot prices
      // at >= 0 in exact arithmetic. Only drift can select it.
      reprice();
      blocked[q] = 1;
      continue;
    }

    double* prow = &T[p * cols];
    const double pivot = prow[q];
    for (std::size_t j = 0; j < cols; ++j) prow[j] /= pivot;
    rhs[p] = std::max(0.0, rhs[p] / pivot);
    prow[q] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == p) continue;
      double* row = &T[i * cols];
      const double factor = row[q];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < cols; ++j) row[j] -= factor * prow[j];
      row[q] = 0.0;
      rhs[i] = std::max(0.0, rhs[i] - factor * rhs[p]);
    }
    const double rq = reduced[q];
    for (std::size_t j = 0; j < cols; ++j) reduced[j] -= rq * prow[j];
    reduced[q] = 0.0;
    objective += rq * rhs[p];
    basis[p] = q;
    std::fill(blocked.begin(), blocked.end(), 0);
    degenerate_run = rhs[p] == 0.0 ? degenerate_run + 1 : 0;
    ++pivots;
    if (pivots % std::max<std::size_t>(n, 1) == 0) {
      reprice();
      fit.trace.objective.push_back(objective);
    }
  }
  fit.trace.objective.push_back(objective);
  fit.trace.iterations = pivots;
  fit.trace.converged = optimal;

  std::vector<double> value(cols, 0.0);
  for (std::size_t i = 0; i < n; ++i) value[basis[i]] = rhs[i];
  fit.model.weights.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) fit.model.weights[j] = value[u0 + j] - value[v0 + j];
  fit.model.bias = finalize_bias(problem, fit.model.weights, upper);
  fit.trace.primal_objective =
      svm_objective(problem, fit.model.weights, fit.model.bias, C, Penalty::L1, cw);
  return fit;
}

}  // namespace

double svm_objective(const BinaryProblem& problem, std::span<const double> w, double b, double C,
                     Penalty penalty, const ClassWeights& weights) {
  double reg = 0.0;
  for (double x : w) reg += penalty == Penalty::L1 ? std::abs(x) : 0.5 * x * x;
  double loss = 0.0;
  for (std::size_t i = 0; i < problem.rows.size(); ++i) {
    const int y = problem.labels[i];
    const double margin = y * (dot(problem.rows[i], w) + b);
    loss += weights.of(y) * std::max(0.0, 1.0 - margin);
  }
  return reg + C * loss;
}

std::vector<double> l2_objective_gradient(const BinaryProblem& problem, std::span<const double> w,
                                          double b, double C, const ClassWeights& weights) {
  std::vector<double> grad(w.begin(), w.end());
  grad.push_back(0.0);
  for (std::size_t i = 0; i < problem.rows.size(); ++i) {
    const int y = problem.labels[i];
    const double margin = y * (dot(problem.rows[i], w) + b);
    if (margin >= 1.0) continue;
    const double g = -C * weights.of(y) * y;
    for (const auto& e : problem.rows[i].entries) grad[e.index] += g * e.value;
    grad.back() += g;
  }
  return grad;
}

LinearSvmFit fit_linear_svm(const BinaryProblem& problem, double C, Penalty penalty,
                            const ClassWeights& weights, const SolverOptions& options) {
  validate_problem(problem, C);
  LinearSvmFit fit = penalty == Penalty::L2 ? solve_l2(problem, C, weights, options)
                                            : solve_l1(problem, C, weights, options);
  fit.model.penalty = penalty;
  fit.model.C = C;
  fit.model.class_weights = weights;
  return fit;
}

LinearModel train_linear_svm(const BinaryProblem& problem, double C, Penalty penalty,
                             const ClassWeights& weights, const SolverOptions& options) {
  return fit_linear_svm(problem, C, penalty, weights, options).model;
}

}  // namespace phenopat
