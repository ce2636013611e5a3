#include "phenopat/eval.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "phenopat/error.hpp"
#include "phenopat/io.hpp"

namespace phenopat {

BinaryCounts count_binary(const std::vector<bool>& predicted, const std::vector<bool>& gold) {
  if (predicted.size() != gold.size()) throw ValidationError("count_binary: length mismatch");
  BinaryCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] && gold[i]) {
      ++c.tp;
    } else if (predicted[i]) {
      ++c.fp;
    } else if (gold[i]) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

double f1_from_counts(const BinaryCounts& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double macro_f1(std::span<const double> per_class) {
  if (per_class.empty()) throw std::invalid_argument("macro_f1: empty list");
  return std::accumulate(per_class.begin(), per_class.end(), 0.0) /
         static_cast<double>(per_class.size());
}

double micro_f1(std::span<const BinaryCounts> per_class) {
  if (per_class.empty()) throw std::invalid_argument("micro_f1: empty list");
  BinaryCounts sum;
  for (const auto& c : per_class) sum += c;
  return f1_from_counts(sum);
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share the midrank.
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw DegenerateLabelsError("AUROC needs both classes");
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

EvalReport evaluate_multilabel(const std::string& config_name,
                               std::span<const std::optional<PatternPredictions>> predictions,
                               std::span<const LabelSet> gold) {
  if (predictions.size() != kPatternCount) {
    throw ValidationError("evaluate_multilabel: expected predictions for six patterns");
  }
  EvalReport report;
  report.config_name = config_name;
  for (auto id : kAllPatterns) {
    const std::size_t p = pattern_index(id);
    if (!predictions[p]) {
      throw ValidationError("evaluate_multilabel: missing predictions for " +
                            std::string(pattern_name(id)));
    }
    const auto& pred = *predictions[p];
    if (pred.predicted.size() != gold.size() || pred.scores.size() != gold.size()) {
      throw ValidationError("evaluate_multilabel: prediction length mismatch for " +
                            std::string(pattern_name(id)));
    }
    std::vector<bool> truth(gold.size());
    std::vector<int> signs(gold.size());
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      truth[i] = gold[i].contains(id);
      signs[i] = truth[i] ? 1 : -1;
      (truth[i] ? has_pos : has_neg) = true;
    }
    report.counts[p] = count_binary(pred.predicted, truth);
    report.f1[p] = f1_from_counts(report.counts[p]);
    if (has_pos && has_neg) report.auroc[p] = roc_auc(pred.scores, signs);
  }
  report.macro_f1 = macro_f1(report.f1);
  report.micro_f1 = micro_f1(report.counts);
  return report;
}

const std::array<std::string, kPatternCount>& report_column_titles() {
  static const std::array<std::string, kPatternCount> titles = {
      "Disease", "Rule of N", "Dates", "Credential", "Where", "Negation"};
  return titles;
}

void write_report_csv(std::span<const ReportRow> rows, std::ostream& out, int decimals) {
  auto fmt = [&](double v) { return decimals < 0 ? format_double(v) : format_fixed(v, decimals); };
  out << "experiment";
  for (const auto& t : report_column_titles()) out << ',' << t;
  out << ",Macro-f1,Micro-f1\n";
  for (const auto& row : rows) {
    out << row.experiment;
    const bool partial = !row.failed.empty();
    for (auto id : kReportColumnOrder) {
      const bool failed =
          !row.report || std::find(row.failed.begin(), row.failed.end(), id) != row.failed.end();
      out << ',' << (failed ? std::string("NA") : fmt(row.report->f1[pattern_index(id)]));
    }
    if (!row.report || partial) {
      out << ",NA,NA\n";
    } else {
      out << ',' << fmt(row.report->macro_f1) << ',' << fmt(row.report->micro_f1) << '\n';
    }
  }
}

}  // namespace phenopat
