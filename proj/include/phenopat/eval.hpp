#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phenopat/corpus.hpp"

namespace phenopat {

struct BinaryCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  BinaryCounts& operator+=(const BinaryCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const BinaryCounts&, const BinaryCounts&) = default;
};

BinaryCounts count_binary(const std::vector<bool>& predicted, const std::vector<bool>& gold);

// 2tp / (2tp + fp + fn); 0 when tp + fp + fn == 0.
double f1_from_counts(const BinaryCounts& c);
// Unweighted mean. Throws std::invalid_argument on an empty list.
double macro_f1(std::span<const double> per_class);
// F1 of element-wise summed counts. Throws std::invalid_argument on an empty list.
double micro_f1(std::span<const BinaryCounts> per_class);

// P(score_pos > score_neg) + 0.5 P(tie), via midranks. Labels are +1/-1 (any
// positive value counts as positive). Throws DegenerateLabelsError when only
// one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Per-pattern output of a classifier over the same ordered test fragments.
struct PatternPredictions {
  std::vector<bool> predicted;
  std::vector<double> scores;
};

struct EvalReport {
  std::string config_name;
  std::array<BinaryCounts, kPatternCount> counts{};
  std::array<double, kPatternCount> f1{};
  std::array<std::optional<double>, kPatternCount> auroc{};  // nullopt if one class only
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
};

// `predictions` is indexed by pattern_index. Throws ValidationError when a
// pattern is missing or lengths disagree with `gold`.
EvalReport evaluate_multilabel(const std::string& config_name,
                               std::span<const std::optional<PatternPredictions>> predictions,
                               std::span<const LabelSet> gold);

// Report column order: Disease, Rule of N, Dates, Credential, Where, Negation.
inline constexpr std::array<PatternId, kPatternCount> kReportColumnOrder = {
    PatternId::ConfirmDiseaseWasChecked, PatternId::RuleOfN,
    PatternId::UseDistinctDates,         PatternId::CredentialsOfTheActor,
    PatternId::WhereDidItHappen,         PatternId::CheckForNegation,
};
const std::array<std::string, kPatternCount>& report_column_titles();

// A report row; `report` empty means the experiment failed outright, and
// `failed` lists patterns whose classifier could not be trained.
struct ReportRow {
  std::string experiment;
  std::optional<EvalReport> report;
  std::vector<PatternId> failed;
};

// "experiment,Disease,...,Negation,Macro-f1,Micro-f1". `decimals` < 0 prints
// full precision; failed cells print "NA".
void write_report_csv(std::span<const ReportRow> rows, std::ostream& out, int decimals);

}  // namespace phenopat
