#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "phenopat/corpus.hpp"
#include "phenopat/random.hpp"

namespace phenopat {

namespace {

// Per-group targets from cumulative ceilings so targets always sum to n.
std::vector<std::int64_t> group_targets(std::int64_t n, std::span<const std::int64_t> weights,
                                        std::int64_t total_weight) {
  std::vector<std::int64_t> targets(weights.size());
  std::int64_t cumulative_weight = 0;
  std::int64_t previous = 0;
  for (std::size_t g = 0; g < weights.size(); ++g) {
    cumulative_weight += weights[g];
    const std::int64_t upto = (n * cumulative_weight + total_weight - 1) / total_weight;
    targets[g] = upto - previous;
    previous = upto;
  }
  return targets;
}

}  // namespace

std::vector<std::size_t> stratified_assign(std::span<const std::vector<std::size_t>> item_labels,
                                           std::size_t label_count,
                                           std::span<const std::int64_t> group_weights,
                                           std::uint64_t seed) {
  if (group_weights.empty()) throw std::invalid_argument("stratified_assign: no groups");
  std::int64_t total_weight = 0;
  for (auto w : group_weights) {
    if (w <= 0) throw std::invalid_argument("stratified_assign: weights must be positive");
    total_weight += w;
  }
  const std::size_t n = item_labels.size();
  const std::size_t groups = group_weights.size();
  constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

  std::vector<std::int64_t> remaining(label_count, 0);
  for (const auto& labels : item_labels) {
    for (auto l : labels) {
      if (l >= label_count) throw std::out_of_range("stratified_assign: label out of range");
      ++remaining[l];
    }
  }
  // desired[g][l]: how many more items carrying label l group g still wants.
  std::vector<std::vector<std::int64_t>> desired(groups, std::vector<std::int64_t>(label_count));
  for (std::size_t l = 0; l < label_count; ++l) {
    auto t = group_targets(remaining[l], group_weights, total_weight);
    for (std::size_t g = 0; g < groups; ++g) desired[g][l] = t[g];
  }
  std::vector<std::int64_t> desired_total =
      group_targets(static_cast<std::int64_t>(n), group_weights, total_weight);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "stratify"));
  rng.shuffle(order);

  std::vector<std::size_t> assignment(n, kUnassigned);
  auto assign = [&](std::size_t item, std::size_t g) {
    assignment[item] = g;
    --desired_total[g];
    for (auto l : item_labels[item]) {
      --desired[g][l];
      --remaining[l];
    }
  };

  while (true) {
    // Rarest label that still has unassigned items.
    std::size_t label = label_count;
    for (std::size_t l = 0; l < label_count; ++l) {
      if (remaining[l] > 0 && (label == label_count || remaining[l] < remaining[label])) label = l;
    }
    if (label == label_count) break;
    for (auto item : order) {
      if (assignment[item] != kUnassigned) continue;
      const auto& labels = item_labels[item];
      if (std::find(labels.begin(), labels.end(), label) == labels.end()) continue;
      std::size_t best = 0;
      for (std::size_t g = 1; g < groups; ++g) {
        if (desired[g][label] > desired[best][label] ||
            (desired[g][label] == desired[best][label] && desired_total[g] > desired_total[best])) {
          best = g;
        }
      }
      assign(item, best);
    }
  }
  // Items without labels fill remaining group capacity.
  for (auto item : order) {
    if (assignment[item] != kUnassigned) continue;
    std::size_t best = 0;
    for (std::size_t g = 1; g < groups; ++g) {
      if (desired_total[g] > desired_total[best]) best = g;
    }
    assign(item, best);
  }
  return assignment;
}

}  // namespace phenopat
