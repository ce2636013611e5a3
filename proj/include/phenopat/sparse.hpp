#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace phenopat {

struct SparseEntry {
  std::uint32_t index;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Entries sorted by strictly increasing index.
struct SparseVector {
  std::vector<SparseEntry> entries;

  bool empty() const { return entries.empty(); }
  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

double dot(const SparseVector& x, std::span<const double> dense);
double dot(const SparseVector& a, const SparseVector& b);
double squared_norm(const SparseVector& x);
// Appends `block` with indices shifted by `offset`.
void append_block(SparseVector& target, const SparseVector& block, std::uint32_t offset);
std::vector<double> to_dense(const SparseVector& x, std::size_t dim);
SparseVector from_dense(std::span<const double> dense);

}  // namespace phenopat
