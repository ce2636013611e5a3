#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phenopat/corpus.hpp"

namespace phenopat {

// Token -> dense vector table with a fixed dimension. Rows keep insertion order.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, std::string source);

  // Throws ValidationError on a duplicate token or wrong vector length.
  void add(std::string token, std::span<const double> vector);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::string& source() const { return source_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::optional<std::size_t> index_of(std::string_view token) const;
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::optional<std::span<const double>> find(std::string_view token) const;

 private:
  std::size_t dim_ = 0;
  std::string source_;
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<double> data_;
};

// Word-vector text format: header "V D", then "token v1 ... vD" per line.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_dim = std::nullopt);
EmbeddingTable load_embeddings(std::istream& in, const std::string& source_name,
                               std::optional<std::size_t> expected_dim = std::nullopt);
// Values printed with 17 significant digits, so a reload is exact.
void save_embeddings(const EmbeddingTable& table, std::ostream& out);

struct SgnsOptions {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
};

struct SgnsResult {
  EmbeddingTable table;
  // Mean negative-sampling loss per (center, context) pair, one per epoch.
  std::vector<double> epoch_loss;
};

// Skip-gram with negative sampling: unigram^0.75 noise distribution, linear
// learning-rate decay, fixed symmetric window, no subsampling, single thread.
// Requires at least 100 tokens; dim and window must be positive.
SgnsResult train_sgns(std::span<const TokenList> sentences, const SgnsOptions& options);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  std::string token;
  double cosine = 0.0;
};

// k most similar tokens to `token` (excluding itself), descending cosine,
// ties broken lexicographically. Throws ValidationError for an unknown token.
std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table, std::string_view token,
                                        std::size_t k);

}  // namespace phenopat
