#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "phenopat/corpus.hpp"
#include "phenopat/embeddings.hpp"

namespace phenopat {

using SequenceMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CnnConfig {
  std::vector<std::size_t> filter_widths = {3, 4, 5};
  std::size_t filters_per_width = 50;
  std::size_t batch_size = 15;
  std::size_t epochs = 200;
  double dropout = 0.5;  // drop probability
  double learning_rate = 0.001;
  double validation_fraction = 0.2;
  std::size_t embedding_dim = 200;  // must equal the table's dimension
  std::uint64_t seed = 1;

  // Throws ValidationError on non-positive sizes, dropout outside [0, 1),
  // negative learning rate or validation_fraction outside (0, 1).
  void validate() const;
  std::size_t pooled_size() const { return filter_widths.size() * filters_per_width; }
  std::size_t max_width() const;
  // Shortest sequence the convolution accepts: max(5, widest filter).
  std::size_t min_length() const;
};

// Seeded uniform [-0.25, 0.25] vectors for tokens missing from the table.
// A token's vector depends only on (seed, token); generated vectors are cached
// so they can be written out with the model.
class UnknownTokenVectors {
 public:
  UnknownTokenVectors() = default;
  UnknownTokenVectors(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  UnknownTokenVectors(const UnknownTokenVectors& other);
  UnknownTokenVectors& operator=(const UnknownTokenVectors& other);

  std::vector<double> get(const std::string& token) const;
  std::map<std::string, std::vector<double>> snapshot() const;
  void restore(const std::string& token, std::vector<double> vector);
  std::uint64_t seed() const { return seed_; }

 private:
  std::size_t dim_ = 0;
  std::uint64_t seed_ = 0;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::vector<double>> cache_;
};

// Rows are token vectors, right-padded with zero rows up to min_len.
SequenceMatrix encode_sequence(const TokenList& tokens, const EmbeddingTable& table,
                               std::size_t min_len, const UnknownTokenVectors& unknown);

// Single conv + max-over-time + dropout + sigmoid classifier over a frozen
// embedding table. All trainable values live in one flat vector:
//   per width w: filters (F x w*dim, row-major) then biases (F);
//   then output weights (pooled_size) and the output bias.
class CnnModel {
 public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  // Zero parameters. Throws ValidationError when the table dimension differs
  // from config.embedding_dim.
  CnnModel(CnnConfig config, std::shared_ptr<const EmbeddingTable> table);

  const CnnConfig& config() const { return config_; }
  const EmbeddingTable& table() const { return *table_; }
  std::shared_ptr<const EmbeddingTable> table_ptr() const { return table_; }
  const UnknownTokenVectors& unknown() const { return unknown_; }
  UnknownTokenVectors& unknown() { return unknown_; }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  Eigen::Map<const RowMatrix> filters(std::size_t bank) const;
  Eigen::Map<const Eigen::VectorXd> filter_bias(std::size_t bank) const;
  Eigen::Map<const Eigen::VectorXd> output_weights() const;
  double output_bias() const { return params_[params_.size() - 1]; }

  std::size_t filter_offset(std::size_t bank) const { return offsets_[bank]; }
  std::size_t output_offset() const { return offsets_.back(); }

  // Glorot-uniform filters and output weights, zero biases.
  void initialize(std::uint64_t seed);

  SequenceMatrix encode(const TokenList& tokens) const {
    return encode_sequence(tokens, *table_, config_.min_length(), unknown_);
  }

 private:
  CnnConfig config_;
  std::shared_ptr<const EmbeddingTable> table_;
  UnknownTokenVectors unknown_;
  Eigen::VectorXd params_;
  std::vector<std::size_t> offsets_;  // start of each bank, then of the output layer
};

// Max-over-time pooled ReLU features (before dropout). Throws ValidationError
// for sequences shorter than config().min_length() or of the wrong width.
Eigen::VectorXd pooled_features(const CnnModel& model, const SequenceMatrix& sequence);

// Sigmoid output. In train mode an inverted-dropout mask drawn from
// dropout_seed is applied to the pooled features.
double cnn_forward(const CnnModel& model, const SequenceMatrix& sequence, bool train_mode,
                   std::uint64_t dropout_seed = 0);

struct CnnGradients {
  double loss = 0.0;        // mean binary cross-entropy
  Eigen::VectorXd gradient;  // same layout as CnnModel::parameters()
};

// Gradient of the mean batch cross-entropy. With a dropout seed, example i of
// the batch uses the mask derived from (seed, i); without one no dropout.
CnnGradients compute_gradients(const CnnModel& model, std::span<const SequenceMatrix> batch,
                               std::span<const double> targets,
                               std::optional<std::uint64_t> dropout_seed = std::nullopt);

struct CnnTraceRow {
  std::size_t epoch = 0;  // 0 = initialization
  double train_loss = 0.0;
  double val_f1 = 0.0;
};

struct CnnTrainResult {
  CnnModel model;  // snapshot with the best validation F1
  std::vector<CnnTraceRow> trace;
  std::size_t best_epoch = 0;
  std::vector<std::size_t> validation;  // indices of held-out documents
};

// Trains one binary classifier on token lists with 0/1 targets. A stratified
// validation_fraction of the documents is held out; batches are reshuffled
// every epoch. Throws ValidationError for fewer than 10 documents and
// DegenerateLabelsError when either part of the hold-out split is single-class.
CnnTrainResult train_cnn(std::span<const TokenList> documents, std::span<const int> targets,
                         std::shared_ptr<const EmbeddingTable> table, const CnnConfig& config);

// Probability > 0.5 counts as positive.
double cnn_predict_proba(const CnnModel& model, const TokenList& tokens);
inline bool cnn_predict(double probability) { return probability > 0.5; }

struct CnnPatternFit {
  PatternId pattern;
  std::optional<CnnTrainResult> result;
  std::string error;
};

// One classifier per pattern; pattern p trains with seed
// derive_seed(config.seed, "cnn-pattern", index(p)). Failures are per pattern.
std::vector<CnnPatternFit> train_cnn_per_pattern(std::span<const Fragment> train,
                                                 std::shared_ptr<const EmbeddingTable> table,
                                                 const CnnConfig& config,
                                                 const StopWords& stopwords, std::size_t jobs = 1);

// Model JSON: config, filters as [filter][row][dim] arrays per width, biases,
// output layer and the unknown-token vectors. The embedding table is not
// embedded; cnn_model_from_json takes it separately.
std::string cnn_model_to_json(const CnnModel& model);
CnnModel cnn_model_from_json(std::string_view text, std::shared_ptr<const EmbeddingTable> table);

// CSV "epoch,train_loss,val_f1".
void write_cnn_trace(std::span<const CnnTraceRow> trace, std::ostream& out);

}  // namespace phenopat
