#include "phenopat/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "json.hpp"
#include "phenopat/error.hpp"
#include "phenopat/eval.hpp"
#include "phenopat/io.hpp"
#include "phenopat/random.hpp"

namespace phenopat {

namespace {

using RowMatrix = CnnModel::RowMatrix;
using WindowMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

struct Forward {
  Eigen::VectorXd pre;    // max over time of conv + bias
  Eigen::VectorXd mask;   // dropout multipliers (1 when not training)
  std::vector<Eigen::Index> argmax;
  double logit = 0.0;
};

Eigen::VectorXd dropout_mask(std::size_t size, double rate, std::optional<std::uint64_t> seed) {
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(size));
  if (!seed || rate <= 0.0) return mask;
  Rng rng(*seed);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index k = 0; k < mask.size(); ++k) mask[k] = rng.uniform() < rate ? 0.0 : scale;
  return mask;
}

void check_sequence(const CnnModel& model, const SequenceMatrix& x) {
  const auto& cfg = model.config();
  if (static_cast<std::size_t>(x.cols()) != model.table().dim()) {
    throw ValidationError("sequence width " + std::to_string(x.cols()) +
                          " does not match embedding dimension " +
                          std::to_string(model.table().dim()));
  }
  if (static_cast<std::size_t>(x.rows()) < cfg.min_length()) {
    throw ValidationError("sequence of length " + std::to_string(x.rows()) +
                          " is shorter than the minimum " + std::to_string(cfg.min_length()));
  }
}

Forward forward(const CnnModel& model, const SequenceMatrix& x,
                std::optional<std::uint64_t> dropout_seed) {
  check_sequence(model, x);
  const auto& cfg = model.config();
  const Eigen::Index d = x.cols();
  const Eigen::Index F = static_cast<Eigen::Index>(cfg.filters_per_width);
  Forward out;
  out.pre.resize(static_cast<Eigen::Index>(cfg.pooled_size()));
  out.argmax.resize(cfg.pooled_size());
  for (std::size_t b = 0; b < cfg.filter_widths.size(); ++b) {
    const Eigen::Index w = static_cast<Eigen::Index>(cfg.filter_widths[b]);
    const Eigen::Index T = x.rows() - w + 1;
    WindowMap windows(x.data(), T, w * d, Eigen::OuterStride<>(d));
    Eigen::MatrixXd z = windows * model.filters(b).transpose();
    z.rowwise() += model.filter_bias(b).transpose();
    for (Eigen::Index f = 0; f < F; ++f) {
      Eigen::Index t = 0;
      const Eigen::Index k = static_cast<Eigen::Index>(b) * F + f;
      out.pre[k] = z.col(f).maxCoeff(&t);
      out.argmax[static_cast<std::size_t>(k)] = t;
    }
  }
  out.mask = dropout_mask(cfg.pooled_size(), cfg.dropout, dropout_seed);
  const Eigen::VectorXd h = out.pre.cwiseMax(0.0).cwiseProduct(out.mask);
  out.logit = model.output_weights().dot(h) + model.output_bias();
  return out;
}

// Adds d(loss)/d(params) for one example, scaled by `scale`; returns its loss.
double accumulate(const CnnModel& model, const SequenceMatrix& x, double target,
                  std::optional<std::uint64_t> dropout_seed, double scale, Eigen::VectorXd& grad) {
  const Forward fw = forward(model, x, dropout_seed);
  const auto& cfg = model.config();
  const double loss = target * softplus(-fw.logit) + (1.0 - target) * softplus(fw.logit);
  const double dz = scale * (sigmoid(fw.logit) - target);

  const Eigen::Index out = static_cast<Eigen::Index>(model.output_offset());
  const Eigen::Index P = static_cast<Eigen::Index>(cfg.pooled_size());
  grad.segment(out, P) += dz * fw.pre.cwiseMax(0.0).cwiseProduct(fw.mask);
  grad[out + P] += dz;

  const auto wout = model.output_weights();
  const Eigen::Index d = x.cols();
  const Eigen::Index F = static_cast<Eigen::Index>(cfg.filters_per_width);
  for (std::size_t b = 0; b < cfg.filter_widths.size(); ++b) {
    const Eigen::Index w = static_cast<Eigen::Index>(cfg.filter_widths[b]);
    const Eigen::Index base = static_cast<Eigen::Index>(model.filter_offset(b));
    for (Eigen::Index f = 0; f < F; ++f) {
      const Eigen::Index k = static_cast<Eigen::Index>(b) * F + f;
      if (fw.pre[k] <= 0.0 || fw.mask[k] == 0.0) continue;
      const double gh = dz * wout[k] * fw.mask[k];
      const Eigen::Index t = fw.argmax[static_cast<std::size_t>(k)];
      Eigen::Map<const Eigen::RowVectorXd> window(x.data() + t * d, w * d);
      grad.segment(base + f * w * d, w * d) += gh * window.transpose();
      grad[base + F * w * d + f] += gh;
    }
  }
  return loss;
}

CnnGradients gradients_for(const CnnModel& model, std::span<const SequenceMatrix* const> batch,
                           std::span<const double> targets, std::optional<std::uint64_t> seed) {
  if (batch.empty()) throw std::invalid_argument("compute_gradients: empty batch");
  if (batch.size() != targets.size()) {
    throw std::invalid_argument("compute_gradients: batch and targets differ in length");
  }
  CnnGradients g;
  g.gradient = Eigen::VectorXd::Zero(model.parameters().size());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::optional<std::uint64_t> mask_seed;
    if (seed) mask_seed = derive_seed(*seed, "dropout", i);
    g.loss += accumulate(model, *batch[i], targets[i], mask_seed, scale, g.gradient);
  }
  g.loss *= scale;
  return g;
}

double mean_loss(const CnnModel& model, std::span<const SequenceMatrix> docs,
                 std::span<const std::size_t> items, std::span<const int> targets) {
  double total = 0.0;
  for (std::size_t i : items) {
    const double z = forward(model, docs[i], std::nullopt).logit;
    total += targets[i] > 0 ? softplus(-z) : softplus(z);
  }
  return items.empty() ? 0.0 : total / static_cast<double>(items.size());
}

double f1_on(const CnnModel& model, std::span<const SequenceMatrix> docs,
             std::span<const std::size_t> items, std::span<const int> targets) {
  std::vector<bool> predicted, gold;
  for (std::size_t i : items) {
    predicted.push_back(cnn_predict(cnn_forward(model, docs[i], false)));
    gold.push_back(targets[i] > 0);
  }
  return f1_from_counts(count_binary(predicted, gold));
}

}  // namespace

void CnnConfig::validate() const {
  if (filter_widths.empty()) throw ValidationError("cnn: filter_widths is empty");
  for (auto w : filter_widths) {
    if (w == 0) throw ValidationError("cnn: filter width must be positive");
  }
  if (filters_per_width == 0) throw ValidationError("cnn: filters_per_width must be positive");
  if (batch_size == 0) throw ValidationError("cnn: batch_size must be positive");
  if (embedding_dim == 0) throw ValidationError("cnn: embedding_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("cnn: dropout must be in [0, 1)");
  if (!(learning_rate >= 0.0)) throw ValidationError("cnn: learning_rate must be non-negative");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ValidationError("cnn: validation_fraction must be in (0, 1)");
  }
}

std::size_t CnnConfig::max_width() const {
  return filter_widths.empty() ? 0 : *std::max_element(filter_widths.begin(), filter_widths.end());
}

std::size_t CnnConfig::min_length() const { return std::max<std::size_t>(5, max_width()); }

UnknownTokenVectors::UnknownTokenVectors(const UnknownTokenVectors& other)
    : dim_(other.dim_), seed_(other.seed_), cache_(other.snapshot()) {}

UnknownTokenVectors& UnknownTokenVectors::operator=(const UnknownTokenVectors& other) {
  if (this != &other) {
    auto copy = other.snapshot();
    std::lock_guard lock(mutex_);
    dim_ = other.dim_;
    seed_ = other.seed_;
    cache_ = std::move(copy);
  }
  return *this;
}

std::vector<double> UnknownTokenVectors::get(const std::string& token) const {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(token);
  if (it != cache_.end()) return it->second;
  Rng rng(derive_seed(seed_, "unknown-token", fnv1a64(token)));
  std::vector<double> v(dim_);
  for (auto& x : v) x = rng.uniform(-0.25, 0.25);
  cache_.emplace(token, v);
  return v;
}

std::map<std::string, std::vector<double>> UnknownTokenVectors::snapshot() const {
  std::lock_guard lock(mutex_);
  return cache_;
}

void UnknownTokenVectors::restore(const std::string& token, std::vector<double> vector) {
  if (vector.size() != dim_) {
    throw ValidationError("unknown-token vector for \"" + token + "\" has the wrong length");
  }
  std::lock_guard lock(mutex_);
  cache_[token] = std::move(vector);
}

SequenceMatrix encode_sequence(const TokenList& tokens, const EmbeddingTable& table,
                               std::size_t min_len, const UnknownTokenVectors& unknown) {
  const auto rows = static_cast<Eigen::Index>(std::max(tokens.size(), min_len));
  const auto d = static_cast<Eigen::Index>(table.dim());
  SequenceMatrix x = SequenceMatrix::Zero(rows, d);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (auto v = table.find(tokens[i])) {
      x.row(r) = Eigen::Map<const Eigen::RowVectorXd>(v->data(), d);
    } else {
      const auto u = unknown.get(tokens[i]);
      x.row(r) = Eigen::Map<const Eigen::RowVectorXd>(u.data(), d);
    }
  }
  return x;
}

CnnModel::CnnModel(CnnConfig config, std::shared_ptr<const EmbeddingTable> table)
    : config_(std::move(config)), table_(std::move(table)) {
  config_.validate();
  if (!table_) throw ValidationError("cnn: no embedding table");
  if (table_->dim() != config_.embedding_dim) {
    throw ValidationError("cnn: embedding table has dimension " + std::to_string(table_->dim()) +
                          " but the config asks for " + std::to_string(config_.embedding_dim));
  }
  unknown_ = UnknownTokenVectors(table_->dim(), derive_seed(config_.seed, "cnn-unknown"));
  std::size_t offset = 0;
  for (auto w : config_.filter_widths) {
    offsets_.push_back(offset);
    offset += config_.filters_per_width * (w * table_->dim() + 1);
  }
  offsets_.push_back(offset);
  offset += config_.pooled_size() + 1;
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

Eigen::Map<const CnnModel::RowMatrix> CnnModel::filters(std::size_t bank) const {
  const auto F = static_cast<Eigen::Index>(config_.filters_per_width);
  const auto cols = static_cast<Eigen::Index>(config_.filter_widths[bank] * table_->dim());
  return {params_.data() + offsets_[bank], F, cols};
}

Eigen::Map<const Eigen::VectorXd> CnnModel::filter_bias(std::size_t bank) const {
  const std::size_t F = config_.filters_per_width;
  const std::size_t cols = config_.filter_widths[bank] * table_->dim();
  return {params_.data() + offsets_[bank] + F * cols, static_cast<Eigen::Index>(F)};
}

Eigen::Map<const Eigen::VectorXd> CnnModel::output_weights() const {
  return {params_.data() + offsets_.back(), static_cast<Eigen::Index>(config_.pooled_size())};
}

void CnnModel::initialize(std::uint64_t seed) {
  Rng rng(seed);
  params_.setZero();
  const std::size_t F = config_.filters_per_width;
  for (std::size_t b = 0; b < config_.filter_widths.size(); ++b) {
    const std::size_t fan_in = config_.filter_widths[b] * table_->dim();
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + F));
    for (std::size_t i = 0; i < F * fan_in; ++i) {
      params_[static_cast<Eigen::Index>(offsets_[b] + i)] = rng.uniform(-limit, limit);
    }
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(config_.pooled_size() + 1));
  for (std::size_t i = 0; i < config_.pooled_size(); ++i) {
    params_[static_cast<Eigen::Index>(offsets_.back() + i)] = rng.uniform(-limit, limit);
  }
}

Eigen::VectorXd pooled_features(const CnnModel& model, const SequenceMatrix& sequence) {
  return forward(model, sequence, std::nullopt).pre.cwiseMax(0.0);
}

double cnn_forward(const CnnModel& model, const SequenceMatrix& sequence, bool train_mode,
                   std::uint64_t dropout_seed) {
  std::optional<std::uint64_t> seed;
  if (train_mode) seed = dropout_seed;
  return sigmoid(forward(model, sequence, seed).logit);
}

CnnGradients compute_gradients(const CnnModel& model, std::span<const SequenceMatrix> batch,
                               std::span<const double> targets,
                               std::optional<std::uint64_t> dropout_seed) {
  std::vector<const SequenceMatrix*> ptrs;
  for (const auto& x : batch) ptrs.push_back(&x);
  return gradients_for(model, ptrs, targets, dropout_seed);
}

CnnTrainResult train_cnn(std::span<const TokenList> documents, std::span<const int> targets,
                         std::shared_ptr<const EmbeddingTable> table, const CnnConfig& config) {
  if (documents.size() != targets.size()) {
    throw ValidationError("train_cnn: documents and targets differ in length");
  }
  if (documents.size() < 10) {
    throw ValidationError("train_cnn: need at least 10 documents, got " +
                          std::to_string(documents.size()));
  }
  CnnModel model(config, std::move(table));
  model.initialize(derive_seed(config.seed, "cnn-init"));

  std::vector<std::vector<std::size_t>> item_labels;
  for (int y : targets) item_labels.push_back({y > 0 ? 0u : 1u});
  const Ratio vr = Ratio::from_decimal(config.validation_fraction);
  const std::vector<std::int64_t> weights = {vr.denominator - vr.numerator, vr.numerator};
  const auto group =
      stratified_assign(item_labels, 2, weights, derive_seed(config.seed, "cnn-validation"));
  std::vector<std::size_t> train_items, val_items;
  for (std::size_t i = 0; i < group.size(); ++i) (group[i] == 0 ? train_items : val_items).push_back(i);
  auto has_both = [&](const std::vector<std::size_t>& items) {
    bool pos = false, neg = false;
    for (auto i : items) (targets[i] > 0 ? pos : neg) = true;
    return pos && neg;
  };
  if (!has_both(train_items) || !has_both(val_items)) {
    throw DegenerateLabelsError("cnn validation split is single-class");
  }

  std::vector<SequenceMatrix> encoded;
  encoded.reserve(documents.size());
  for (const auto& doc : documents) encoded.push_back(model.encode(doc));

  CnnTrainResult result{model, {}, 0, val_items};
  result.trace.push_back({0, mean_loss(model, encoded, train_items, targets),
                          f1_on(model, encoded, val_items, targets)});
  double best_f1 = result.trace.back().val_f1;

  const Eigen::Index n_params = model.parameters().size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n_params);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n_params);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double beta1_t = 1.0, beta2_t = 1.0;

  std::vector<double> batch_targets;
  std::vector<const SequenceMatrix*> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::uint64_t epoch_seed = derive_seed(config.seed, "cnn-epoch", epoch);
    std::vector<std::size_t> order = train_items;
    Rng(epoch_seed).shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += config.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      batch_targets.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back(&encoded[order[k]]);
        batch_targets.push_back(targets[order[k]] > 0 ? 1.0 : 0.0);
      }
      const auto g = gradients_for(model, batch, batch_targets, derive_seed(epoch_seed, "batch", b));
      loss_sum += g.loss * static_cast<double>(end - start);
      beta1_t *= beta1;
      beta2_t *= beta2;
      m = beta1 * m + (1.0 - beta1) * g.gradient;
      v = beta2 * v + (1.0 - beta2) * g.gradient.cwiseAbs2();
      const double step = config.learning_rate / (1.0 - beta1_t);
      const double vcorr = 1.0 / (1.0 - beta2_t);
      model.parameters().array() -=
          step * m.array() / ((v.array() * vcorr).sqrt() + eps);
    }
    const double val_f1 = f1_on(model, encoded, val_items, targets);
    result.trace.push_back({epoch, loss_sum / static_cast<double>(train_items.size()), val_f1});
    if (val_f1 >= best_f1) {
      best_f1 = val_f1;
      result.best_epoch = epoch;
      result.model.parameters() = model.parameters();
    }
  }
  result.model.unknown() = model.unknown();
  return result;
}

double cnn_predict_proba(const CnnModel& model, const TokenList& tokens) {
  return cnn_forward(model, model.encode(tokens), false);
}

std::vector<CnnPatternFit> train_cnn_per_pattern(std::span<const Fragment> train,
                                                 std::shared_ptr<const EmbeddingTable> table,
                                                 const CnnConfig& config,
                                                 const StopWords& stopwords, std::size_t jobs) {
  std::vector<TokenList> docs;
  docs.reserve(train.size());
  for (const auto& f : train) docs.push_back(preprocess(f.text, stopwords));
  std::vector<CnnPatternFit> fits(kPatternCount);
  parallel_for(kPatternCount, jobs, [&](std::size_t p) {
    const PatternId id = kAllPatterns[p];
    fits[p].pattern = id;
    std::vector<int> y;
    for (const auto& f : train) y.push_back(f.labels.contains(id) ? 1 : 0);
    CnnConfig cfg = config;
    cfg.seed = derive_seed(config.seed, "cnn-pattern", p);
    try {
      fits[p].result = train_cnn(docs, y, table, cfg);
    } catch (const Error& e) {
      fits[p].error = e.what();
    }
  });
  return fits;
}

std::string cnn_model_to_json(const CnnModel& model) {
  using nlohmann::json;
  const auto& cfg = model.config();
  const std::size_t d = model.table().dim();
  json filters = json::array();
  for (std::size_t b = 0; b < cfg.filter_widths.size(); ++b) {
    const std::size_t w = cfg.filter_widths[b];
    const auto W = model.filters(b);
    json bank = json::array();
    for (Eigen::Index f = 0; f < W.rows(); ++f) {
      json rows = json::array();
      for (std::size_t r = 0; r < w; ++r) {
        json row = json::array();
        for (std::size_t k = 0; k < d; ++k) row.push_back(W(f, static_cast<Eigen::Index>(r * d + k)));
        rows.push_back(std::move(row));
      }
      bank.push_back(std::move(rows));
    }
    const auto bias = model.filter_bias(b);
    filters.push_back({{"width", w},
                       {"weights", std::move(bank)},
                       {"bias", std::vector<double>(bias.data(), bias.data() + bias.size())}});
  }
  json unknown = json::object();
  for (const auto& [token, vec] : model.unknown().snapshot()) unknown[token] = vec;
  const auto wout = model.output_weights();
  json j = {
      {"config",
       {{"filter_widths", cfg.filter_widths},
        {"filters_per_width", cfg.filters_per_width},
        {"batch_size", cfg.batch_size},
        {"epochs", cfg.epochs},
        {"dropout", cfg.dropout},
        {"learning_rate", cfg.learning_rate},
        {"validation_fraction", cfg.validation_fraction},
        {"embedding_dim", cfg.embedding_dim},
        {"seed", cfg.seed}}},
      {"embedding_source", model.table().source()},
      {"axis_order", "filter,width,dim"},
      {"filters", std::move(filters)},
      {"output",
       {{"weights", std::vector<double>(wout.data(), wout.data() + wout.size())},
        {"bias", model.output_bias()}}},
      {"threshold", 0.5},
      {"unknown_seed", model.unknown().seed()},
      {"unknown_tokens", std::move(unknown)},
  };
  return j.dump(1) + "\n";
}

CnnModel cnn_model_from_json(std::string_view text, std::shared_ptr<const EmbeddingTable> table) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("cnn model", 0, e.what());
  }
  try {
    const auto& c = j.at("config");
    CnnConfig cfg;
    cfg.filter_widths = c.at("filter_widths").get<std::vector<std::size_t>>();
    cfg.filters_per_width = c.at("filters_per_width").get<std::size_t>();
    cfg.batch_size = c.at("batch_size").get<std::size_t>();
    cfg.epochs = c.at("epochs").get<std::size_t>();
    cfg.dropout = c.at("dropout").get<double>();
    cfg.learning_rate = c.at("learning_rate").get<double>();
    cfg.validation_fraction = c.at("validation_fraction").get<double>();
    cfg.embedding_dim = c.at("embedding_dim").get<std::size_t>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    CnnModel model(cfg, std::move(table));
    const std::size_t d = cfg.embedding_dim;
    const auto& filters = j.at("filters");
    if (filters.size() != cfg.filter_widths.size()) {
      throw ValidationError("cnn model: filter bank count does not match filter_widths");
    }
    auto& params = model.parameters();
    for (std::size_t b = 0; b < filters.size(); ++b) {
      const std::size_t w = cfg.filter_widths[b];
      const auto& bank = filters[b];
      if (bank.at("width").get<std::size_t>() != w || bank.at("weights").size() != cfg.filters_per_width) {
        throw ValidationError("cnn model: filter bank " + std::to_string(b) + " has the wrong shape");
      }
      std::size_t pos = model.filter_offset(b);
      for (const auto& filter : bank.at("weights")) {
        if (filter.size() != w) throw ValidationError("cnn model: filter has the wrong width");
        for (const auto& row : filter) {
          if (row.size() != d) throw ValidationError("cnn model: filter row has the wrong dimension");
          for (const auto& value : row) params[static_cast<Eigen::Index>(pos++)] = value.get<double>();
        }
      }
      const auto bias = bank.at("bias").get<std::vector<double>>();
      if (bias.size() != cfg.filters_per_width) throw ValidationError("cnn model: bad bias length");
      for (double value : bias) params[static_cast<Eigen::Index>(pos++)] = value;
    }
    const auto wout = j.at("output").at("weights").get<std::vector<double>>();
    if (wout.size() != cfg.pooled_size()) throw ValidationError("cnn model: bad output layer size");
    std::size_t pos = model.output_offset();
    for (double value : wout) params[static_cast<Eigen::Index>(pos++)] = value;
    params[static_cast<Eigen::Index>(pos)] = j.at("output").at("bias").get<double>();
    model.unknown() = UnknownTokenVectors(d, j.at("unknown_seed").get<std::uint64_t>());
    for (const auto& [token, vec] : j.at("unknown_tokens").items()) {
      model.unknown().restore(token, vec.get<std::vector<double>>());
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError("cnn model", 0, e.what());
  }
}

void write_cnn_trace(std::span<const CnnTraceRow> trace, std::ostream& out) {
  out << "epoch,train_loss,val_f1\n";
  for (const auto& row : trace) {
    out << row.epoch << ',' << format_double(row.train_loss) << ',' << format_double(row.val_f1)
        << '\n';
  }
}

}  // namespace phenopat
