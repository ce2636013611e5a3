#include "phenopat/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "phenopat/error.hpp"
#include "phenopat/io.hpp"
#include "phenopat/random.hpp"

namespace phenopat {

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim, std::string source)
    : dim_(dim), source_(std::move(source)) {}

void EmbeddingTable::add(std::string token, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw ValidationError("embedding for \"" + token + "\" has length " +
                          std::to_string(vector.size()) + ", expected " + std::to_string(dim_));
  }
  if (!index_.emplace(token, tokens_.size()).second) {
    throw ValidationError("duplicate embedding token \"" + token + "\"");
  }
  tokens_.push_back(std::move(token));
  data_.insert(data_.end(), vector.begin(), vector.end());
}

std::optional<std::size_t> EmbeddingTable::index_of(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::span<const double>> EmbeddingTable::find(std::string_view token) const {
  auto i = index_of(token);
  if (!i) return std::nullopt;
  return row(*i);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_dim) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings " + path.string());
  return load_embeddings(in, path.string(), expected_dim);
}

EmbeddingTable load_embeddings(std::istream& in, const std::string& source_name,
                               std::optional<std::size_t> expected_dim) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source_name, 1, "missing \"V D\" header");
  auto header = split_spaces(line);
  std::size_t count = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !parse_number(header[0], count) || !parse_number(header[1], dim) ||
      dim == 0) {
    throw ParseError(source_name, 1, "malformed \"V D\" header");
  }
  if (expected_dim && *expected_dim != dim) {
    throw ValidationError(source_name + ": embedding dimension " + std::to_string(dim) +
                          " does not match expected " + std::to_string(*expected_dim));
  }
  EmbeddingTable table(dim, source_name);
  std::vector<double> values(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (fields.size() != dim + 1) {
      throw ParseError(source_name, line_no,
                       "expected " + std::to_string(dim) + " values, found " +
                           std::to_string(fields.size() - 1));
    }
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_number(fields[k + 1], values[k])) {
        throw ParseError(source_name, line_no, "bad number \"" + std::string(fields[k + 1]) + "\"");
      }
    }
    table.add(std::string(fields[0]), values);
  }
  if (table.size() != count) {
    throw ParseError(source_name, line_no,
                     "header announces " + std::to_string(count) + " rows, found " +
                         std::to_string(table.size()));
  }
  return table;
}

void save_embeddings(const EmbeddingTable& table, std::ostream& out) {
  out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.tokens()[i];
    for (double v : table.row(i)) out << ' ' << format_double(v);
    out << '\n';
  }
}

SgnsResult train_sgns(std::span<const TokenList> sentences, const SgnsOptions& options) {
  if (options.dim == 0) throw std::invalid_argument("train_sgns: dim must be positive");
  if (options.window == 0) throw std::invalid_argument("train_sgns: window must be positive");
  std::size_t total_tokens = 0;
  for (const auto& s : sentences) total_tokens += s.size();
  if (total_tokens < 100) throw std::invalid_argument("train_sgns: need at least 100 tokens");

  const Vocabulary vocab = Vocabulary::build(sentences);
  const std::size_t V = vocab.size();
  const std::size_t D = options.dim;

  std::vector<std::vector<std::size_t>> encoded;
  std::vector<double> counts(V, 0.0);
  for (const auto& s : sentences) {
    std::vector<std::size_t> ids;
    for (const auto& t : s) {
      ids.push_back(*vocab.index_of(t));
      counts[ids.back()] += 1.0;
    }
    encoded.push_back(std::move(ids));
  }
  std::vector<double> noise_cdf(V);
  double acc = 0.0;
  for (std::size_t i = 0; i < V; ++i) {
    acc += std::pow(counts[i], 0.75);
    noise_cdf[i] = acc;
  }

  std::vector<double> input(V * D);
  std::vector<double> output(V * D, 0.0);
  Rng init(derive_seed(options.seed, "sgns-init"));
  for (auto& x : input) x = (init.uniform() - 0.5) / static_cast<double>(D);

  std::size_t pairs_per_epoch = 0;
  for (const auto& s : encoded) {
    for (std::size_t c = 0; c < s.size(); ++c) {
      const std::size_t lo = c >= options.window ? c - options.window : 0;
      const std::size_t hi = std::min(s.size() - 1, c + options.window);
      pairs_per_epoch += hi - lo;
    }
  }
  const double total_pairs = static_cast<double>(pairs_per_epoch * options.epochs);

  SgnsResult result;
  Rng rng(derive_seed(options.seed, "sgns-negatives"));
  std::vector<double> grad(D);
  std::size_t processed = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    double loss = 0.0;
    std::size_t pairs = 0;
    for (const auto& s : encoded) {
      for (std::size_t c = 0; c < s.size(); ++c) {
        const std::size_t lo = c >= options.window ? c - options.window : 0;
        const std::size_t hi = std::min(s.size() - 1, c + options.window);
        for (std::size_t o = lo; o <= hi; ++o) {
          if (o == c) continue;
          const double lr = options.learning_rate *
                            std::max(1e-4, 1.0 - static_cast<double>(processed) / total_pairs);
          ++processed;
          double* v = &input[s[c] * D];
          std::fill(grad.begin(), grad.end(), 0.0);
          for (std::size_t n = 0; n <= options.negatives; ++n) {
            std::size_t target = s[o];
            double label = 1.0;
            if (n > 0) {
              const double r = rng.uniform() * acc;
              target = static_cast<std::size_t>(
                  std::upper_bound(noise_cdf.begin(), noise_cdf.end(), r) - noise_cdf.begin());
              target = std::min(target, V - 1);
              if (target == s[o]) continue;
              label = 0.0;
            }
            double* u = &output[target * D];
            double score = 0.0;
            for (std::size_t k = 0; k < D; ++k) score += v[k] * u[k];
            loss -= label > 0 ? log_sigmoid(score) : log_sigmoid(-score);
            const double g = lr * (label - sigmoid(score));
            for (std::size_t k = 0; k < D; ++k) {
              grad[k] += g * u[k];
              u[k] += g * v[k];
            }
          }
          for (std::size_t k = 0; k < D; ++k) v[k] += grad[k];
          ++pairs;
        }
      }
    }
    result.epoch_loss.push_back(pairs > 0 ? loss / static_cast<double>(pairs) : 0.0);
  }

  std::ostringstream source;
  source << "sgns(dim=" << D << ",window=" << options.window << ",negatives=" << options.negatives
         << ",epochs=" << options.epochs << ",seed=" << options.seed << ")";
  result.table = EmbeddingTable(D, source.str());
  for (std::size_t i = 0; i < V; ++i) {
    result.table.add(vocab.tokens()[i], std::span<const double>(&input[i * D], D));
  }
  return result;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table, std::string_view token,
                                        std::size_t k) {
  auto query = table.find(token);
  if (!query) throw ValidationError("unknown token \"" + std::string(token) + "\"");
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.tokens()[i] == token) continue;
    all.push_back({table.tokens()[i], cosine_similarity(*query, table.row(i))});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.token < b.token;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

}  // namespace phenopat
