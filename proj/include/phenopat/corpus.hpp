#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace phenopat {

// ---------------------------------------------------------------------------
// Label universe

enum class PatternId : std::uint8_t {
  ConfirmDiseaseWasChecked,
  RuleOfN,
  UseDistinctDates,
  WhereDidItHappen,
  CredentialsOfTheActor,
  CheckForNegation,
};

inline constexpr std::size_t kPatternCount = 6;

inline constexpr std::array<PatternId, kPatternCount> kAllPatterns = {
    PatternId::ConfirmDiseaseWasChecked, PatternId::RuleOfN,
    PatternId::UseDistinctDates,         PatternId::WhereDidItHappen,
    PatternId::CredentialsOfTheActor,    PatternId::CheckForNegation,
};

constexpr std::size_t pattern_index(PatternId id) { return static_cast<std::size_t>(id); }

// Enumeration name, e.g. "RuleOfN". This is the spelling used in files.
std::string_view pattern_name(PatternId id);
std::optional<PatternId> parse_pattern(std::string_view name);

struct DesignPattern {
  PatternId id;
  std::string title;  // human title, e.g. "Rule of N"
  std::string description;
};

// The six patterns with their reference titles and descriptions.
const std::vector<DesignPattern>& builtin_patterns();

// Loads a label file (JSON array of {"id","title","description"}). Must name
// each of the six patterns exactly once.
std::vector<DesignPattern> load_patterns(const std::filesystem::path& path);

// Set of design-pattern ids, stored as a bitmask.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<PatternId> ids) {
    for (auto id : ids) insert(id);
  }

  void insert(PatternId id) { bits_ |= bit(id); }
  bool contains(PatternId id) const { return (bits_ & bit(id)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const;
  // Members in enumeration order.
  std::vector<PatternId> members() const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  static constexpr std::uint8_t bit(PatternId id) {
    return static_cast<std::uint8_t>(1u << pattern_index(id));
  }
  std::uint8_t bits_ = 0;
};

// ---------------------------------------------------------------------------
// Corpus

struct Fragment {
  std::string id;
  std::string text;
  std::string site;
  std::string phenotype;
  LabelSet labels;

  friend bool operator==(const Fragment&, const Fragment&) = default;
};

class Corpus {
 public:
  Corpus() = default;
  // Throws ValidationError on duplicate ids, empty text or empty label sets.
  explicit Corpus(std::vector<Fragment> fragments);

  const std::vector<Fragment>& fragments() const { return fragments_; }
  std::size_t size() const { return fragments_.size(); }
  bool empty() const { return fragments_.empty(); }
  const std::set<std::string>& sites() const { return sites_; }
  const std::set<std::string>& phenotypes() const { return phenotypes_; }

  const Fragment* find(std::string_view id) const;
  // Fragments with the given ids, in the order of `ids`. Throws on unknown id.
  std::vector<Fragment> select(std::span<const std::string> ids) const;

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.fragments_ == b.fragments_; }

 private:
  std::vector<Fragment> fragments_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::set<std::string> sites_;
  std::set<std::string> phenotypes_;
};

// JSON Lines, one {"id","text","site","phenotype","labels"} object per line.
// Blank lines are skipped. ParseError names the offending line.
Corpus parse_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::istream& in, const std::string& source_name);
void write_corpus(const Corpus& corpus, std::ostream& out);

// ---------------------------------------------------------------------------
// Normalization

using TokenList = std::vector<std::string>;
using StopWords = std::unordered_set<std::string>;

// Bundled English list (version 1). Negation words are deliberately absent.
const StopWords& default_stopwords();
// One word per line; blank lines and lines starting with '#' are ignored.
StopWords load_stopwords(const std::filesystem::path& path);

// Splits on runs of characters other than [A-Za-z0-9_] and bytes >= 0x80,
// lowercases, then replaces every maximal digit run with "_number".
TokenList tokenize(std::string_view text);
// tokenize() followed by stop-word removal.
TokenList preprocess(std::string_view text, const StopWords& stopwords);

// ---------------------------------------------------------------------------
// Train/test split

// Exact positive rational in (0, 1) used for share targets.
struct Ratio {
  std::int64_t numerator = 7;
  std::int64_t denominator = 10;

  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  // ceil(n * numerator / denominator) in exact integer arithmetic.
  std::int64_t ceil_share(std::int64_t n) const;
  // Nearest fraction with denominator 1000, reduced.
  static Ratio from_decimal(double value);
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  Ratio ratio;
  std::vector<std::string> warnings;
};

// Label-stratified partition; each pattern gets ceil(ratio * count) train
// fragments (exact for single-label data). Throws std::invalid_argument unless
// 0 < ratio < 1. Labels with fewer than two fragments add a warning.
Split split_corpus(const Corpus& corpus, Ratio ratio, std::uint64_t seed);

// Iterative stratification over an arbitrary label universe. Group g receives,
// for each label, ceil(n * W_g / W) - ceil(n * W_{g-1} / W) items where W_g is
// the cumulative weight. Returns the group index of each item.
std::vector<std::size_t> stratified_assign(std::span<const std::vector<std::size_t>> item_labels,
                                           std::size_t label_count,
                                           std::span<const std::int64_t> group_weights,
                                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
 public:
  Vocabulary() = default;
  // Dense indices in first-seen order.
  static Vocabulary build(std::span<const TokenList> documents);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::optional<std::size_t> index_of(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace phenopat
