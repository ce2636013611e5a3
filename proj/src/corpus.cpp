#include "phenopat/corpus.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "phenopat/error.hpp"

namespace phenopat {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kPatternCount> kPatternNames = {
    "ConfirmDiseaseWasChecked", "RuleOfN",          "UseDistinctDates",
    "WhereDidItHappen",         "CredentialsOfTheActor", "CheckForNegation",
};

// Version 1 of the bundled list. Kept in sync with data/stopwords_en_v1.txt.
constexpr std::string_view kStopWordsV1[] = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your",
    "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers",
    "herself", "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what",
    "which", "who", "whom", "this", "that", "these", "those", "am", "is", "are",
    "was", "were", "be", "been", "being", "have", "has", "had", "having", "do",
    "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or",
    "because", "as", "until", "while", "of", "at", "by", "for", "with", "about",
    "against", "between", "into", "through", "during", "before", "after", "above", "below", "to",
    "from", "up", "down", "in", "out", "on", "off", "over", "under", "again",
    "further", "then", "once", "here", "there", "when", "where", "why", "how", "all",
    "any", "both", "each", "few", "more", "most", "other", "some", "such", "only",
    "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
    "just", "should", "now", "d", "ll", "m", "o", "re", "ve", "y",
    "ma",
};

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c >= 0x80;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string mask_digits(std::string_view token) {
  std::string out;
  out.reserve(token.size() + 8);
  for (std::size_t i = 0; i < token.size();) {
    if (is_digit(token[i])) {
      while (i < token.size() && is_digit(token[i])) ++i;
      out += "_number";
    } else {
      char c = token[i++];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      out.push_back(c);
    }
  }
  return out;
}

Fragment fragment_from_json(const json& j, const std::string& source, std::size_t line) {
  auto string_field = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw ParseError(source, line, std::string("missing or non-string field \"") + key + "\"");
    }
    return it->get<std::string>();
  };
  Fragment f;
  f.id = string_field("id");
  f.text = string_field("text");
  f.site = string_field("site");
  f.phenotype = string_field("phenotype");
  auto labels = j.find("labels");
  if (labels == j.end() || !labels->is_array()) {
    throw ParseError(source, line, "missing or non-array field \"labels\"");
  }
  for (const auto& label : *labels) {
    if (!label.is_string()) throw ParseError(source, line, "label is not a string");
    auto id = parse_pattern(label.get<std::string>());
    if (!id) {
      throw ValidationError(source + ":" + std::to_string(line) + ": unknown label \"" +
                            label.get<std::string>() + "\"");
    }
    f.labels.insert(*id);
  }
  return f;
}

}  // namespace

std::string_view pattern_name(PatternId id) { return kPatternNames[pattern_index(id)]; }

std::optional<PatternId> parse_pattern(std::string_view name) {
  for (auto id : kAllPatterns) {
    if (kPatternNames[pattern_index(id)] == name) return id;
  }
  return std::nullopt;
}

const std::vector<DesignPattern>& builtin_patterns() {
  static const std::vector<DesignPattern> patterns = {
      {PatternId::ConfirmDiseaseWasChecked, "Confirm Disease Was Checked",
       "Make sure the patient has been in to see a doctor to be screened for a condition. This "
       "may also apply to labs, to ensure that a lab value was checked & came back normal."},
      {PatternId::RuleOfN, "Rule of N",
       "More evidence is often required, especially when recurring codes gives a higher level of "
       "certainty that a condition exists and wasn't just a rule-out."},
      {PatternId::UseDistinctDates, "Use Distinct Dates",
       "When requiring a count of items, make sure they happen on multiple dates, possibly with "
       "some time interval between them."},
      {PatternId::WhereDidItHappen, "Where Did It Happen",
       "Knowing if something was inpatient or outpatient is important. Kind of like Transient "
       "Conditions, if the patient is in the hospital, we exclude data in many cases."},
      {PatternId::CredentialsOfTheActor, "Credentials of the Actor",
       "If you need a physician to make a diagnosis, make sure a physician entered it. Likewise, "
       "if you need a specialist to make the diagnosis, ensure that is the data you are pulling."},
      {PatternId::CheckForNegation, "Check For Negation",
       "Determine if negated mentions of terms exist. In some instances, you may need to confirm "
       "a negative mention exists. In others, you may need to filter out terms that are negated."},
  };
  return patterns;
}

std::vector<DesignPattern> load_patterns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  if (!doc.is_array()) throw ParseError(path.string(), 0, "expected a JSON array");
  std::vector<DesignPattern> out;
  LabelSet seen;
  for (const auto& entry : doc) {
    auto id = parse_pattern(entry.value("id", ""));
    if (!id) throw ValidationError(path.string() + ": unknown pattern id " + entry.value("id", ""));
    if (seen.contains(*id)) {
      throw ValidationError(path.string() + ": duplicate pattern " + std::string(pattern_name(*id)));
    }
    seen.insert(*id);
    out.push_back({*id, entry.value("title", ""), entry.value("description", "")});
  }
  if (out.size() != kPatternCount) {
    throw ValidationError(path.string() + ": expected exactly six patterns");
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return pattern_index(a.id) < pattern_index(b.id); });
  return out;
}

std::size_t LabelSet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<PatternId> LabelSet::members() const {
  std::vector<PatternId> out;
  for (auto id : kAllPatterns) {
    if (contains(id)) out.push_back(id);
  }
  return out;
}

Corpus::Corpus(std::vector<Fragment> fragments) : fragments_(std::move(fragments)) {
  for (std::size_t i = 0; i < fragments_.size(); ++i) {
    const Fragment& f = fragments_[i];
    if (f.text.empty()) throw ValidationError("fragment " + f.id + " has empty text");
    if (f.labels.empty()) throw ValidationError("fragment " + f.id + " has no labels");
    if (!index_.emplace(f.id, i).second) throw ValidationError("duplicate fragment id " + f.id);
    sites_.insert(f.site);
    phenotypes_.insert(f.phenotype);
  }
}

const Fragment* Corpus::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &fragments_[it->second];
}

std::vector<Fragment> Corpus::select(std::span<const std::string> ids) const {
  std::vector<Fragment> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const Fragment* f = find(id);
    if (f == nullptr) throw ValidationError("unknown fragment id " + id);
    out.push_back(*f);
  }
  return out;
}

Corpus parse_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path.string());
  return parse_corpus(in, path.string());
}

Corpus parse_corpus(std::istream& in, const std::string& source_name) {
  std::vector<Fragment> fragments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    if (!record.is_object()) throw ParseError(source_name, line_no, "record is not an object");
    fragments.push_back(fragment_from_json(record, source_name, line_no));
  }
  return Corpus(std::move(fragments));
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& f : corpus.fragments()) {
    json labels = json::array();
    for (auto id : f.labels.members()) labels.push_back(pattern_name(id));
    // Field order is fixed so output is byte-stable.
    json record = json::object();
    record["id"] = f.id;
    record["labels"] = std::move(labels);
    record["phenotype"] = f.phenotype;
    record["site"] = f.site;
    record["text"] = f.text;
    out << record.dump() << '\n';
  }
}

const StopWords& default_stopwords() {
  static const StopWords words = [] {
    StopWords w;
    for (auto word : kStopWordsV1) w.emplace(word);
    return w;
  }();
  return words;
}

StopWords load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stop-word file " + path.string());
  StopWords words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    words.insert(line);
  }
  return words;
}

TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.push_back(mask_digits(text.substr(start, i - start)));
  }
  return tokens;
}

TokenList preprocess(std::string_view text, const StopWords& stopwords) {
  TokenList tokens = tokenize(text);
  std::erase_if(tokens, [&](const std::string& t) { return stopwords.contains(t); });
  return tokens;
}

std::int64_t Ratio::ceil_share(std::int64_t n) const {
  const std::int64_t product = n * numerator;
  return (product + denominator - 1) / denominator;
}

Ratio Ratio::from_decimal(double value) {
  std::int64_t num = static_cast<std::int64_t>(value * 1000.0 + 0.5);
  std::int64_t den = 1000;
  const std::int64_t g = std::gcd(num, den);
  if (g > 0) {
    num /= g;
    den /= g;
  }
  return {num, den};
}

Split split_corpus(const Corpus& corpus, Ratio ratio, std::uint64_t seed) {
  if (ratio.denominator <= 0 || ratio.numerator <= 0 || ratio.numerator >= ratio.denominator) {
    throw std::invalid_argument("split ratio must lie strictly between 0 and 1");
  }
  std::vector<std::vector<std::size_t>> item_labels;
  item_labels.reserve(corpus.size());
  std::array<std::size_t, kPatternCount> label_counts{};
  for (const auto& f : corpus.fragments()) {
    std::vector<std::size_t> labels;
    for (auto id : f.labels.members()) {
      labels.push_back(pattern_index(id));
      ++label_counts[pattern_index(id)];
    }
    item_labels.push_back(std::move(labels));
  }

  Split split;
  split.seed = seed;
  split.ratio = ratio;
  for (auto id : kAllPatterns) {
    const std::size_t n = label_counts[pattern_index(id)];
    if (n > 0 && n < 2) {
      split.warnings.push_back("pattern " + std::string(pattern_name(id)) +
                               " has fewer than 2 fragments; stratification is approximate");
    }
  }

  const std::array<std::int64_t, 2> weights = {ratio.numerator, ratio.denominator - ratio.numerator};
  const auto groups = stratified_assign(item_labels, kPatternCount, weights, seed);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (groups[i] == 0 ? split.train : split.test).push_back(corpus.fragments()[i].id);
  }
  return split;
}

Vocabulary Vocabulary::build(std::span<const TokenList> documents) {
  Vocabulary vocab;
  for (const auto& doc : documents) {
    for (const auto& token : doc) {
      if (vocab.index_.emplace(token, vocab.tokens_.size()).second) vocab.tokens_.push_back(token);
    }
  }
  return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary vocab;
  for (auto& token : tokens) {
    if (!vocab.index_.emplace(token, vocab.tokens_.size()).second) {
      throw ValidationError("duplicate vocabulary token " + token);
    }
    vocab.tokens_.push_back(std::move(token));
  }
  return vocab;
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

}  // namespace phenopat
