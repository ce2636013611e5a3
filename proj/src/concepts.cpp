#include "phenopat/concepts.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "phenopat/error.hpp"

namespace phenopat {

namespace {

using nlohmann::json;

template <class F>
void for_each_json_line(std::istream& in, const std::string& source, F&& handle) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, line_no, e.what());
    }
    if (!record.is_object()) throw ParseError(source, line_no, "record is not an object");
    handle(record, line_no);
  }
}

std::string required_string(const json& j, const char* key, const std::string& source,
                            std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ParseError(source, line, std::string("missing or non-string field \"") + key + "\"");
  }
  return it->get<std::string>();
}

}  // namespace

std::vector<ConceptAnnotation> parse_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open annotations " + path.string());
  return parse_annotations(in, path.string());
}

std::vector<ConceptAnnotation> parse_annotations(std::istream& in, const std::string& source_name) {
  std::vector<ConceptAnnotation> out;
  for_each_json_line(in, source_name, [&](const json& j, std::size_t line) {
    out.push_back({required_string(j, "fragment_id", source_name, line),
                   required_string(j, "cui", source_name, line),
                   required_string(j, "semantic_type", source_name, line)});
  });
  return out;
}

void write_annotations(std::span<const ConceptAnnotation> annotations, std::ostream& out) {
  for (const auto& a : annotations) {
    json record = json::object();
    record["cui"] = a.cui;
    record["fragment_id"] = a.fragment_id;
    record["semantic_type"] = a.semantic_type;
    out << record.dump() << '\n';
  }
}

void validate_annotations(std::span<const ConceptAnnotation> annotations, const Corpus& corpus) {
  for (const auto& a : annotations) {
    if (corpus.find(a.fragment_id) == nullptr) {
      throw ValidationError("annotation references unknown fragment " + a.fragment_id);
    }
  }
}

ConceptIndex::ConceptIndex(std::span<const ConceptAnnotation> annotations)
    : count_(annotations.size()) {
  for (const auto& a : annotations) by_fragment_[a.fragment_id].push_back(a);
}

std::span<const ConceptAnnotation> ConceptIndex::for_fragment(std::string_view fragment_id) const {
  auto it = by_fragment_.find(fragment_id);
  if (it == by_fragment_.end()) return {};
  return it->second;
}

ConceptLexicon ConceptLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon " + path.string());
  return parse(in, path.string());
}

ConceptLexicon ConceptLexicon::parse(std::istream& in, const std::string& source_name) {
  std::vector<Entry> entries;
  for_each_json_line(in, source_name, [&](const json& j, std::size_t line) {
    Entry e{tokenize(required_string(j, "phrase", source_name, line)),
            required_string(j, "cui", source_name, line),
            required_string(j, "semantic_type", source_name, line)};
    if (e.phrase.empty()) throw ParseError(source_name, line, "empty phrase");
    entries.push_back(std::move(e));
  });
  return ConceptLexicon(std::move(entries));
}

std::vector<ConceptAnnotation> ConceptLexicon::annotate(const Fragment& fragment) const {
  const TokenList tokens = tokenize(fragment.text);
  std::vector<ConceptAnnotation> out;
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    for (const auto& e : entries_) {
      if (pos + e.phrase.size() > tokens.size()) continue;
      if (std::equal(e.phrase.begin(), e.phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(pos))) {
        out.push_back({fragment.id, e.cui, e.semantic_type});
      }
    }
  }
  return out;
}

std::vector<ConceptAnnotation> ConceptLexicon::annotate(const Corpus& corpus) const {
  std::vector<ConceptAnnotation> out;
  for (const auto& f : corpus.fragments()) {
    auto found = annotate(f);
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

}  // namespace phenopat
