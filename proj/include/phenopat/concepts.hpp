#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phenopat/corpus.hpp"

namespace phenopat {

// One UMLS concept mention found on a fragment (e.g. MetaMap output).
struct ConceptAnnotation {
  std::string fragment_id;
  std::string cui;
  std::string semantic_type;

  friend bool operator==(const ConceptAnnotation&, const ConceptAnnotation&) = default;
};

// JSON Lines {"fragment_id","cui","semantic_type"}.
std::vector<ConceptAnnotation> parse_annotations(const std::filesystem::path& path);
std::vector<ConceptAnnotation> parse_annotations(std::istream& in, const std::string& source_name);
void write_annotations(std::span<const ConceptAnnotation> annotations, std::ostream& out);

// Throws ValidationError if an annotation references a fragment not in corpus.
void validate_annotations(std::span<const ConceptAnnotation> annotations, const Corpus& corpus);

// Annotations grouped by fragment id, file order preserved within a fragment.
class ConceptIndex {
 public:
  ConceptIndex() = default;
  explicit ConceptIndex(std::span<const ConceptAnnotation> annotations);

  std::span<const ConceptAnnotation> for_fragment(std::string_view fragment_id) const;
  std::size_t size() const { return count_; }

 private:
  std::map<std::string, std::vector<ConceptAnnotation>, std::less<>> by_fragment_;
  std::size_t count_ = 0;
};

// Exact-phrase concept mapper standing in for MetaMap. Phrases are matched on
// tokenize() output (stop words kept), every occurrence counts.
class ConceptLexicon {
 public:
  struct Entry {
    TokenList phrase;
    std::string cui;
    std::string semantic_type;
  };

  ConceptLexicon() = default;
  explicit ConceptLexicon(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  // JSON Lines {"phrase","cui","semantic_type"}.
  static ConceptLexicon load(const std::filesystem::path& path);
  static ConceptLexicon parse(std::istream& in, const std::string& source_name);

  std::vector<ConceptAnnotation> annotate(const Fragment& fragment) const;
  std::vector<ConceptAnnotation> annotate(const Corpus& corpus) const;
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

}  // namespace phenopat
