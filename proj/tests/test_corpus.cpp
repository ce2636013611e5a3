#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "phenopat/corpus.hpp"
#include "phenopat/error.hpp"
#include "phenopat/synthetic.hpp"
#include "support.hpp"

using namespace phenopat;
using testing::fragment;

namespace {

Corpus parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in, "inline");
}

// Single-label corpus with the given per-pattern sizes.
Corpus sized_corpus(const std::vector<std::pair<PatternId, int>>& sizes) {
  std::vector<Fragment> fragments;
  int next = 0;
  for (auto [id, n] : sizes) {
    for (int i = 0; i < n; ++i) {
      fragments.push_back(fragment("f" + std::to_string(next++), "text", "S", "P", {id}));
    }
  }
  return Corpus(std::move(fragments));
}

std::map<PatternId, std::pair<int, int>> per_label_counts(const Corpus& corpus, const Split& split) {
  std::map<PatternId, std::pair<int, int>> counts;
  for (const auto& id : split.train) {
    for (auto p : corpus.find(id)->labels.members()) ++counts[p].first;
  }
  for (const auto& id : split.test) {
    for (auto p : corpus.find(id)->labels.members()) ++counts[p].second;
  }
  return counts;
}

std::string random_text(Rng& rng) {
  static const std::vector<std::string> pieces = {
      "a", "B", "c9", "10", "0042", " ", "  ", ".", ",", "-", "/", "_", "__x", "é", "ü", "Ω",
      "ICD", "x2", "(", ")", "\t", ">=", "Patient", "no", "the", "On", "250.00", "don't"};
  std::string out;
  const std::size_t n = rng.below(12);
  for (std::size_t i = 0; i < n; ++i) out += pieces[rng.below(pieces.size())];
  return out;
}

}  // namespace

TEST_SUITE("labels") {
  TEST_CASE("six unique patterns with round-tripping names") {
    CHECK(builtin_patterns().size() == 6);
    std::set<std::string> names;
    for (auto id : kAllPatterns) {
      names.emplace(pattern_name(id));
      CHECK(parse_pattern(pattern_name(id)) == id);
    }
    CHECK(names.size() == 6);
    CHECK_FALSE(parse_pattern("FooPattern").has_value());
  }

  TEST_CASE("bundled label file matches the built-in table") {
    const auto loaded = load_patterns(testing::data_dir() / "design_patterns.json");
    REQUIRE(loaded.size() == 6);
    for (const auto& p : loaded) {
      const auto& builtin = builtin_patterns()[pattern_index(p.id)];
      CHECK(p.title == builtin.title);
      CHECK(p.description == builtin.description);
    }
    CHECK(builtin_patterns()[pattern_index(PatternId::WhereDidItHappen)].description.rfind(
              "Knowing if something was inpatient or outpatient is important.", 0) == 0);
  }

  TEST_CASE("label file with five patterns is rejected") {
    testing::TempDir dir("labels");
    auto doc = nlohmann::json::parse(std::ifstream(testing::data_dir() / "design_patterns.json"));
    doc.erase(doc.begin());
    std::ofstream(dir / "five.json") << doc.dump();
    CHECK_THROWS_AS(load_patterns(dir / "five.json"), ValidationError);
  }

  TEST_CASE("label set") {
    LabelSet s{PatternId::RuleOfN, PatternId::CheckForNegation, PatternId::RuleOfN};
    CHECK(s.size() == 2);
    CHECK(s.members() == std::vector<PatternId>{PatternId::RuleOfN, PatternId::CheckForNegation});
    CHECK(LabelSet{}.empty());
  }
}

TEST_SUITE("parse_corpus") {
  TEST_CASE("empty input") {
    const Corpus c = parse_text("");
    CHECK(c.empty());
    CHECK(c.sites().empty());
    CHECK(c.phenotypes().empty());
  }

  TEST_CASE("single record") {
    const Corpus c = parse_text(
        R"({"id":"1","text":"requires 2 codes","site":"Mayo","phenotype":"T2DM","labels":["RuleOfN"]})"
        "\n");
    REQUIRE(c.size() == 1);
    CHECK(c.sites() == std::set<std::string>{"Mayo"});
    CHECK(c.phenotypes() == std::set<std::string>{"T2DM"});
    CHECK(c.fragments()[0].labels == LabelSet{PatternId::RuleOfN});
  }

  TEST_CASE("unknown label is a validation error") {
    CHECK_THROWS_AS(
        parse_text(R"({"id":"1","text":"t","site":"s","phenotype":"p","labels":["FooPattern"]})"),
        ValidationError);
  }

  TEST_CASE("malformed line names its line number") {
    const std::string text =
        R"({"id":"1","text":"t","site":"s","phenotype":"p","labels":["RuleOfN"]})"
        "\n\n{not json\n";
    try {
      parse_text(text);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(std::string(e.what()).find("inline:3") != std::string::npos);
    }
  }

  TEST_CASE("missing field and bad values") {
    CHECK_THROWS_AS(parse_text(R"({"id":"1","text":"t","site":"s","labels":["RuleOfN"]})"),
                    ParseError);
    CHECK_THROWS_AS(parse_text(R"({"id":"1","text":"","site":"s","phenotype":"p","labels":["RuleOfN"]})"),
                    ValidationError);
    CHECK_THROWS_AS(parse_text(R"({"id":"1","text":"t","site":"s","phenotype":"p","labels":[]})"),
                    ValidationError);
    CHECK_THROWS_AS(parse_text(R"({"id":"1","text":"t","site":"s","phenotype":"p","labels":["RuleOfN"]})"
                               "\n"
                               R"({"id":"1","text":"u","site":"s","phenotype":"p","labels":["RuleOfN"]})"),
                    ValidationError);
  }

  TEST_CASE("input order is preserved and sets derive from fragments") {
    const Corpus c = parse_corpus(testing::data_dir() / "synthetic_corpus.jsonl");
    CHECK(c.size() == 240);
    std::set<std::string> sites, phenos;
    for (const auto& f : c.fragments()) {
      sites.insert(f.site);
      phenos.insert(f.phenotype);
    }
    CHECK(c.sites() == sites);
    CHECK(c.phenotypes() == phenos);
    CHECK(c.fragments().front().id == "syn-0001");
  }

  TEST_CASE("round trip over generated corpora") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Corpus original = generate_synthetic(default_synthetic_config(7), seed);
      std::stringstream buf;
      write_corpus(original, buf);
      const Corpus back = parse_corpus(buf, "buffer");
      CHECK(back == original);
      CHECK(back.sites() == original.sites());
    }
  }

  TEST_CASE("round trip keeps unicode and escapes") {
    Corpus c({fragment("a\"b", "naïve \"quoted\"\ttab", "Site é", "Pheno/1",
                       {PatternId::RuleOfN, PatternId::UseDistinctDates})});
    std::stringstream buf;
    write_corpus(c, buf);
    CHECK(parse_corpus(buf, "buffer") == c);
  }
}

TEST_SUITE("normalization") {
  TEST_CASE("examples") {
    CHECK(preprocess("Requires 2 diagnosis codes", default_stopwords()) ==
          TokenList{"requires", "_number", "diagnosis", "codes"});
    CHECK(preprocess("on the same day", StopWords{"on", "the", "same"}) == TokenList{"day"});
    CHECK(tokenize("ICD9 250.00") == TokenList{"icd_number", "_number", "_number"});
    CHECK(preprocess("", default_stopwords()).empty());
  }

  TEST_CASE("frozen oracle output") {
    std::ifstream in(testing::golden_dir() / "normalize.jsonl");
    REQUIRE(in);
    std::string line;
    int checked = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto rec = nlohmann::json::parse(line);
      const auto text = rec["text"].get<std::string>();
      CAPTURE(text);
      CHECK(tokenize(text) == rec["tokens"].get<TokenList>());
      CHECK(preprocess(text, default_stopwords()) == rec["preprocessed"].get<TokenList>());
      ++checked;
    }
    CHECK(checked >= 20);
  }

  TEST_CASE("bundled stop-word file equals the embedded list") {
    CHECK(load_stopwords(testing::data_dir() / "stopwords_en_v1.txt") == default_stopwords());
    for (const char* kept : {"no", "not", "nor", "without", "negative"}) {
      CHECK_FALSE(default_stopwords().contains(kept));
    }
    CHECK(default_stopwords().contains("the"));
  }

  TEST_CASE("invariants on random text") {
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
      const std::string text = random_text(rng);
      CAPTURE(text);
      const TokenList once = preprocess(text, default_stopwords());
      std::string joined;
      for (const auto& t : once) joined += t + " ";
      CHECK(preprocess(joined, default_stopwords()) == once);
      for (const auto& t : once) {
        CHECK_FALSE(default_stopwords().contains(t));
        CHECK(std::none_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; }));
        CHECK(std::none_of(t.begin(), t.end(), [](char c) { return c >= 'A' && c <= 'Z'; }));
      }
    }
  }
}

TEST_SUITE("split") {
  TEST_CASE("ratio arithmetic") {
    const Ratio r = Ratio::from_decimal(0.7);
    CHECK(r.numerator == 7);
    CHECK(r.denominator == 10);
    CHECK(r.ceil_share(53) == 38);
    CHECK(r.ceil_share(19) == 14);
    CHECK(r.ceil_share(0) == 0);
  }

  TEST_CASE("reference class sizes at 7:3") {
    const Corpus c = sized_corpus({{PatternId::WhereDidItHappen, 19},
                                   {PatternId::CredentialsOfTheActor, 19},
                                   {PatternId::CheckForNegation, 21},
                                   {PatternId::ConfirmDiseaseWasChecked, 21},
                                   {PatternId::UseDistinctDates, 39},
                                   {PatternId::RuleOfN, 53}});
    const Split s = split_corpus(c, {7, 10}, 3);
    const auto counts = per_label_counts(c, s);
    const std::map<PatternId, std::pair<int, int>> reference = {
        {PatternId::WhereDidItHappen, {14, 5}},       {PatternId::CredentialsOfTheActor, {14, 5}},
        {PatternId::CheckForNegation, {15, 6}},       {PatternId::ConfirmDiseaseWasChecked, {15, 6}},
        {PatternId::UseDistinctDates, {28, 11}},      {PatternId::RuleOfN, {39, 14}}};
    for (const auto& [id, want] : reference) {
      CAPTURE(pattern_name(id));
      CHECK(std::abs(counts.at(id).first - want.first) <= 1);
      CHECK(std::abs(counts.at(id).second - want.second) <= 1);
    }
    CHECK(counts.at(PatternId::WhereDidItHappen) == std::pair{14, 5});
  }

  TEST_CASE("ratio bounds") {
    const Corpus c = sized_corpus({{PatternId::RuleOfN, 4}});
    CHECK_THROWS_AS(split_corpus(c, {1, 1}, 1), std::invalid_argument);
    CHECK_THROWS_AS(split_corpus(c, {0, 5}, 1), std::invalid_argument);
    CHECK_NOTHROW(split_corpus(c, {1, 2}, 1));
  }

  TEST_CASE("rare labels warn but still split") {
    const Corpus c = sized_corpus({{PatternId::RuleOfN, 6}, {PatternId::CheckForNegation, 1}});
    const Split s = split_corpus(c, {7, 10}, 1);
    CHECK(s.train.size() + s.test.size() == 7);
    REQUIRE(s.warnings.size() == 1);
    CHECK(s.warnings[0].find("CheckForNegation") != std::string::npos);
  }

  TEST_CASE("partition and stratification bound across seeds and ratios") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      SyntheticConfig config = default_synthetic_config(5 + seed % 9);
      if (seed % 3 == 0) {
        config.classes[PatternId::RuleOfN].co_labels[PatternId::UseDistinctDates] = 0.2;
      }
      const Corpus c = generate_synthetic(config, seed);
      for (Ratio ratio : {Ratio{7, 10}, Ratio{1, 2}, Ratio{2, 3}, Ratio{9, 10}}) {
        const Split s = split_corpus(c, ratio, seed);
        std::set<std::string> train(s.train.begin(), s.train.end());
        std::set<std::string> test(s.test.begin(), s.test.end());
        CHECK(train.size() == s.train.size());
        CHECK(test.size() == s.test.size());
        std::set<std::string> both;
        std::set_intersection(train.begin(), train.end(), test.begin(), test.end(),
                              std::inserter(both, both.end()));
        CHECK(both.empty());
        CHECK(train.size() + test.size() == c.size());

        std::map<PatternId, int> totals;
        for (const auto& f : c.fragments()) {
          for (auto p : f.labels.members()) ++totals[p];
        }
        for (const auto& [id, tt] : per_label_counts(c, s)) {
          const double target = ratio.value() * totals[id];
          CHECK(std::abs(tt.first - target) <= 1.0 + 1e-9);
        }
      }
    }
  }

  TEST_CASE("deterministic per seed") {
    const Corpus c = generate_synthetic(default_synthetic_config(10), 4);
    const Split a = split_corpus(c, {7, 10}, 11);
    const Split b = split_corpus(c, {7, 10}, 11);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    const Split other = split_corpus(c, {7, 10}, 12);
    CHECK(other.train != a.train);
  }

  TEST_CASE("stratified_assign gives ceil-difference group sizes") {
    std::vector<std::vector<std::size_t>> items(10, std::vector<std::size_t>{0});
    const std::vector<std::int64_t> weights = {1, 1, 1};
    const auto groups = stratified_assign(items, 1, weights, 5);
    std::vector<int> sizes(3, 0);
    for (auto g : groups) ++sizes.at(g);
    CHECK(sizes == std::vector<int>{4, 3, 3});
  }
}

TEST_SUITE("vocabulary") {
  TEST_CASE("first-seen order") {
    const std::vector<TokenList> docs = {{"a", "b"}, {"b", "c"}};
    const Vocabulary v = Vocabulary::build(docs);
    CHECK(v.tokens() == std::vector<std::string>{"a", "b", "c"});
    CHECK(v.index_of("c") == 2u);
    CHECK_FALSE(v.index_of("d").has_value());
  }

  TEST_CASE("single empty document") {
    const std::vector<TokenList> docs = {{}};
    CHECK(Vocabulary::build(docs).size() == 0);
  }

  TEST_CASE("dense indices on generated corpora") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Corpus c = generate_synthetic(default_synthetic_config(6), seed);
      std::vector<TokenList> docs;
      for (const auto& f : c.fragments()) docs.push_back(preprocess(f.text, default_stopwords()));
      const Vocabulary v = Vocabulary::build(docs);
      for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.index_of(v.tokens()[i]) == i);
    }
  }
}

TEST_SUITE("synthetic") {
  TEST_CASE("six classes of twenty") {
    const Corpus c = generate_synthetic(default_synthetic_config(20), 1);
    CHECK(c.size() == 120);
    std::map<PatternId, int> counts;
    for (const auto& f : c.fragments()) {
      for (auto p : f.labels.members()) ++counts[p];
    }
    for (auto id : kAllPatterns) CHECK(counts[id] == 20);
  }

  TEST_CASE("byte-identical for a fixed seed") {
    std::ostringstream a, b;
    write_corpus(generate_synthetic(default_synthetic_config(20), 9), a);
    write_corpus(generate_synthetic(default_synthetic_config(20), 9), b);
    CHECK(a.str() == b.str());
  }

  TEST_CASE("labels follow cues") {
    const auto config = parse_synthetic_config(
        R"({"WhereDidItHappen": {"cues": ["inpatient"], "count": 15},
            "RuleOfN": {"cues": ["twice", "least"], "count": 15}})");
    const Corpus c = generate_synthetic(config, 3);
    for (const auto& f : c.fragments()) {
      const auto tokens = tokenize(f.text);
      const bool has = std::find(tokens.begin(), tokens.end(), "inpatient") != tokens.end();
      CHECK(has == f.labels.contains(PatternId::WhereDidItHappen));
    }
  }

  TEST_CASE("bundled fixture matches its generator config") {
    const auto config = load_synthetic_config(testing::data_dir() / "synthetic_config.json");
    std::ostringstream generated;
    write_corpus(generate_synthetic(config, 1), generated);
    std::ifstream in(testing::data_dir() / "synthetic_corpus.jsonl");
    std::stringstream bundled;
    bundled << in.rdbuf();
    CHECK(generated.str() == bundled.str());
  }

  TEST_CASE("invalid configs") {
    CHECK_THROWS_AS(generate_synthetic(SyntheticConfig{}, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic(parse_synthetic_config(R"({"RuleOfN": {"cues": [], "count": 3}})"), 1),
                    std::invalid_argument);
    CHECK_THROWS(parse_synthetic_config(R"({"Nope": {"cues": ["x"], "count": 3}})"));
  }
}
