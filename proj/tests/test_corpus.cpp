#include <catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <string>

#include "dse2qa/corpus.hpp"

using namespace dse2qa;
using namespace dse2qa::corpus;

namespace {

std::vector<std::vector<std::string>> load_paragraphs(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::vector<std::vector<std::string>> paras(1);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    if (text::trim(line).empty()) {
      if (!paras.back().empty()) paras.emplace_back();
      continue;
    }
    paras.back().push_back(line);
  }
  if (paras.back().empty()) paras.pop_back();
  return paras;
}

EntitySpan span_of(const std::string& s, const std::string& surface, const std::string& type, std::size_t from = 0) {
  const auto at = s.find(surface, from);
  REQUIRE(at != std::string::npos);
  return {surface, at, at + surface.size(), type};
}

SentimentDictionary small_dictionary() { return SentimentDictionary({"blamed", "praised", "lashed out"}, "test"); }

}  // namespace

TEST_CASE("splitter reproduces the 50-sentence fixture") {
  const auto paras = load_paragraphs(std::string(DSE2QA_SOURCE_DIR) + "/tests/fixtures/splitter_sentences.txt");
  std::size_t total = 0;
  RuleSentenceSplitter splitter;
  for (const auto& p : paras) {
    std::string joined;
    for (const auto& s : p) joined += (joined.empty() ? "" : " ") + s;
    CHECK(splitter.split(joined) == p);
    total += p.size();
  }
  CHECK(total == 50);
}

TEST_CASE("blank lines always end a sentence") {
  RuleSentenceSplitter splitter;
  CHECK(splitter.split("Breaking news\n\nThe senator resigned.") ==
        std::vector<std::string>{"Breaking news", "The senator resigned."});
}

TEST_CASE("k recognised entities give k choose 2 ordered pairs") {
  const std::string s = "Trump blamed China and the WHO while Pelosi and Biden watched.";
  std::vector<EntitySpan> spans = {span_of(s, "Trump", "PERSON"), span_of(s, "China", "GPE"), span_of(s, "WHO", "ORG"),
                                   span_of(s, "Pelosi", "PERSON"), span_of(s, "Biden", "PERSON")};
  for (std::size_t k = 0; k <= spans.size(); ++k) {
    const auto pairs = extract_candidate_pairs(s, std::span<const EntitySpan>(spans.data(), k));
    REQUIRE(pairs.size() == k * (k == 0 ? 0 : k - 1) / 2);
    for (const auto& p : pairs) CHECK(p.first.start < p.second.start);
  }
}

TEST_CASE("entity type filter drops pairs involving other types") {
  const std::string s = "Trump blamed China on Monday.";
  std::vector<EntitySpan> spans = {span_of(s, "Trump", "PERSON"), span_of(s, "China", "GPE"), span_of(s, "Monday", "DATE")};
  const auto pairs = extract_candidate_pairs(s, spans);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].second.surface == "China");
}

TEST_CASE("overlapping or unsorted spans are rejected") {
  const std::string s = "New York Times reporters asked.";
  std::vector<EntitySpan> overlap = {span_of(s, "New York Times", "ORG"), span_of(s, "York", "GPE")};
  CHECK_THROWS_AS(extract_candidate_pairs(s, overlap), ValidationError);
  std::vector<EntitySpan> bad = {{"Nope", 0, 4, "ORG"}};
  CHECK_THROWS_AS(extract_candidate_pairs(s, bad), ValidationError);
}

TEST_CASE("dictionary filter matches whole words case-insensitively") {
  const auto d = small_dictionary();
  CHECK(dictionary_filter("Trump BLAMED China.", d));
  CHECK(dictionary_filter("Trump Blamed China.", d));
  CHECK_FALSE(dictionary_filter("Trump unblamed China.", d));
  CHECK(dictionary_filter("Biden lashed  out at Trump.", d));
  CHECK_FALSE(dictionary_filter("Biden lashed at Trump.", d));
  CHECK_THROWS_AS(SentimentDictionary({"Blamed"}, "x"), ValidationError);
}

TEST_CASE("sampling takes ceil(f*n) from the dictionary pool") {
  std::vector<CandidatePair> pool;
  for (int i = 0; i < 20; ++i) {
    const std::string s = std::string(i % 2 == 0 ? "Alpha blamed Beta " : "Alpha met Beta ") + std::to_string(i) + ".";
    CandidatePair p;
    p.sentence = s;
    p.first = span_of(s, "Alpha", "PERSON");
    p.second = span_of(s, "Beta", "PERSON");
    p.source_article = "a" + std::to_string(i);
    pool.push_back(p);
  }
  const auto d = small_dictionary();
  const auto got = sample_candidates(pool, d, 0.7, 10, 4);
  REQUIRE(got.size() == 10);
  const auto n_dict = std::count_if(got.begin(), got.end(), [](const CandidatePair& p) { return p.sampling_route == SamplingRoute::kDictionary; });
  CHECK(n_dict == 7);
  for (const auto& p : got) CHECK(dictionary_filter(p.sentence, d) == (p.sampling_route == SamplingRoute::kDictionary));

  SECTION("input order does not matter") {
    for (int trial = 0; trial < 20; ++trial) {
      auto perm = pool;
      Rng rng = make_rng(static_cast<std::uint64_t>(trial), "perm");
      shuffle(std::span<CandidatePair>(perm), rng);
      const auto again = sample_candidates(perm, d, 0.7, 10, 4);
      REQUIRE(again.size() == got.size());
      for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(again[i].item_id() == got[i].item_id());
    }
  }
  SECTION("insufficient pools fail") {
    CHECK_THROWS_AS(sample_candidates(pool, d, 0.7, 16, 4), ValidationError);
    CHECK_THROWS_AS(sample_candidates(pool, d, 1.5, 10, 4), UsageError);
  }
}

TEST_CASE("masking replaces exactly the two spans") {
  const std::string s = "Trump said Trump Jr. blamed China.";
  CandidatePair p;
  p.sentence = s;
  p.first = span_of(s, "Trump Jr.", "PERSON");
  p.second = span_of(s, "China", "GPE");
  CHECK(mask_entities(p).text == "Trump said [Ent1] blamed [Ent2].");
  p.first = span_of(s, "Trump", "PERSON");
  CHECK(mask_entities(p).text == "[Ent1] said Trump Jr. blamed [Ent2].");
  std::swap(p.first, p.second);
  CHECK_THROWS_AS(mask_entities(p), ValidationError);
}

TEST_CASE("gazetteer prefers the longest match and tags titled names") {
  GazetteerRecognizer g;
  g.add("New York", "GPE");
  g.add("New York Times", "ORG");
  g.add("China", "GPE");
  const std::string s = "Dr. Anthony Fauci told the New York Times that China lied.";
  const auto spans = g.recognize(s);
  REQUIRE(spans.size() == 3);
  CHECK(spans[0].surface == "Anthony Fauci");
  CHECK(spans[0].entity_type == "PERSON");
  CHECK(spans[1].surface == "New York Times");
  CHECK(spans[2].surface == "China");
  for (const auto& sp : spans) CHECK(s.substr(sp.start, sp.end - sp.start) == sp.surface);
  CHECK(g.recognize("Chinatown is busy.").empty());
}
