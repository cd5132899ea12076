#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <map>
#include <string>

#include "dse2qa/core.hpp"
#include "dse2qa/random.hpp"

using namespace dse2qa;

namespace {

std::string random_sentence(Rng& rng) {
  static const std::array<const char*, 6> words = {"said", "the", "blamed", "on", "Monday", "praised"};
  std::string s;
  const auto n = uniform_index(rng, 6);
  for (std::size_t i = 0; i < n; ++i) s += std::string(words[uniform_index(rng, words.size())]) + " ";
  return s + "[Ent1] " + words[uniform_index(rng, words.size())] + " [Ent2] .";
}

}  // namespace

TEST_CASE("question texts") {
  CHECK(question(0, QuestionStyle::kComplete).text == "Do [Ent1] and [Ent2] have neutral sentiment toward each other?");
  CHECK(question(1, QuestionStyle::kComplete).text == "Does [Ent1] has positive sentiment toward [Ent2]?");
  CHECK(question(2, QuestionStyle::kComplete).text == "Does [Ent2] has positive sentiment toward [Ent1]?");
  CHECK(question(3, QuestionStyle::kComplete).text == "Does [Ent1] has negative sentiment toward [Ent2]?");
  CHECK(question(4, QuestionStyle::kComplete).text == "Does [Ent2] has negative sentiment toward [Ent1]?");
  CHECK(question(0, QuestionStyle::kPseudo).text == "[Ent1] - [Ent2] - neutral");
  CHECK(question(1, QuestionStyle::kPseudo).text == "[Ent1] - [Ent2] - positive");
  CHECK(question(2, QuestionStyle::kPseudo).text == "[Ent2] - [Ent1] - positive");
  CHECK(question(3, QuestionStyle::kPseudo).text == "[Ent1] - [Ent2] - negative");
  CHECK(question(4, QuestionStyle::kPseudo).text == "[Ent2] - [Ent1] - negative");
  CHECK(question(1, QuestionStyle::kComplete, true).text == "Does [Ent1] have positive sentiment toward [Ent2]?");
  CHECK_THROWS_AS(question(5, QuestionStyle::kPseudo), ValidationError);
}

TEST_CASE("labels and directions") {
  CHECK(label_from_index(3) == SentimentLabel::kNegativeForward);
  CHECK_THROWS_AS(label_from_index(5), ValidationError);
  CHECK_THROWS_AS(label_from_index(-1), ValidationError);
  for (int i = 0; i < kNumLabels; ++i) {
    const auto l = label_from_index(i);
    CHECK(reverse_direction(reverse_direction(l)) == l);
  }
  CHECK(reverse_direction(SentimentLabel::kPositiveForward) == SentimentLabel::kPositiveBackward);
  CHECK(reverse_direction(SentimentLabel::kNeutral) == SentimentLabel::kNeutral);
  CHECK(parse_question_style("pseudo") == QuestionStyle::kPseudo);
  CHECK_THROWS_AS(parse_question_style("short"), UsageError);
}

TEST_CASE("augment yields one-hot tuples over random examples") {
  Rng rng = make_rng(11, "augment-test");
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = random_sentence(rng);
    const auto label = label_from_index(static_cast<long long>(uniform_index(rng, kNumLabels)));
    const auto style = uniform_index(rng, 2) == 0 ? QuestionStyle::kComplete : QuestionStyle::kPseudo;
    const auto tuples = augment(s, label, style);
    int ones = 0;
    for (int i = 0; i < kNumLabels; ++i) {
      const auto& t = tuples[static_cast<std::size_t>(i)];
      REQUIRE(t.sentence == s);
      REQUIRE(t.question.index == i);
      REQUIRE(t.question.text == question(i, style).text);
      REQUIRE((t.binary_label == 0 || t.binary_label == 1));
      ones += t.binary_label;
      if (t.binary_label == 1) REQUIRE(i == index_of(label));
    }
    REQUIRE(ones == 1);
  }
}

TEST_CASE("aggregate inverts augment") {
  for (int l = 0; l < kNumLabels; ++l) {
    const auto tuples = augment("[Ent1] met [Ent2] .", label_from_index(l), QuestionStyle::kPseudo);
    std::array<double, kNumLabels> y{};
    for (int i = 0; i < kNumLabels; ++i) y[static_cast<std::size_t>(i)] = tuples[static_cast<std::size_t>(i)].binary_label;
    CHECK(aggregate(ScoreVector(y)) == label_from_index(l));
  }
}

TEST_CASE("argmax is invariant under strictly increasing transforms") {
  Rng rng = make_rng(5, "argmax-test");
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<double, kNumLabels> y{};
    for (auto& v : y) v = uniform_unit(rng);
    const auto base = aggregate(ScoreVector(y));
    std::array<double, kNumLabels> a{}, b{}, c{};
    for (std::size_t i = 0; i < kNumLabels; ++i) {
      a[i] = std::log(y[i] + 1e-12);
      b[i] = 3.0 * y[i] - 7.0;
      c[i] = y[i] * y[i] * y[i];
    }
    REQUIRE(argmax_label(std::span<const double, kNumLabels>(a)) == base);
    REQUIRE(argmax_label(std::span<const double, kNumLabels>(b)) == base);
    REQUIRE(argmax_label(std::span<const double, kNumLabels>(c)) == base);
  }
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(aggregate(ScoreVector({0.2, 0.9, 0.9, 0.1, 0.0})) == SentimentLabel::kPositiveForward);
  CHECK(aggregate(ScoreVector({0.5, 0.5, 0.5, 0.5, 0.5})) == SentimentLabel::kNeutral);
}

TEST_CASE("score vectors reject values outside [0,1]") {
  CHECK_THROWS_AS(ScoreVector({0.1, 1.2, 0.0, 0.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(ScoreVector({0.1, -0.1, 0.0, 0.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(ScoreVector({0.1, std::nan(""), 0.0, 0.0, 0.0}), ValidationError);
}

TEST_CASE("oversampling balances classes and keeps originals first") {
  struct Item {
    int id;
    SentimentLabel label;
  };
  std::vector<Item> train;
  const std::array<int, kNumLabels> sizes = {20, 4, 1, 7, 2};
  int id = 0;
  for (int c = 0; c < kNumLabels; ++c) {
    for (int k = 0; k < sizes[static_cast<std::size_t>(c)]; ++k) train.push_back({id++, label_from_index(c)});
  }
  auto label_of = [](const Item& i) { return i.label; };
  const auto out = oversample(train, label_of, 42);
  REQUIRE(out.size() == 20u * kNumLabels);
  for (std::size_t i = 0; i < train.size(); ++i) CHECK(out[i].id == train[i].id);
  std::map<SentimentLabel, int> counts;
  for (const auto& it : out) ++counts[it.label];
  for (const auto& [l, n] : counts) CHECK(n == 20);
  const auto again = oversample(train, label_of, 42);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].id == out[i].id);

  train.erase(std::remove_if(train.begin(), train.end(), [](const Item& i) { return i.label == SentimentLabel::kPositiveBackward; }),
              train.end());
  CHECK_THROWS_AS(oversample(train, label_of, 42), ValidationError);
}

TEST_CASE("paired input serialisation follows the backend convention") {
  const auto q = question(3, QuestionStyle::kPseudo);
  CHECK(serialize_pair("[Ent1] blamed [Ent2] .", q, PairConvention::bert()).serialized() ==
        "[CLS] [Ent1] blamed [Ent2] . [SEP] [Ent1] - [Ent2] - negative [SEP]");
  CHECK(serialize_pair("[Ent1] blamed [Ent2] .", q, PairConvention::roberta()).serialized() ==
        "<s> [Ent1] blamed [Ent2] . </s></s> [Ent1] - [Ent2] - negative </s>");
  CHECK_THROWS_AS(serialize_pair("", q, PairConvention::bert()), ValidationError);
}
