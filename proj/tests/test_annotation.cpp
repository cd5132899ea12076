#include <catch_amalgamated.hpp>

#include <map>
#include <set>

#include "dse2qa/annotation.hpp"

using namespace dse2qa;
using namespace dse2qa::annotation;
using L = SentimentLabel;

namespace {

AnnotationResponse resp(std::string item, std::string worker, L choice, double secs = 5.0, bool test = false,
                        bool passed = true) {
  return {std::move(item), std::move(worker), choice, secs, test, passed};
}

// Direct transcription of the textbook formula, kept independent of the
// library's loop structure.
double kappa_oracle(const std::vector<VoteRow>& rows, int n) {
  const double N = static_cast<double>(rows.size());
  double pbar = 0;
  std::array<double, kNumLabels> pj{};
  for (const auto& r : rows) {
    double s = 0;
    for (int j = 0; j < kNumLabels; ++j) {
      s += r[j] * (r[j] - 1.0);
      pj[j] += r[j] / (N * n);
    }
    pbar += s / (n * (n - 1.0));
  }
  pbar /= N;
  double pe = 0;
  for (double p : pj) pe += p * p;
  return (pbar - pe) / (1 - pe);
}

}  // namespace

TEST_CASE("fleiss kappa on hand fixtures") {
  const std::vector<VoteRow> two = {VoteRow{3, 2, 0, 0, 0}, VoteRow{2, 3, 0, 0, 0}};
  CHECK(fleiss_kappa(two) == Catch::Approx(-0.2).margin(1e-9));

  // Classic 10-item, 14-rater table; exact value 4211/20059.
  const std::vector<VoteRow> classic = {{0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0}, {2, 2, 8, 1, 1},
                                        {7, 7, 0, 0, 0},  {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2}, {6, 5, 2, 1, 0}, {0, 2, 2, 3, 7}};
  CHECK(fleiss_kappa(classic, 14) == Catch::Approx(4211.0 / 20059.0).margin(1e-9));
}

TEST_CASE("perfect agreement gives kappa 1") {
  const std::vector<VoteRow> rows = {{5, 0, 0, 0, 0}, {0, 5, 0, 0, 0}, {0, 0, 0, 5, 0}};
  CHECK(fleiss_kappa(rows) == Catch::Approx(1.0).margin(1e-12));
  const std::vector<VoteRow> single = {{0, 0, 5, 0, 0}, {0, 0, 5, 0, 0}};
  CHECK(fleiss_kappa(single) == 1.0);
}

TEST_CASE("fleiss kappa matches the formula on random tables") {
  Rng rng = make_rng(9, "kappa");
  for (int t = 0; t < 500; ++t) {
    std::vector<VoteRow> rows(1 + uniform_index(rng, 30));
    for (auto& r : rows) {
      r = {};
      for (int k = 0; k < kRatersPerItem; ++k) ++r[uniform_index(rng, kNumLabels)];
    }
    bool one_category = true;
    for (const auto& r : rows) one_category = one_category && r == rows[0] && *std::max_element(r.begin(), r.end()) == kRatersPerItem;
    if (one_category) continue;
    const double k = fleiss_kappa(rows);
    REQUIRE(k == Catch::Approx(kappa_oracle(rows, kRatersPerItem)).margin(1e-9));
    REQUIRE(k <= 1.0 + 1e-12);
  }
}

TEST_CASE("fleiss kappa rejects malformed rows") {
  const std::vector<VoteRow> bad = {{3, 1, 0, 0, 0}};
  CHECK_THROWS_AS(fleiss_kappa(bad), ValidationError);
  CHECK_THROWS_AS(fleiss_kappa(std::vector<VoteRow>{}), ValidationError);
}

TEST_CASE("majority vote and tie resolution") {
  const std::vector<L> clear = {L::kNegativeForward, L::kNegativeForward, L::kNegativeForward, L::kNeutral, L::kPositiveForward};
  const auto g = majority_vote("x", clear);
  CHECK(g.label == L::kNegativeForward);
  CHECK(g.resolved_by == Resolution::kMajority);
  CHECK(g.vote_counts == std::array<int, 5>{1, 1, 0, 3, 0});

  const std::vector<L> tie = {L::kPositiveForward, L::kPositiveForward, L::kNegativeBackward, L::kNegativeBackward, L::kNeutral};
  const auto t = majority_vote("y", tie);
  CHECK(t.label == L::kNeutral);
  CHECK(t.resolved_by == Resolution::kTieToNeutral);

  const std::vector<L> plurality = {L::kPositiveBackward, L::kPositiveBackward, L::kNeutral, L::kNegativeForward, L::kPositiveForward};
  CHECK(majority_vote("z", plurality).label == L::kPositiveBackward);

  const std::vector<L> four = {L::kNeutral, L::kNeutral, L::kNeutral, L::kNeutral};
  CHECK_THROWS_AS(majority_vote("w", four), ValidationError);
}

TEST_CASE("one unreliable response blacklists the worker") {
  const std::vector<AnnotationResponse> rs = {
      resp("a", "good", L::kNeutral),
      resp("b", "good", L::kNeutral),
      resp("a", "fast", L::kNeutral),
      resp("b", "fast", L::kNeutral, 0.5),
      resp("a", "tester", L::kNeutral),
      resp("t", "tester", L::kNeutral, 5.0, true, false),
      resp("t", "good", L::kNeutral, 5.0, true, true),
  };
  const auto f = filter_unreliable(rs);
  CHECK(f.kept.size() == 3);
  for (const auto& r : f.kept) CHECK(r.worker_id == "good");
  CHECK(f.ledger.at("fast").blacklisted);
  CHECK(f.ledger.at("fast").discarded == 2);
  CHECK(f.ledger.at("tester").unreliable == 1);
  CHECK_FALSE(f.ledger.at("good").blacklisted);
  CHECK(is_unreliable(resp("x", "w", L::kNeutral, 0.999)));
  CHECK_FALSE(is_unreliable(resp("x", "w", L::kNeutral, 1.0)));
  CHECK_THROWS_AS(filter_unreliable(std::vector<AnnotationResponse>{resp("x", "w", L::kNeutral, -1.0)}), ValidationError);
}

TEST_CASE("stratified split keeps class proportions within rounding") {
  struct Item {
    int id;
    L label;
  };
  const std::array<std::size_t, kNumLabels> class_sizes = {10604, 1656, 327, 3163, 478};
  std::vector<Item> items;
  int id = 0;
  for (int c = 0; c < kNumLabels; ++c) {
    for (std::size_t k = 0; k < class_sizes[c]; ++k) items.push_back({id++, label_from_index(c)});
  }
  const std::array<std::size_t, 3> sizes = {13144, 1461, 1623};
  auto label_of = [](const Item& i) { return i.label; };
  const auto s = split_dataset(items, label_of, sizes, 13);
  CHECK(s.train.size() == 13144);
  CHECK(s.val.size() == 1461);
  CHECK(s.test.size() == 1623);

  std::set<int> seen;
  const std::array<const std::vector<Item>*, 3> parts = {&s.train, &s.val, &s.test};
  for (std::size_t p = 0; p < 3; ++p) {
    std::array<std::size_t, kNumLabels> counts{};
    for (const auto& it : *parts[p]) {
      REQUIRE(seen.insert(it.id).second);
      ++counts[index_of(it.label)];
    }
    for (int c = 0; c < kNumLabels; ++c) {
      const double ideal = static_cast<double>(class_sizes[c]) * static_cast<double>(sizes[p]) / 16228.0;
      CHECK(std::abs(static_cast<double>(counts[c]) - ideal) < 1.0);
    }
  }
  CHECK(seen.size() == items.size());

  const auto again = split_dataset(items, label_of, sizes, 13);
  for (std::size_t i = 0; i < s.test.size(); ++i) CHECK(again.test[i].id == s.test[i].id);
  CHECK_THROWS_AS(split_dataset(items, label_of, std::array<std::size_t, 3>{1, 2, 3}, 13), ValidationError);
}

TEST_CASE("stratified counts always respect row and column sums") {
  Rng rng = make_rng(2, "strat");
  for (int t = 0; t < 300; ++t) {
    std::array<std::size_t, kNumLabels> cls{};
    std::size_t total = 0;
    for (auto& c : cls) total += (c = uniform_index(rng, 40));
    if (total == 0) continue;
    std::array<std::size_t, 3> sizes{};
    sizes[0] = uniform_index(rng, total + 1);
    sizes[1] = uniform_index(rng, total - sizes[0] + 1);
    sizes[2] = total - sizes[0] - sizes[1];
    const auto m = annotation::detail::stratified_counts(cls, sizes);
    for (int c = 0; c < kNumLabels; ++c) REQUIRE(m[c][0] + m[c][1] + m[c][2] == cls[c]);
    for (int s = 0; s < 3; ++s) {
      std::size_t col = 0;
      for (int c = 0; c < kNumLabels; ++c) {
        col += m[c][s];
        const double ideal = static_cast<double>(cls[c]) * static_cast<double>(sizes[s]) / static_cast<double>(total);
        REQUIRE(std::abs(static_cast<double>(m[c][s]) - ideal) < 1.0);
      }
      REQUIRE(col == sizes[s]);
    }
  }
}
