#pragma once

// Crowdsourced response aggregation: reliability filtering with worker
// blacklisting, 5-vote majority, Fleiss' kappa, and stratified splitting.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dse2qa/core.hpp"
#include "dse2qa/errors.hpp"
#include "dse2qa/log.hpp"
#include "dse2qa/random.hpp"

namespace dse2qa::annotation {

inline constexpr int kRatersPerItem = 5;
inline constexpr double kMinDurationSeconds = 1.0;

struct AnnotationResponse {
  std::string item_id;
  std::string worker_id;
  SentimentLabel choice = SentimentLabel::kNeutral;
  double duration_seconds = 0.0;
  bool is_test_item = false;
  bool test_passed = true;  // meaningful only for test items
};

struct WorkerStats {
  std::size_t total = 0;
  std::size_t unreliable = 0;
  std::size_t discarded = 0;
  bool blacklisted = false;
};

using WorkerLedger = std::map<std::string, WorkerStats>;

struct FilterResult {
  std::vector<AnnotationResponse> kept;
  WorkerLedger ledger;
};

inline bool is_unreliable(const AnnotationResponse& r) {
  return r.duration_seconds < kMinDurationSeconds || (r.is_test_item && !r.test_passed);
}

// A worker with one unreliable response loses all of their responses.
inline FilterResult filter_unreliable(std::span<const AnnotationResponse> responses) {
  FilterResult res;
  for (const auto& r : responses) {
    if (r.duration_seconds < 0.0 || !std::isfinite(r.duration_seconds)) {
      throw ValidationError("negative or non-finite duration for item " + r.item_id);
    }
    auto& w = res.ledger[r.worker_id];
    ++w.total;
    if (is_unreliable(r)) {
      ++w.unreliable;
      w.blacklisted = true;
    }
  }
  for (const auto& r : responses) {
    auto& w = res.ledger[r.worker_id];
    if (w.blacklisted) {
      ++w.discarded;
    } else {
      res.kept.push_back(r);
    }
  }
  return res;
}

enum class Resolution { kMajority, kTieToNeutral };

inline std::string_view to_string(Resolution r) {
  return r == Resolution::kMajority ? "majority" : "tie_to_neutral";
}

struct GoldLabel {
  std::string item_id;
  SentimentLabel label = SentimentLabel::kNeutral;
  std::array<int, kNumLabels> vote_counts{};
  Resolution resolved_by = Resolution::kMajority;
};

// Exactly five votes per item; a tie for the top count resolves to neutral.
inline GoldLabel majority_vote(const std::string& item_id, std::span<const SentimentLabel> votes) {
  if (votes.size() != static_cast<std::size_t>(kRatersPerItem)) {
    throw ValidationError("item " + item_id + " has " + std::to_string(votes.size()) +
                          " reliable responses; needs re-annotation to reach " +
                          std::to_string(kRatersPerItem));
  }
  GoldLabel g;
  g.item_id = item_id;
  for (auto v : votes) ++g.vote_counts[static_cast<std::size_t>(index_of(v))];
  int best = 0;
  int n_best = 0;
  for (int c = 0; c < kNumLabels; ++c) {
    const int v = g.vote_counts[static_cast<std::size_t>(c)];
    if (v > g.vote_counts[static_cast<std::size_t>(best)]) {
      best = c;
      n_best = 1;
    } else if (v == g.vote_counts[static_cast<std::size_t>(best)]) {
      ++n_best;
    }
  }
  if (n_best > 1) {
    g.label = SentimentLabel::kNeutral;
    g.resolved_by = Resolution::kTieToNeutral;
  } else {
    g.label = static_cast<SentimentLabel>(best);
    g.resolved_by = Resolution::kMajority;
  }
  return g;
}

using VoteRow = std::array<int, kNumLabels>;

// Fleiss' kappa for N items each rated by `raters` annotators.
inline double fleiss_kappa(std::span<const VoteRow> counts, int raters = kRatersPerItem) {
  if (counts.empty()) throw ValidationError("fleiss_kappa needs at least one item");
  if (raters < 2) throw ValidationError("fleiss_kappa needs at least two raters per item");
  const double n = raters;
  const double big_n = static_cast<double>(counts.size());
  std::array<double, kNumLabels> col{};
  double p_bar = 0.0;
  for (const auto& row : counts) {
    int sum = 0;
    double sq = 0.0;
    for (int j = 0; j < kNumLabels; ++j) {
      const int v = row[static_cast<std::size_t>(j)];
      if (v < 0) throw ValidationError("negative vote count");
      sum += v;
      sq += static_cast<double>(v) * v;
      col[static_cast<std::size_t>(j)] += v;
    }
    if (sum != raters) {
      throw ValidationError("vote row sums to " + std::to_string(sum) + ", expected " +
                            std::to_string(raters));
    }
    p_bar += (sq - n) / (n * (n - 1.0));
  }
  p_bar /= big_n;
  double p_e = 0.0;
  for (double c : col) {
    const double p = c / (big_n * n);
    p_e += p * p;
  }
  if (p_e >= 1.0) {
    log::warn("fleiss_kappa: all votes fall in one category; kappa defined as 1.0");
    return 1.0;
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

template <typename T>
struct Splits {
  std::vector<T> train;
  std::vector<T> val;
  std::vector<T> test;
};

namespace detail {

// Rounds the per-class/per-split ideal counts n_c * size_s / N to floor or
// ceil while keeping every row and column sum exact (controlled rounding,
// solved as a small max-flow).
inline std::array<std::array<std::size_t, 3>, kNumLabels> stratified_counts(
    const std::array<std::size_t, kNumLabels>& class_sizes, const std::array<std::size_t, 3>& sizes) {
  std::size_t total = 0;
  for (auto c : class_sizes) total += c;
  std::array<std::array<std::size_t, 3>, kNumLabels> out{};
  if (total == 0) return out;

  // Nodes: 0 source, 1..5 classes, 6..8 splits, 9 sink.
  constexpr int kNodes = kNumLabels + 3 + 2;
  constexpr int kSrc = 0, kSink = kNodes - 1;
  std::array<std::array<long long, kNodes>, kNodes> cap{};
  std::array<long long, 3> col_floor{};
  for (int c = 0; c < kNumLabels; ++c) {
    long long row_floor = 0;
    for (int s = 0; s < 3; ++s) {
      const auto num = static_cast<unsigned long long>(class_sizes[static_cast<std::size_t>(c)]) *
                       sizes[static_cast<std::size_t>(s)];
      const auto fl = static_cast<std::size_t>(num / total);
      out[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)] = fl;
      row_floor += static_cast<long long>(fl);
      col_floor[static_cast<std::size_t>(s)] += static_cast<long long>(fl);
      if (num % total != 0) cap[1 + c][1 + kNumLabels + s] = 1;
    }
    cap[kSrc][1 + c] = static_cast<long long>(class_sizes[static_cast<std::size_t>(c)]) - row_floor;
  }
  for (int s = 0; s < 3; ++s) {
    cap[1 + kNumLabels + s][kSink] =
        static_cast<long long>(sizes[static_cast<std::size_t>(s)]) - col_floor[static_cast<std::size_t>(s)];
  }
  std::array<std::array<long long, kNodes>, kNodes> flow{};
  for (;;) {
    std::array<int, kNodes> prev;
    prev.fill(-1);
    prev[kSrc] = kSrc;
    std::vector<int> stack = {kSrc};
    while (!stack.empty() && prev[kSink] < 0) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < kNodes; ++v) {
        if (prev[v] < 0 && cap[u][v] - flow[u][v] > 0) {
          prev[v] = u;
          stack.push_back(v);
        }
      }
    }
    if (prev[kSink] < 0) break;
    for (int v = kSink; v != kSrc; v = prev[v]) {
      flow[prev[v]][v] += 1;
      flow[v][prev[v]] -= 1;
    }
  }
  for (int c = 0; c < kNumLabels; ++c) {
    for (int s = 0; s < 3; ++s) {
      if (flow[1 + c][1 + kNumLabels + s] > 0) ++out[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)];
    }
  }
  return out;
}

}  // namespace detail

// Stratified train/val/test split: every split's per-class count is the
// floor or ceil of its proportional share.
template <typename T, typename LabelOf>
Splits<T> split_dataset(std::span<const T> items, LabelOf label_of,
                        const std::array<std::size_t, 3>& sizes, std::uint64_t seed) {
  if (sizes[0] + sizes[1] + sizes[2] != items.size()) {
    throw ValidationError("split sizes sum to " + std::to_string(sizes[0] + sizes[1] + sizes[2]) +
                          " but there are " + std::to_string(items.size()) + " items");
  }
  std::array<std::vector<std::size_t>, kNumLabels> members;
  for (std::size_t i = 0; i < items.size(); ++i) {
    members[static_cast<std::size_t>(index_of(label_of(items[i])))].push_back(i);
  }
  std::array<std::size_t, kNumLabels> class_sizes{};
  for (int c = 0; c < kNumLabels; ++c) class_sizes[static_cast<std::size_t>(c)] = members[static_cast<std::size_t>(c)].size();
  const auto counts = detail::stratified_counts(class_sizes, sizes);

  Rng rng = make_rng(seed, "split_dataset");
  Splits<T> out;
  for (int c = 0; c < kNumLabels; ++c) {
    auto& idx = members[static_cast<std::size_t>(c)];
    shuffle(std::span<std::size_t>(idx), rng);
    const auto& k = counts[static_cast<std::size_t>(c)];
    std::size_t pos = 0;
    for (std::size_t i = 0; i < k[0]; ++i) out.train.push_back(items[idx[pos++]]);
    for (std::size_t i = 0; i < k[1]; ++i) out.val.push_back(items[idx[pos++]]);
    for (std::size_t i = 0; i < k[2]; ++i) out.test.push_back(items[idx[pos++]]);
  }
  shuffle(std::span<T>(out.train), rng);
  shuffle(std::span<T>(out.val), rng);
  shuffle(std::span<T>(out.test), rng);
  return out;
}

template <typename T, typename LabelOf>
Splits<T> split_dataset(const std::vector<T>& items, LabelOf label_of,
                        const std::array<std::size_t, 3>& sizes, std::uint64_t seed) {
  return split_dataset(std::span<const T>(items), label_of, sizes, seed);
}

}  // namespace dse2qa::annotation
