#pragma once

// Slow reference implementations and random fixtures shared by the unit
// tests and the acceptance binary.

#include <array>
#include <string>
#include <vector>

#include "dse2qa/evaluation.hpp"
#include "dse2qa/random.hpp"

namespace oracle {

using dse2qa::kNumLabels;
using dse2qa::eval::PredictionRecord;

// Confusion matrix first, then textbook precision/recall per class.
struct F1s {
  double micro = 0;
  double macro = 0;
  std::array<double, kNumLabels> per_class{};
};

inline F1s f1(const std::vector<PredictionRecord>& rs) {
  double m[kNumLabels][kNumLabels] = {};
  for (const auto& r : rs) m[dse2qa::index_of(r.gold)][dse2qa::index_of(r.predicted)] += 1;
  F1s out;
  double diag = 0;
  for (int c = 0; c < kNumLabels; ++c) {
    double row = 0, col = 0;
    for (int k = 0; k < kNumLabels; ++k) {
      row += m[c][k];
      col += m[k][c];
    }
    diag += m[c][c];
    const double p = col > 0 ? m[c][c] / col : 0;
    const double r = row > 0 ? m[c][c] / row : 0;
    out.per_class[c] = p + r > 0 ? 2 * p * r / (p + r) : 0;
    out.macro += out.per_class[c] / kNumLabels;
  }
  out.micro = diag / static_cast<double>(rs.size());
  return out;
}

// Quadratic AP: rank of each item computed by counting who beats it.
inline double ap(const std::vector<PredictionRecord>& rs, int c) {
  const std::size_t n = rs.size();
  auto beats = [&](std::size_t j, std::size_t i) {
    const double sj = (*rs[j].scores)[c], si = (*rs[i].scores)[c];
    return sj > si || (sj == si && rs[j].item_id < rs[i].item_id);
  };
  double sum = 0;
  int positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (dse2qa::index_of(rs[i].gold) != c) continue;
    ++positives;
    double rank = 1, above = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !beats(j, i)) continue;
      rank += 1;
      if (dse2qa::index_of(rs[j].gold) == c) above += 1;
    }
    sum += above / rank;
  }
  return positives ? sum / positives : 0.0;
}

// Prediction set of size 1..max_size; scores come from a coarse grid so
// that ties actually happen.
inline std::vector<PredictionRecord> random_predictions(dse2qa::Rng& rng, std::size_t max_size) {
  const std::size_t n = 1 + dse2qa::uniform_index(rng, max_size);
  std::vector<PredictionRecord> rs(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = rs[i];
    r.item_id = "it" + std::to_string(dse2qa::uniform_index(rng, 1000)) + "_" + std::to_string(i);
    r.gold = dse2qa::label_from_index(static_cast<long long>(dse2qa::uniform_index(rng, kNumLabels)));
    std::array<double, kNumLabels> s{};
    for (auto& v : s) v = static_cast<double>(dse2qa::uniform_index(rng, 11)) / 10.0;
    r.scores = s;
    r.predicted = dse2qa::uniform_index(rng, 4) == 0
                      ? r.gold
                      : dse2qa::argmax_label(std::span<const double, kNumLabels>(s));
  }
  return rs;
}

}  // namespace oracle
