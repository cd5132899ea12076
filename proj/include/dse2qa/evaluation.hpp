#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dse2qa/core.hpp"
#include "dse2qa/errors.hpp"
#include "dse2qa/log.hpp"
#include "dse2qa/text.hpp"

namespace dse2qa::eval {

struct PredictionRecord {
  std::string item_id;
  SentimentLabel gold = SentimentLabel::kNeutral;
  SentimentLabel predicted = SentimentLabel::kNeutral;
  // Per-class confidences: yes-scores for the QA model, softmax
  // probabilities for the classifiers.
  std::optional<std::array<double, kNumLabels>> scores;
};

using PerClass = std::array<double, kNumLabels>;

struct MetricReport {
  std::size_t count = 0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double map = 0.0;
  PerClass per_class_f1{};
  PerClass per_class_ap{};
  // Class absent from both gold and predictions (its F1 is counted as 0).
  std::array<bool, kNumLabels> absent_class{};
  // Class with no gold positives (its AP is counted as 0).
  std::array<bool, kNumLabels> no_positives{};
  bool has_ap = false;
};

inline void require_nonempty(std::span<const PredictionRecord> records) {
  if (records.empty()) throw ValidationError("metric requires at least one prediction record");
}

// Multiclass accuracy: #correct / #total.
inline double micro_f1(std::span<const PredictionRecord> records) {
  require_nonempty(records);
  std::size_t correct = 0;
  for (const auto& r : records) correct += (r.gold == r.predicted) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

struct PerClassF1 {
  PerClass f1{};
  std::array<bool, kNumLabels> absent{};
};

inline PerClassF1 per_class_f1(std::span<const PredictionRecord> records) {
  require_nonempty(records);
  std::array<std::size_t, kNumLabels> tp{}, fp{}, fn{};
  for (const auto& r : records) {
    const auto g = static_cast<std::size_t>(index_of(r.gold));
    const auto p = static_cast<std::size_t>(index_of(r.predicted));
    if (g == p) {
      ++tp[g];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  PerClassF1 out;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const double precision = tp[c] + fp[c] ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]) : 0.0;
    const double recall = tp[c] + fn[c] ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]) : 0.0;
    out.f1[c] = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    out.absent[c] = (tp[c] + fp[c] + fn[c]) == 0;
  }
  return out;
}

// Unweighted mean over all five classes; absent classes contribute 0.
inline double macro_f1(std::span<const PredictionRecord> records) {
  const auto pc = per_class_f1(records);
  return std::accumulate(pc.f1.begin(), pc.f1.end(), 0.0) / kNumLabels;
}

// Non-interpolated AP: mean of precision@k over the ranks k of the gold
// positives, ranking by descending score with ties broken by item_id.
inline double average_precision(std::span<const PredictionRecord> records, int cls,
                                bool* no_positives = nullptr) {
  require_nonempty(records);
  std::vector<const PredictionRecord*> order;
  order.reserve(records.size());
  for (const auto& r : records) {
    if (!r.scores) throw ValidationError("average precision requires scores (item " + r.item_id + ")");
    order.push_back(&r);
  }
  const auto c = static_cast<std::size_t>(cls);
  std::sort(order.begin(), order.end(), [c](const PredictionRecord* a, const PredictionRecord* b) {
    const double sa = (*a->scores)[c], sb = (*b->scores)[c];
    if (sa != sb) return sa > sb;
    return a->item_id < b->item_id;
  });
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (index_of(order[k]->gold) == cls) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  if (no_positives) *no_positives = hits == 0;
  if (hits == 0) {
    log::warn("average_precision: no gold positives for class " + std::to_string(cls) + "; AP = 0");
    return 0.0;
  }
  return sum / static_cast<double>(hits);
}

inline double mean_ap(std::span<const PredictionRecord> records) {
  double s = 0.0;
  for (int c = 0; c < kNumLabels; ++c) s += average_precision(records, c);
  return s / kNumLabels;
}

inline MetricReport build_report(std::span<const PredictionRecord> records) {
  require_nonempty(records);
  MetricReport rep;
  rep.count = records.size();
  rep.micro_f1 = micro_f1(records);
  const auto pc = per_class_f1(records);
  rep.per_class_f1 = pc.f1;
  rep.absent_class = pc.absent;
  rep.macro_f1 = std::accumulate(pc.f1.begin(), pc.f1.end(), 0.0) / kNumLabels;
  rep.has_ap = std::all_of(records.begin(), records.end(),
                           [](const PredictionRecord& r) { return r.scores.has_value(); });
  if (rep.has_ap) {
    for (int c = 0; c < kNumLabels; ++c) {
      bool none = false;
      rep.per_class_ap[static_cast<std::size_t>(c)] = average_precision(records, c, &none);
      rep.no_positives[static_cast<std::size_t>(c)] = none;
    }
    rep.map = std::accumulate(rep.per_class_ap.begin(), rep.per_class_ap.end(), 0.0) / kNumLabels;
  }
  return rep;
}

// Element-wise arithmetic mean of several reports (multi-seed runs).
inline MetricReport mean_report(std::span<const MetricReport> reports) {
  if (reports.empty()) throw ValidationError("mean_report needs at least one report");
  MetricReport m;
  const double k = static_cast<double>(reports.size());
  m.has_ap = true;
  for (const auto& r : reports) {
    m.count += r.count;
    m.micro_f1 += r.micro_f1 / k;
    m.macro_f1 += r.macro_f1 / k;
    m.map += r.map / k;
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      m.per_class_f1[c] += r.per_class_f1[c] / k;
      m.per_class_ap[c] += r.per_class_ap[c] / k;
      m.absent_class[c] = m.absent_class[c] || r.absent_class[c];
      m.no_positives[c] = m.no_positives[c] || r.no_positives[c];
    }
    m.has_ap = m.has_ap && r.has_ap;
  }
  m.count = reports.front().count;
  return m;
}

// ---------------------------------------------------------------------------
// Text tables. Layout: an overall table (Micro F1 | Macro F1 | mAP) followed
// by per-class F1 and per-class AP tables with columns 0..4.

inline std::string render_table(const MetricReport& r, const std::string& method, int precision = 4) {
  auto num = [precision](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
  };
  const int w = std::max<int>(static_cast<int>(method.size()), 6);
  const int cw = precision + 4;
  std::ostringstream os;
  os << std::left << std::setw(w) << "Method" << " | " << std::right << std::setw(cw) << "MicroF1"
     << " " << std::setw(cw) << "MacroF1" << " " << std::setw(cw) << "mAP" << "\n";
  os << std::left << std::setw(w) << method << " | " << std::right << std::setw(cw) << num(r.micro_f1)
     << " " << std::setw(cw) << num(r.macro_f1) << " " << std::setw(cw) << (r.has_ap ? num(r.map) : "NA")
     << "\n\n";
  auto per_class = [&](const char* title, const PerClass& v, bool available) {
    os << std::left << std::setw(w) << title << " |";
    for (int c = 0; c < kNumLabels; ++c) os << " " << std::right << std::setw(cw) << c;
    os << "\n" << std::left << std::setw(w) << method << " |";
    for (double x : v) os << " " << std::right << std::setw(cw) << (available ? num(x) : "NA");
    os << "\n";
  };
  per_class("F1", r.per_class_f1, true);
  os << "\n";
  per_class("AP", r.per_class_ap, r.has_ap);
  bool any_absent = false;
  for (bool a : r.absent_class) any_absent = any_absent || a;
  if (any_absent) {
    os << "\nabsent classes (F1 counted as 0):";
    for (int c = 0; c < kNumLabels; ++c) {
      if (r.absent_class[static_cast<std::size_t>(c)]) os << " " << c;
    }
    os << "\n";
  }
  return os.str();
}

// Inverse of render_table for the numeric fields (values at the rendered
// precision). Throws ValidationError on unexpected layout.
inline MetricReport parse_table(const std::string& table) {
  std::vector<std::string> lines;
  for (auto& l : text::split(table, '\n')) {
    if (!text::trim(l).empty()) lines.push_back(l);
  }
  auto values_after_bar = [](const std::string& line) {
    const auto bar = line.find('|');
    if (bar == std::string::npos) throw ValidationError("malformed metric table line: " + line);
    std::istringstream is(line.substr(bar + 1));
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
  };
  auto to_d = [](const std::string& s) { return s == "NA" ? 0.0 : std::stod(s); };
  if (lines.size() < 6) throw ValidationError("metric table too short");
  MetricReport r;
  const auto overall = values_after_bar(lines[1]);
  if (overall.size() != 3) throw ValidationError("overall row must have 3 values");
  r.micro_f1 = to_d(overall[0]);
  r.macro_f1 = to_d(overall[1]);
  r.has_ap = overall[2] != "NA";
  r.map = to_d(overall[2]);
  const auto f1 = values_after_bar(lines[3]);
  const auto ap = values_after_bar(lines[5]);
  if (f1.size() != kNumLabels || ap.size() != kNumLabels) {
    throw ValidationError("per-class rows must have 5 values");
  }
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    r.per_class_f1[c] = to_d(f1[c]);
    r.per_class_ap[c] = to_d(ap[c]);
  }
  if (lines.size() > 6) {
    const auto& l = lines[6];
    const auto colon = l.find(':');
    if (l.rfind("absent classes", 0) == 0 && colon != std::string::npos) {
      std::istringstream is(l.substr(colon + 1));
      int c;
      while (is >> c) {
        if (c >= 0 && c < kNumLabels) r.absent_class[static_cast<std::size_t>(c)] = true;
      }
    }
  }
  return r;
}

}  // namespace dse2qa::eval
