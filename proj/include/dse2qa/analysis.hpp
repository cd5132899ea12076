#pragma once

// Case-study analytics over inferred directed sentiments.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dse2qa/core.hpp"
#include "dse2qa/corpus.hpp"
#include "dse2qa/errors.hpp"
#include "dse2qa/text.hpp"

namespace dse2qa::analysis {

enum class Polarity { kPositive, kNegative };

inline std::string_view to_string(Polarity p) {
  return p == Polarity::kPositive ? "positive" : "negative";
}

struct DirectedEdge {
  std::string source;
  std::string target;
  Polarity sentiment = Polarity::kNegative;
  std::size_t count = 0;

  friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

enum class Bias { kLeft, kCenter, kRight };
inline constexpr std::array<Bias, 3> kAllBiases = {Bias::kLeft, Bias::kCenter, Bias::kRight};

inline std::string_view to_string(Bias b) {
  switch (b) {
    case Bias::kLeft: return "Left";
    case Bias::kCenter: return "Center";
    case Bias::kRight: return "Right";
  }
  return "?";
}

// Five-point ratings collapse onto three groups ("Lean Left" -> Left).
inline Bias parse_bias(std::string_view s) {
  const auto l = text::lowercase(text::trim(s));
  if (l == "left" || l == "lean left" || l == "lean-left") return Bias::kLeft;
  if (l == "center" || l == "centre") return Bias::kCenter;
  if (l == "right" || l == "lean right" || l == "lean-right") return Bias::kRight;
  throw ValidationError("unknown media bias '" + std::string(s) + "'");
}

struct MediaOutlet {
  std::string name;
  Bias bias = Bias::kCenter;
};

// CSV with header "name,bias". Fields may be double-quoted.
inline std::vector<MediaOutlet> load_media_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open media list: " + path);
  auto parse_line = [](const std::string& line) {
    std::vector<std::string> cols;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cur.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        cols.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    cols.push_back(cur);
    return cols;
  };
  std::vector<MediaOutlet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto cols = parse_line(line);
    if (lineno == 1 && cols.size() >= 2 && text::lowercase(text::trim(cols[0])) == "name") continue;
    if (cols.size() != 2) throw InputError(path + ":" + std::to_string(lineno) + ": expected name,bias");
    out.push_back({std::string(text::trim(cols[0])), parse_bias(cols[1])});
  }
  return out;
}

// Exact-string canonicalisation through an alias table ("Trump" -> "Donald Trump").
class EntityCanonicalizer {
 public:
  EntityCanonicalizer() = default;
  explicit EntityCanonicalizer(std::map<std::string, std::string> aliases)
      : aliases_(std::move(aliases)) {}

  // TSV "alias<TAB>canonical"; '#' comments.
  static EntityCanonicalizer load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open alias file: " + path);
    std::map<std::string, std::string> m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      auto cols = text::split(t, '\t');
      if (cols.size() != 2) throw InputError(path + ":" + std::to_string(lineno) + ": expected alias<TAB>canonical");
      m[std::string(text::trim(cols[0]))] = std::string(text::trim(cols[1]));
    }
    return EntityCanonicalizer(std::move(m));
  }

  std::string operator()(const std::string& surface) const {
    auto it = aliases_.find(surface);
    return it == aliases_.end() ? surface : it->second;
  }

 private:
  std::map<std::string, std::string> aliases_;
};

struct Inference {
  corpus::CandidatePair pair;
  SentimentLabel label = SentimentLabel::kNeutral;
};

struct EdgeSet {
  std::vector<DirectedEdge> edges;  // sorted by (source, target, sentiment)
  std::size_t self_pairs_dropped = 0;
};

// Labels 1/3 give p->q edges, 2/4 give q->p edges; neutral gives none.
inline EdgeSet count_edges(std::span<const Inference> predictions,
                           const EntityCanonicalizer& canon = EntityCanonicalizer()) {
  std::map<std::tuple<std::string, std::string, Polarity>, std::size_t> counts;
  EdgeSet out;
  for (const auto& inf : predictions) {
    if (inf.label == SentimentLabel::kNeutral) continue;
    const auto p = canon(inf.pair.first.surface);
    const auto q = canon(inf.pair.second.surface);
    if (p == q) {
      ++out.self_pairs_dropped;
      continue;
    }
    const bool forward = inf.label == SentimentLabel::kPositiveForward ||
                         inf.label == SentimentLabel::kNegativeForward;
    const Polarity pol = (inf.label == SentimentLabel::kPositiveForward ||
                          inf.label == SentimentLabel::kPositiveBackward)
                             ? Polarity::kPositive
                             : Polarity::kNegative;
    ++counts[{forward ? p : q, forward ? q : p, pol}];
  }
  for (const auto& [key, n] : counts) {
    out.edges.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), n});
  }
  return out;
}

// Signed polarity strength with add-one smoothing.
inline double log_ratio(std::size_t pos_count, std::size_t neg_count) {
  return std::log((static_cast<double>(pos_count) + 1.0) / (static_cast<double>(neg_count) + 1.0));
}

// Keeps edges whose unordered entity pair reaches `threshold` in at least one
// polarity (counts pooled over both directions).
inline std::vector<DirectedEdge> filter_min_frequency(std::span<const DirectedEdge> edges,
                                                      std::size_t threshold = 20) {
  std::map<std::pair<std::string, std::string>, std::array<std::size_t, 2>> pooled;
  auto key = [](const DirectedEdge& e) {
    return e.source < e.target ? std::make_pair(e.source, e.target) : std::make_pair(e.target, e.source);
  };
  for (const auto& e : edges) pooled[key(e)][e.sentiment == Polarity::kPositive ? 0 : 1] += e.count;
  std::vector<DirectedEdge> out;
  for (const auto& e : edges) {
    if (e.count == 0) continue;
    const auto& c = pooled[key(e)];
    if (std::max(c[0], c[1]) >= threshold) out.push_back(e);
  }
  return out;
}

inline bool covid_filter(std::string_view text_body) {
  static constexpr std::array<std::string_view, 4> kKeywords = {"coronavirus", "covid-19", "covid19",
                                                                "corona virus"};
  for (auto k : kKeywords) {
    if (text::icontains(text_body, k)) return true;
  }
  return false;
}

inline bool covid_filter(const corpus::RawArticle& article) { return covid_filter(article.text); }

// Total negative edge count over total positive edge count; NA without positives.
inline std::optional<double> negativity_ratio(std::span<const DirectedEdge> edges) {
  std::size_t pos = 0, neg = 0;
  for (const auto& e : edges) (e.sentiment == Polarity::kPositive ? pos : neg) += e.count;
  if (pos == 0) return std::nullopt;
  return static_cast<double>(neg) / static_cast<double>(pos);
}

// Average (fractional) ranks, 1-based.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Spearman's rho: Pearson correlation of average ranks. NA (nullopt) when
// either sequence is constant.
inline std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("spearman: sequences differ in length");
  if (a.size() < 2) throw ValidationError("spearman: need at least two observations");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

inline std::optional<double> spearman(std::span<const int> a, std::span<const int> b) {
  std::vector<double> da(a.begin(), a.end()), db(b.begin(), b.end());
  return spearman(std::span<const double>(da), std::span<const double>(db));
}

// Most frequent canonical entity surfaces among candidate pairs.
inline std::set<std::string> top_entities(std::span<const corpus::CandidatePair> pairs, std::size_t k,
                                          const EntityCanonicalizer& canon = EntityCanonicalizer()) {
  std::map<std::string, std::size_t> freq;
  for (const auto& p : pairs) {
    ++freq[canon(p.first.surface)];
    ++freq[canon(p.second.surface)];
  }
  std::vector<std::pair<std::string, std::size_t>> v(freq.begin(), freq.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<std::string> out;
  for (std::size_t i = 0; i < v.size() && i < k; ++i) out.insert(v[i].first);
  return out;
}

// ---------------------------------------------------------------------------
// Rank tables

// Competition ranking (1 = most frequent, ties share the smaller rank).
// Keys missing from `counts` share rank |observed| + 1.
inline std::map<std::string, int> frequency_ranks(const std::map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int rank = (i > 0 && v[i].second == v[i - 1].second) ? out[v[i - 1].first] : static_cast<int>(i) + 1;
    out[v[i].first] = rank;
  }
  return out;
}

struct RankTable {
  std::string title;
  // All keys seen in any group, ordered by pooled count (desc), then key.
  std::vector<std::string> keys;
  std::map<Bias, std::map<std::string, std::size_t>> counts;
  std::map<Bias, std::map<std::string, int>> ranks;  // every key, every present group
  std::vector<Bias> groups;                          // groups present in the input
  std::optional<double> left_right_spearman;         // NA unless both groups present
};

struct RankReport {
  std::vector<RankTable> tables;
};

using GroupedEdges = std::map<Bias, std::vector<DirectedEdge>>;

inline std::string pair_key(const DirectedEdge& e) { return e.source + "->" + e.target; }

namespace detail {

inline RankTable make_table(std::string title, const GroupedEdges& grouped,
                            const std::function<std::optional<std::string>(const DirectedEdge&)>& key_of) {
  RankTable t;
  t.title = std::move(title);
  std::map<std::string, std::size_t> pooled;
  for (const auto& [bias, edges] : grouped) {
    t.groups.push_back(bias);
    auto& c = t.counts[bias];
    for (const auto& e : edges) {
      if (auto k = key_of(e)) {
        c[*k] += e.count;
        pooled[*k] += e.count;
      }
    }
  }
  std::vector<std::pair<std::string, std::size_t>> v(pooled.begin(), pooled.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& kv : v) t.keys.push_back(kv.first);
  for (const auto& [bias, c] : t.counts) {
    auto r = frequency_ranks(c);
    const int bottom = static_cast<int>(c.size()) + 1;
    auto& full = t.ranks[bias];
    for (const auto& k : t.keys) {
      auto it = r.find(k);
      full[k] = it == r.end() ? bottom : it->second;
    }
  }
  if (t.ranks.count(Bias::kLeft) && t.ranks.count(Bias::kRight) && t.keys.size() >= 2) {
    std::vector<double> l, r;
    for (const auto& k : t.keys) {
      l.push_back(t.ranks[Bias::kLeft][k]);
      r.push_back(t.ranks[Bias::kRight][k]);
    }
    t.left_right_spearman = spearman(std::span<const double>(l), std::span<const double>(r));
  }
  return t;
}

}  // namespace detail

// Six rank tables: negative targets, negative sources, positive targets,
// positive sources, negative pairs, positive pairs.
inline RankReport build_rank_tables(const GroupedEdges& grouped) {
  using E = DirectedEdge;
  auto by = [](Polarity pol, auto field) {
    return [pol, field](const E& e) -> std::optional<std::string> {
      if (e.sentiment != pol) return std::nullopt;
      return field(e);
    };
  };
  auto target = [](const E& e) { return e.target; };
  auto source = [](const E& e) { return e.source; };
  RankReport rep;
  rep.tables.push_back(detail::make_table("negative target entities", grouped, by(Polarity::kNegative, target)));
  rep.tables.push_back(detail::make_table("negative source entities", grouped, by(Polarity::kNegative, source)));
  rep.tables.push_back(detail::make_table("positive target entities", grouped, by(Polarity::kPositive, target)));
  rep.tables.push_back(detail::make_table("positive source entities", grouped, by(Polarity::kPositive, source)));
  rep.tables.push_back(detail::make_table("negative entity pairs", grouped, by(Polarity::kNegative, pair_key)));
  rep.tables.push_back(detail::make_table("positive entity pairs", grouped, by(Polarity::kPositive, pair_key)));
  return rep;
}

inline std::string render_rank_table(const RankTable& t, std::size_t top_n = 10) {
  std::size_t w = 6;
  for (std::size_t i = 0; i < t.keys.size() && i < top_n; ++i) w = std::max(w, t.keys[i].size());
  std::ostringstream os;
  os << "# " << t.title << "\n";
  os << std::left << std::setw(static_cast<int>(w)) << "Key" << " |";
  for (auto b : kAllBiases) os << " " << std::setw(13) << ("Rank(" + std::string(to_string(b)) + ")");
  os << "\n";
  for (std::size_t i = 0; i < t.keys.size() && i < top_n; ++i) {
    const auto& k = t.keys[i];
    os << std::left << std::setw(static_cast<int>(w)) << k << " |";
    for (auto b : kAllBiases) {
      auto it = t.ranks.find(b);
      os << " " << std::setw(13) << (it == t.ranks.end() ? std::string("-") : std::to_string(it->second.at(k)));
    }
    os << "\n";
  }
  os << "spearman(Left,Right) = ";
  if (t.left_right_spearman) {
    os << std::fixed << std::setprecision(4) << *t.left_right_spearman;
  } else {
    os << "NA";
  }
  os << "\n";
  return os.str();
}

inline std::string rank_table_csv(const RankTable& t) {
  std::ostringstream os;
  os << "table,key";
  for (auto b : kAllBiases) os << ",rank_" << text::lowercase(to_string(b)) << ",count_" << text::lowercase(to_string(b));
  os << "\n";
  for (const auto& k : t.keys) {
    os << '"' << t.title << "\",\"" << k << '"';
    for (auto b : kAllBiases) {
      auto it = t.ranks.find(b);
      if (it == t.ranks.end()) {
        os << ",,";
      } else {
        auto c = t.counts.at(b).find(k);
        os << "," << it->second.at(k) << "," << (c == t.counts.at(b).end() ? 0 : c->second);
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace dse2qa::analysis
