#pragma once

// Raw articles -> sentences -> entity spans -> masked entity-pair candidates.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dse2qa/errors.hpp"
#include "dse2qa/random.hpp"
#include "dse2qa/text.hpp"

namespace dse2qa::corpus {

struct RawArticle {
  std::string article_id;
  std::string outlet;
  std::optional<std::string> published;
  std::string text;
};

// Offsets are byte offsets into the UTF-8 sentence, end exclusive.
struct EntitySpan {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string entity_type;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

enum class SamplingRoute { kDictionary, kRandom };

inline std::string_view to_string(SamplingRoute r) {
  return r == SamplingRoute::kDictionary ? "dictionary" : "random";
}

inline SamplingRoute parse_sampling_route(std::string_view s) {
  if (s == "dictionary") return SamplingRoute::kDictionary;
  if (s == "random") return SamplingRoute::kRandom;
  throw ValidationError("unknown sampling route '" + std::string(s) + "'");
}

// `first` is the preceding entity p, `second` the following entity q.
struct CandidatePair {
  std::string sentence;
  EntitySpan first;
  EntitySpan second;
  std::string source_article;
  std::string outlet;
  std::size_t sentence_index = 0;
  SamplingRoute sampling_route = SamplingRoute::kRandom;

  std::string item_id() const {
    return source_article + ":" + std::to_string(sentence_index) + ":" +
           std::to_string(first.start) + "-" + std::to_string(second.start);
  }

  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

struct MaskedSentence {
  std::string text;
  CandidatePair original;
};

class SentimentDictionary {
 public:
  SentimentDictionary(std::set<std::string> entries, std::string provenance)
      : entries_(std::move(entries)), provenance_(std::move(provenance)) {
    if (entries_.empty()) throw ValidationError("sentiment dictionary is empty");
    for (const auto& e : entries_) {
      if (e.empty() || e != text::lowercase(e) || text::trim(e) != e) {
        throw ValidationError("dictionary entry must be lowercase without surrounding "
                              "whitespace: '" + e + "'");
      }
      max_words_ = std::max(max_words_, text::word_tokens(e).size());
    }
  }

  // One entry per line; '#' starts a comment. A "# provenance:" line, if
  // present, becomes the provenance note.
  static SentimentDictionary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dictionary file: " + path);
    std::set<std::string> entries;
    std::string provenance = path;
    std::string line;
    while (std::getline(in, line)) {
      auto t = text::trim(line);
      if (t.empty()) continue;
      if (t.front() == '#') {
        constexpr std::string_view kTag = "# provenance:";
        if (t.substr(0, kTag.size()) == kTag) provenance = std::string(text::trim(t.substr(kTag.size())));
        continue;
      }
      entries.insert(text::lowercase(t));
    }
    return SentimentDictionary(std::move(entries), std::move(provenance));
  }

  const std::set<std::string>& entries() const { return entries_; }
  const std::string& provenance() const { return provenance_; }
  std::size_t max_words() const { return max_words_; }

 private:
  std::set<std::string> entries_;
  std::string provenance_;
  std::size_t max_words_ = 1;
};

// Entity types kept for pair extraction: people, nationalities/religious or
// political groups, countries/cities/states, organisations, locations and
// facilities.
class EntityTypeFilter {
 public:
  EntityTypeFilter() : allowed_{"PERSON", "NORP", "GPE", "ORG", "LOC", "FAC"} {}
  explicit EntityTypeFilter(std::set<std::string> allowed) : allowed_(std::move(allowed)) {}

  bool passes(std::string_view type) const { return allowed_.count(std::string(type)) > 0; }
  const std::set<std::string>& allowed() const { return allowed_; }

 private:
  std::set<std::string> allowed_;
};

// ---------------------------------------------------------------------------
// Sentence splitting

class SentenceSplitter {
 public:
  virtual ~SentenceSplitter() = default;
  virtual std::vector<std::string> split(std::string_view text) const = 0;
};

// Terminal punctuation followed by whitespace ends a sentence unless the
// word before a period is a known abbreviation or a single capital initial,
// or the next word starts in lowercase. Blank lines always end a sentence.
class RuleSentenceSplitter : public SentenceSplitter {
 public:
  RuleSentenceSplitter() : abbreviations_(default_abbreviations()) {}
  explicit RuleSentenceSplitter(std::unordered_set<std::string> abbreviations)
      : abbreviations_(std::move(abbreviations)) {}

  static std::unordered_set<std::string> default_abbreviations() {
    return {"mr",   "mrs",  "ms",   "dr",   "prof", "sen",  "rep",  "gov",  "gen",  "lt",
            "col",  "sgt",  "capt", "cmdr", "adm",  "maj",  "pres", "st",   "jr",   "sr",
            "rev",  "hon",  "fr",   "vs",   "u.s",  "u.k",  "u.n",  "e.u",  "d.c",  "e.g",
            "i.e",  "a.m",  "p.m",  "jan",  "feb",  "mar",  "apr",  "jun",  "jul",  "aug",
            "sep",  "sept", "oct",  "nov",  "dec",  "mt",   "ft",   "no",   "corp", "inc",
            "co",   "ltd",  "dept", "univ", "approx"};
  }

  std::vector<std::string> split(std::string_view s) const override {
    std::vector<std::string> out;
    const std::size_t n = s.size();
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
      auto piece = text::trim(s.substr(start, end - start));
      if (!piece.empty()) out.emplace_back(piece);
      start = end;
    };
    std::size_t i = 0;
    while (i < n) {
      const char c = s[i];
      if (c == '\n') {
        std::size_t j = i + 1;
        while (j < n && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
        if (j < n && s[j] == '\n') {
          emit(i);
          i = j + 1;
          continue;
        }
        ++i;
        continue;
      }
      if (c != '.' && c != '?' && c != '!') {
        ++i;
        continue;
      }
      std::size_t j = i;
      bool only_periods = true;
      while (j < n && (s[j] == '.' || s[j] == '?' || s[j] == '!')) {
        if (s[j] != '.') only_periods = false;
        ++j;
      }
      const std::size_t run = j - i;
      j = skip_closers(s, j);
      if (j < n && !text::is_space(s[j])) {
        i = j;
        continue;
      }
      std::size_t k = j;
      while (k < n && text::is_space(s[k])) ++k;
      bool boundary = true;
      if (k < n && std::islower(static_cast<unsigned char>(s[k]))) boundary = false;
      if (only_periods && run == 1 && is_abbreviation(s, i)) boundary = false;
      if (boundary) emit(j);
      i = j;
    }
    emit(n);
    return out;
  }

 private:
  static std::size_t skip_closers(std::string_view s, std::size_t j) {
    while (j < s.size()) {
      if (s[j] == '"' || s[j] == '\'' || s[j] == ')' || s[j] == ']') {
        ++j;
      } else if (s.substr(j, 3) == "\xE2\x80\x9D" || s.substr(j, 3) == "\xE2\x80\x99") {
        j += 3;  // closing curly quotes
      } else {
        break;
      }
    }
    return j;
  }

  bool is_abbreviation(std::string_view s, std::size_t period) const {
    std::size_t b = period;
    while (b > 0 && !text::is_space(s[b - 1]) && s[b - 1] != '(' && s[b - 1] != '"') --b;
    if (b == period) return false;
    if (period - b == 1 && std::isupper(static_cast<unsigned char>(s[b]))) return true;  // initial
    return abbreviations_.count(text::lowercase(s.substr(b, period - b))) > 0;
  }

  std::unordered_set<std::string> abbreviations_;
};

inline std::vector<std::string> split_sentences(const RawArticle& article,
                                                const SentenceSplitter& splitter) {
  return splitter.split(article.text);
}

inline std::vector<std::string> split_sentences(const RawArticle& article) {
  static const RuleSentenceSplitter kDefault;
  return kDefault.split(article.text);
}

// ---------------------------------------------------------------------------
// Entity recognition

class EntityRecognizer {
 public:
  virtual ~EntityRecognizer() = default;
  // Returns non-overlapping spans sorted by start offset.
  virtual std::vector<EntitySpan> recognize(std::string_view sentence) const = 0;
};

// Deterministic fallback recogniser: longest case-sensitive gazetteer match
// at word boundaries, plus "<title> Capitalized Name" as PERSON.
class GazetteerRecognizer : public EntityRecognizer {
 public:
  GazetteerRecognizer() = default;

  void add(std::string surface, std::string type) {
    auto words = text::split(surface, ' ');
    if (surface.empty() || words.empty()) return;
    auto& bucket = by_first_word_[first_word(surface)];
    bucket.push_back({std::move(surface), std::move(type)});
    std::sort(bucket.begin(), bucket.end(), [](const Entry& a, const Entry& b) {
      return a.surface.size() > b.surface.size();
    });
  }

  // TSV lines "surface<TAB>TYPE"; '#' comments.
  static GazetteerRecognizer load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open gazetteer file: " + path);
    GazetteerRecognizer g;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      auto cols = text::split(t, '\t');
      if (cols.size() != 2) {
        throw InputError(path + ":" + std::to_string(lineno) + ": expected surface<TAB>TYPE");
      }
      g.add(std::string(text::trim(cols[0])), std::string(text::trim(cols[1])));
    }
    return g;
  }

  std::vector<EntitySpan> recognize(std::string_view s) const override {
    std::vector<EntitySpan> out;
    const std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
      if (!word_start(s, i)) {
        ++i;
        continue;
      }
      if (auto m = match_at(s, i)) {
        out.push_back(*m);
        i = m->end;
        continue;
      }
      if (auto m = titled_person_at(s, i)) {
        out.push_back(*m);
        i = m->end;
        continue;
      }
      ++i;
    }
    return out;
  }

 private:
  struct Entry {
    std::string surface;
    std::string type;
  };

  static std::string first_word(std::string_view s) {
    std::size_t e = 0;
    while (e < s.size() && (text::is_alnum(s[e]) || static_cast<unsigned char>(s[e]) >= 0x80)) ++e;
    if (e == 0) e = 1;
    return std::string(s.substr(0, e));
  }

  static bool word_start(std::string_view s, std::size_t i) {
    if (!text::is_alnum(s[i]) && static_cast<unsigned char>(s[i]) < 0x80) return false;
    return i == 0 || (!text::is_alnum(s[i - 1]) && static_cast<unsigned char>(s[i - 1]) < 0x80);
  }

  static bool word_end(std::string_view s, std::size_t e) {
    return e == s.size() || (!text::is_alnum(s[e]) && static_cast<unsigned char>(s[e]) < 0x80);
  }

  std::optional<EntitySpan> match_at(std::string_view s, std::size_t i) const {
    auto it = by_first_word_.find(first_word(s.substr(i)));
    if (it == by_first_word_.end()) return std::nullopt;
    for (const auto& e : it->second) {
      if (s.substr(i, e.surface.size()) == e.surface && word_end(s, i + e.surface.size())) {
        return EntitySpan{e.surface, i, i + e.surface.size(), e.type};
      }
    }
    return std::nullopt;
  }

  static std::optional<EntitySpan> titled_person_at(std::string_view s, std::size_t i) {
    static const std::vector<std::string_view> kTitles = {"Mr. ",   "Mrs. ", "Ms. ",  "Dr. ",
                                                          "Sen. ",  "Gov. ", "Rep. ", "President ",
                                                          "Senator "};
    const std::size_t n = s.size();
    for (auto title : kTitles) {
      if (s.substr(i, title.size()) != title) continue;
      const std::size_t b = i + title.size();
      std::size_t last_end = b;
      std::size_t p = b;
      while (p < n && std::isupper(static_cast<unsigned char>(s[p]))) {
        std::size_t w = p + 1;
        while (w < n && (std::isalpha(static_cast<unsigned char>(s[w])) || s[w] == '-')) ++w;
        if (w - p < 2 || !word_end(s, w)) break;
        last_end = w;
        if (w + 1 < n && s[w] == ' ' && std::isupper(static_cast<unsigned char>(s[w + 1]))) {
          p = w + 1;
          continue;
        }
        break;
      }
      if (last_end > b) return EntitySpan{std::string(s.substr(b, last_end - b)), b, last_end, "PERSON"};
    }
    return std::nullopt;
  }

  std::unordered_map<std::string, std::vector<Entry>> by_first_word_;
};

// ---------------------------------------------------------------------------
// Pairs, keyword filter, sampling, masking

inline void validate_span(std::string_view sentence, const EntitySpan& sp) {
  if (!(sp.start < sp.end && sp.end <= sentence.size())) {
    throw ValidationError("entity span [" + std::to_string(sp.start) + "," +
                          std::to_string(sp.end) + ") out of sentence bounds");
  }
  if (sentence.substr(sp.start, sp.end - sp.start) != sp.surface) {
    throw ValidationError("entity span text '" +
                          std::string(sentence.substr(sp.start, sp.end - sp.start)) +
                          "' does not match surface '" + sp.surface + "'");
  }
}

// All (i<j) pairs among spans whose type passes the filter.
inline std::vector<CandidatePair> extract_candidate_pairs(
    std::string_view sentence, std::span<const EntitySpan> spans,
    const EntityTypeFilter& filter = EntityTypeFilter()) {
  for (std::size_t k = 0; k < spans.size(); ++k) {
    validate_span(sentence, spans[k]);
    if (k > 0) {
      if (spans[k].start < spans[k - 1].start) {
        throw ValidationError("entity spans must be sorted by start offset");
      }
      if (spans[k].start < spans[k - 1].end) {
        throw ValidationError("entity spans overlap: '" + spans[k - 1].surface + "' and '" +
                              spans[k].surface + "'");
      }
    }
  }
  std::vector<const EntitySpan*> kept;
  for (const auto& sp : spans) {
    if (filter.passes(sp.entity_type)) kept.push_back(&sp);
  }
  std::vector<CandidatePair> out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = i + 1; j < kept.size(); ++j) {
      CandidatePair p;
      p.sentence = std::string(sentence);
      p.first = *kept[i];
      p.second = *kept[j];
      out.push_back(std::move(p));
    }
  }
  return out;
}

// True iff some dictionary entry equals a whole lowercased word token (or a
// run of consecutive tokens for multi-word entries).
inline bool dictionary_filter(std::string_view sentence, const SentimentDictionary& dict) {
  const auto tokens = text::word_tokens(sentence);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string phrase;
    for (std::size_t w = 0; w < dict.max_words() && i + w < tokens.size(); ++w) {
      if (w > 0) phrase.push_back(' ');
      phrase += tokens[i + w];
      if (dict.entries().count(phrase)) return true;
    }
  }
  return false;
}

namespace detail {

inline auto candidate_key(const CandidatePair& p) {
  return std::tie(p.source_article, p.sentence_index, p.first.start, p.second.start, p.sentence,
                  p.first.surface, p.second.surface, p.first.entity_type, p.second.entity_type,
                  p.outlet);
}

inline void sort_canonical(std::vector<CandidatePair>& v) {
  std::sort(v.begin(), v.end(), [](const CandidatePair& a, const CandidatePair& b) {
    return candidate_key(a) < candidate_key(b);
  });
}

inline std::vector<CandidatePair> draw(std::vector<CandidatePair> pool, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace detail

// ceil(fraction * target) pairs from the keyword-matching pool, the rest
// uniformly from the remaining pairs. Pools are put in canonical order
// before drawing, so the result depends only on the input multiset and seed.
inline std::vector<CandidatePair> sample_candidates(std::vector<CandidatePair> pairs,
                                                    const SentimentDictionary& dict,
                                                    double dictionary_fraction,
                                                    std::size_t target_count,
                                                    std::uint64_t seed) {
  if (!(dictionary_fraction >= 0.0 && dictionary_fraction <= 1.0)) {
    throw UsageError("dictionary_fraction must be in [0,1]");
  }
  if (target_count == 0) throw UsageError("target_count must be positive");
  std::vector<CandidatePair> dict_pool, rest_pool;
  for (auto& p : pairs) {
    (dictionary_filter(p.sentence, dict) ? dict_pool : rest_pool).push_back(std::move(p));
  }
  const auto n_dict = static_cast<std::size_t>(
      std::ceil(dictionary_fraction * static_cast<double>(target_count) - 1e-9));
  const std::size_t n_rand = target_count - n_dict;
  if (dict_pool.size() < n_dict) {
    throw ValidationError("dictionary pool has " + std::to_string(dict_pool.size()) +
                          " candidates, " + std::to_string(n_dict) + " required");
  }
  if (rest_pool.size() < n_rand) {
    throw ValidationError("random pool has " + std::to_string(rest_pool.size()) +
                          " candidates, " + std::to_string(n_rand) + " required");
  }
  detail::sort_canonical(dict_pool);
  detail::sort_canonical(rest_pool);
  Rng rng = make_rng(seed, "sample_candidates");
  auto out = detail::draw(std::move(dict_pool), n_dict, rng);
  for (auto& p : out) p.sampling_route = SamplingRoute::kDictionary;
  auto rand = detail::draw(std::move(rest_pool), n_rand, rng);
  for (auto& p : rand) p.sampling_route = SamplingRoute::kRandom;
  out.insert(out.end(), std::make_move_iterator(rand.begin()), std::make_move_iterator(rand.end()));
  detail::sort_canonical(out);
  return out;
}

inline MaskedSentence mask_entities(const CandidatePair& pair) {
  validate_span(pair.sentence, pair.first);
  validate_span(pair.sentence, pair.second);
  if (!(pair.first.end <= pair.second.start)) {
    throw ValidationError("first entity must precede the second without overlap");
  }
  std::string_view s = pair.sentence;
  std::string out;
  out.reserve(s.size() + 12);
  out.append(s.substr(0, pair.first.start));
  out.append(text::kEnt1);
  out.append(s.substr(pair.first.end, pair.second.start - pair.first.end));
  out.append(text::kEnt2);
  out.append(s.substr(pair.second.end));
  return MaskedSentence{std::move(out), pair};
}

// Sentence split + recognition + pair extraction for one article. Pairs come
// out in sentence order with sentence_index/source_article filled in.
inline std::vector<CandidatePair> article_candidates(const RawArticle& article,
                                                     const SentenceSplitter& splitter,
                                                     const EntityRecognizer& ner,
                                                     const EntityTypeFilter& filter) {
  std::vector<CandidatePair> out;
  const auto sentences = splitter.split(article.text);
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    const auto spans = ner.recognize(sentences[si]);
    for (auto& p : extract_candidate_pairs(sentences[si], spans, filter)) {
      p.source_article = article.article_id;
      p.outlet = article.outlet;
      p.sentence_index = si;
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace dse2qa::corpus
