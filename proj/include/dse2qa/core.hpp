#pragma once

// Label space, auxiliary questions, and the question-decomposition transform.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dse2qa/errors.hpp"
#include "dse2qa/random.hpp"

namespace dse2qa {

inline constexpr int kNumLabels = 5;

// Direction arrows read with p = the first ([Ent1]) entity.
enum class SentimentLabel : std::uint8_t {
  kNeutral = 0,
  kPositiveForward = 1,   // positive, p -> q
  kPositiveBackward = 2,  // positive, p <- q
  kNegativeForward = 3,   // negative, p -> q
  kNegativeBackward = 4,  // negative, p <- q
};

inline constexpr int index_of(SentimentLabel l) { return static_cast<int>(l); }

inline SentimentLabel label_from_index(long long i) {
  if (i < 0 || i >= kNumLabels) {
    throw ValidationError("sentiment label out of range: " + std::to_string(i));
  }
  return static_cast<SentimentLabel>(i);
}

inline std::string_view label_name(SentimentLabel l) {
  switch (l) {
    case SentimentLabel::kNeutral: return "neutral";
    case SentimentLabel::kPositiveForward: return "positive(p->q)";
    case SentimentLabel::kPositiveBackward: return "positive(p<-q)";
    case SentimentLabel::kNegativeForward: return "negative(p->q)";
    case SentimentLabel::kNegativeBackward: return "negative(p<-q)";
  }
  return "?";
}

// Swaps the direction of a directed label (1<->2, 3<->4); neutral is fixed.
inline SentimentLabel reverse_direction(SentimentLabel l) {
  switch (l) {
    case SentimentLabel::kPositiveForward: return SentimentLabel::kPositiveBackward;
    case SentimentLabel::kPositiveBackward: return SentimentLabel::kPositiveForward;
    case SentimentLabel::kNegativeForward: return SentimentLabel::kNegativeBackward;
    case SentimentLabel::kNegativeBackward: return SentimentLabel::kNegativeForward;
    default: return l;
  }
}

enum class QuestionStyle { kComplete, kPseudo };

inline std::string_view to_string(QuestionStyle s) {
  return s == QuestionStyle::kComplete ? "complete" : "pseudo";
}

inline QuestionStyle parse_question_style(std::string_view s) {
  if (s == "complete") return QuestionStyle::kComplete;
  if (s == "pseudo") return QuestionStyle::kPseudo;
  throw UsageError("unknown question style '" + std::string(s) + "' (expected complete|pseudo)");
}

struct QuestionTemplate {
  int index = 0;
  QuestionStyle style = QuestionStyle::kComplete;
  std::string_view text;

  friend bool operator==(const QuestionTemplate&, const QuestionTemplate&) = default;
};

namespace detail {

// Verbatim auxiliary questions, including the "Does ... has" phrasing.
inline constexpr std::array<std::string_view, kNumLabels> kCompleteQuestions = {
    "Do [Ent1] and [Ent2] have neutral sentiment toward each other?",
    "Does [Ent1] has positive sentiment toward [Ent2]?",
    "Does [Ent2] has positive sentiment toward [Ent1]?",
    "Does [Ent1] has negative sentiment toward [Ent2]?",
    "Does [Ent2] has negative sentiment toward [Ent1]?",
};

// Grammatical variant kept for ablations only.
inline constexpr std::array<std::string_view, kNumLabels> kCompleteQuestionsGrammatical = {
    "Do [Ent1] and [Ent2] have neutral sentiment toward each other?",
    "Does [Ent1] have positive sentiment toward [Ent2]?",
    "Does [Ent2] have positive sentiment toward [Ent1]?",
    "Does [Ent1] have negative sentiment toward [Ent2]?",
    "Does [Ent2] have negative sentiment toward [Ent1]?",
};

inline constexpr std::array<std::string_view, kNumLabels> kPseudoQuestions = {
    "[Ent1] - [Ent2] - neutral",
    "[Ent1] - [Ent2] - positive",
    "[Ent2] - [Ent1] - positive",
    "[Ent1] - [Ent2] - negative",
    "[Ent2] - [Ent1] - negative",
};

}  // namespace detail

inline QuestionTemplate question(int index, QuestionStyle style, bool grammatical = false) {
  if (index < 0 || index >= kNumLabels) {
    throw ValidationError("question index out of range: " + std::to_string(index));
  }
  const auto& table = style == QuestionStyle::kPseudo
                          ? detail::kPseudoQuestions
                          : (grammatical ? detail::kCompleteQuestionsGrammatical
                                         : detail::kCompleteQuestions);
  return {index, style, table[static_cast<std::size_t>(index)]};
}

struct AugmentedTuple {
  std::string sentence;
  QuestionTemplate question;
  int binary_label = 0;
};

// One labelled 5-way example becomes five (sentence, question, yes/no) tuples;
// only the tuple asking about the gold label is a "yes".
inline std::array<AugmentedTuple, kNumLabels> augment(std::string_view masked_sentence,
                                                      SentimentLabel label,
                                                      QuestionStyle style,
                                                      bool grammatical = false) {
  std::array<AugmentedTuple, kNumLabels> out;
  for (int i = 0; i < kNumLabels; ++i) {
    auto& t = out[static_cast<std::size_t>(i)];
    t.sentence = std::string(masked_sentence);
    t.question = question(i, style, grammatical);
    t.binary_label = (i == index_of(label)) ? 1 : 0;
  }
  return out;
}

// Five independent yes-confidences; they need not sum to one.
class ScoreVector {
 public:
  ScoreVector() = default;
  explicit ScoreVector(const std::array<double, kNumLabels>& y) : y_(y) {
    for (double v : y_) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw ValidationError("score component outside [0,1]: " + std::to_string(v));
      }
    }
  }

  double operator[](int i) const { return y_[static_cast<std::size_t>(i)]; }
  const std::array<double, kNumLabels>& values() const { return y_; }

 private:
  std::array<double, kNumLabels> y_{};
};

// Argmax with exact ties resolved to the lowest index. Accepts any real
// scores so that monotone transforms of a ScoreVector can be checked too.
inline SentimentLabel argmax_label(std::span<const double, kNumLabels> scores) {
  int best = 0;
  for (int i = 1; i < kNumLabels; ++i) {
    if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
  }
  return static_cast<SentimentLabel>(best);
}

inline SentimentLabel aggregate(const ScoreVector& scores) {
  return argmax_label(std::span<const double, kNumLabels>(scores.values()));
}

// Random oversampling to the majority-class count. Originals are kept in
// input order; duplicates (uniform with replacement within each minority
// class) follow, class by class.
template <typename Example, typename LabelOf>
std::vector<Example> oversample(std::span<const Example> train, LabelOf label_of,
                                std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kNumLabels> members;
  for (std::size_t i = 0; i < train.size(); ++i) {
    members[static_cast<std::size_t>(index_of(label_of(train[i])))].push_back(i);
  }
  std::size_t majority = 0;
  for (int c = 0; c < kNumLabels; ++c) {
    if (members[static_cast<std::size_t>(c)].empty()) {
      throw ValidationError("cannot oversample: class " + std::to_string(c) +
                            " has no training examples");
    }
    majority = std::max(majority, members[static_cast<std::size_t>(c)].size());
  }
  std::vector<Example> out(train.begin(), train.end());
  out.reserve(majority * kNumLabels);
  Rng rng = make_rng(seed, "oversample");
  for (const auto& idx : members) {
    for (std::size_t k = idx.size(); k < majority; ++k) {
      out.push_back(train[idx[uniform_index(rng, idx.size())]]);
    }
  }
  return out;
}

template <typename Example, typename LabelOf>
std::vector<Example> oversample(const std::vector<Example>& train, LabelOf label_of,
                                std::uint64_t seed) {
  return oversample(std::span<const Example>(train), label_of, seed);
}

// Delimiters are owned by the encoder backend: BERT-style encoders use
// "[CLS] a [SEP] b [SEP]", RoBERTa "<s> a </s></s> b </s>".
struct PairConvention {
  std::string begin;
  std::string middle;
  std::string end;

  static PairConvention bert() { return {"[CLS]", "[SEP]", "[SEP]"}; }
  static PairConvention roberta() { return {"<s>", "</s></s>", "</s>"}; }
};

// Strong segment types: the sentence always comes first, so a swapped
// (question, sentence) construction does not compile.
struct SentenceSegment {
  std::string text;
  explicit SentenceSegment(std::string t) : text(std::move(t)) {}
};

struct QuestionSegment {
  std::string text;
  explicit QuestionSegment(std::string t) : text(std::move(t)) {}
};

class PairedInput {
 public:
  PairedInput(SentenceSegment sentence, QuestionSegment question, PairConvention convention)
      : a_(std::move(sentence.text)),
        b_(std::move(question.text)),
        convention_(std::move(convention)) {
    if (a_.empty() || b_.empty()) throw ValidationError("paired input segments must be non-empty");
  }

  const std::string& segment_a() const { return a_; }
  const std::string& segment_b() const { return b_; }
  const PairConvention& convention() const { return convention_; }

  std::string serialized() const {
    return convention_.begin + " " + a_ + " " + convention_.middle + " " + b_ + " " +
           convention_.end;
  }

 private:
  std::string a_;
  std::string b_;
  PairConvention convention_;
};

inline PairedInput serialize_pair(std::string_view sentence, const QuestionTemplate& q,
                                  const PairConvention& convention) {
  return PairedInput(SentenceSegment(std::string(sentence)),
                     QuestionSegment(std::string(q.text)), convention);
}

}  // namespace dse2qa
