#pragma once

// Scoring backends: three LNZ-style baselines (entity prior, BiLSTM context,
// combined), a 5-way transformer classifier read at [CLS], and the
// question-answering scorer that rates (sentence, question) pairs.

#include <array>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dse2qa/config.hpp"
#include "dse2qa/core.hpp"
#include "dse2qa/errors.hpp"
#include "dse2qa/log.hpp"
#include "dse2qa/models/vocab.hpp"
#include "dse2qa/nn/autograd.hpp"
#include "dse2qa/nn/layers.hpp"
#include "dse2qa/random.hpp"

namespace dse2qa::models {

enum class ModelKind { kEntityPrior, kContext, kCombined, kTransformerCls, kDse2qa };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kEntityPrior: return "entity_prior";
    case ModelKind::kContext: return "context";
    case ModelKind::kCombined: return "combined";
    case ModelKind::kTransformerCls: return "transformer_cls";
    case ModelKind::kDse2qa: return "dse2qa";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::kEntityPrior, ModelKind::kContext, ModelKind::kCombined,
                 ModelKind::kTransformerCls, ModelKind::kDse2qa}) {
    if (to_string(k) == s) return k;
  }
  throw UsageError("unknown model kind '" + std::string(s) +
                   "' (expected entity_prior|context|combined|transformer_cls|dse2qa)");
}

inline bool is_transformer(ModelKind k) {
  return k == ModelKind::kTransformerCls || k == ModelKind::kDse2qa;
}

struct TrainConfig {
  ModelKind model_kind = ModelKind::kDse2qa;
  std::string backend = "tiny_transformer";
  double learning_rate = 2e-5;
  double adam_epsilon = 1e-6;
  double weight_decay = 0.1;
  double dropout = 0.1;
  // Recurrent / static-embedding backends.
  std::size_t vocab_size = 10000;
  std::size_t embedding_width = 256;
  std::size_t hidden_width = 512;  // per LSTM direction
  std::size_t fc_width = 1024;
  // Transformer backend.
  std::size_t model_width = 32;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t ffn_width = 64;
  std::size_t max_seq_len = 128;
  // Loop.
  int patience = 5;
  int max_epochs = 30;
  std::size_t batch_size = 32;
  double warmup_fraction = 0.06;
  bool oversample = true;
  QuestionStyle question_style = QuestionStyle::kPseudo;
  bool grammatical_questions = false;
  std::uint64_t seed = 13;
  std::vector<std::uint64_t> seeds;
  std::size_t search_trials = 10;
  std::string embeddings_path;  // optional static embeddings (word2vec text format)
  std::string pretrained;       // checkpoint dir (or name under $DSE2QA_CACHE) to warm-start from
};

// Per-kind defaults: Adam at 1e-3 for the recurrent/static baselines;
// AdamW at 2e-5 (eps 1e-6, weight decay 0.1) for the transformer kinds.
inline TrainConfig default_config(ModelKind kind) {
  TrainConfig c;
  c.model_kind = kind;
  if (is_transformer(kind)) {
    c.backend = "tiny_transformer";
    c.learning_rate = 2e-5;
    c.adam_epsilon = 1e-6;
    c.weight_decay = 0.1;
  } else {
    c.backend = kind == ModelKind::kEntityPrior ? "static_embedding" : "bilstm";
    c.learning_rate = 1e-3;
    c.adam_epsilon = 1e-8;
    c.weight_decay = 0.0;
  }
  return c;
}

inline void validate(const TrainConfig& c) {
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw UsageError("dropout must be in [0,1)");
  if (c.batch_size == 0) throw UsageError("batch_size must be positive");
  if (c.patience < 1) throw UsageError("patience must be >= 1");
  if (c.max_epochs < 0) throw UsageError("max_epochs must be >= 0");
  if (c.learning_rate < 0.0) throw UsageError("learning_rate must be >= 0");
  const bool tf = c.backend == "tiny_transformer";
  if (is_transformer(c.model_kind) != tf) {
    throw UsageError("backend '" + c.backend + "' cannot serve model kind '" + std::string(to_string(c.model_kind)) + "'");
  }
  if (!tf && c.backend != "bilstm" && c.backend != "static_embedding") {
    throw UsageError("unknown backend '" + c.backend + "'");
  }
  if (c.model_kind == ModelKind::kEntityPrior && c.backend != "static_embedding") {
    throw UsageError("entity_prior uses the static_embedding backend");
  }
  if ((c.model_kind == ModelKind::kContext || c.model_kind == ModelKind::kCombined) && c.backend != "bilstm") {
    throw UsageError("context/combined models use the bilstm backend");
  }
  if (tf && (c.model_width % c.heads != 0)) throw UsageError("model_width must be divisible by heads");
  if (tf && c.max_seq_len < 4) throw UsageError("max_seq_len must be >= 4");
}

// Applies "train.*"-style keys (prefix stripped by the caller) on top of `c`.
inline void apply_overrides(TrainConfig& c, const config::KeyValues& kv) {
  using namespace config;
  for (const auto& [k, v] : kv) {
    if (k == "model_kind") c.model_kind = parse_model_kind(v);
    else if (k == "backend") c.backend = v;
    else if (k == "learning_rate") c.learning_rate = to_double(k, v);
    else if (k == "adam_epsilon") c.adam_epsilon = to_double(k, v);
    else if (k == "weight_decay") c.weight_decay = to_double(k, v);
    else if (k == "dropout") c.dropout = to_double(k, v);
    else if (k == "vocab_size") c.vocab_size = static_cast<std::size_t>(to_int(k, v));
    else if (k == "embedding_width") c.embedding_width = static_cast<std::size_t>(to_int(k, v));
    else if (k == "hidden_width") c.hidden_width = static_cast<std::size_t>(to_int(k, v));
    else if (k == "fc_width") c.fc_width = static_cast<std::size_t>(to_int(k, v));
    else if (k == "model_width") c.model_width = static_cast<std::size_t>(to_int(k, v));
    else if (k == "layers") c.layers = static_cast<std::size_t>(to_int(k, v));
    else if (k == "heads") c.heads = static_cast<std::size_t>(to_int(k, v));
    else if (k == "ffn_width") c.ffn_width = static_cast<std::size_t>(to_int(k, v));
    else if (k == "max_seq_len") c.max_seq_len = static_cast<std::size_t>(to_int(k, v));
    else if (k == "patience") c.patience = static_cast<int>(to_int(k, v));
    else if (k == "max_epochs") c.max_epochs = static_cast<int>(to_int(k, v));
    else if (k == "batch_size") c.batch_size = static_cast<std::size_t>(to_int(k, v));
    else if (k == "warmup_fraction") c.warmup_fraction = to_double(k, v);
    else if (k == "oversample") c.oversample = to_bool(k, v);
    else if (k == "question_style") c.question_style = parse_question_style(v);
    else if (k == "grammatical_questions") c.grammatical_questions = to_bool(k, v);
    else if (k == "seed") c.seed = static_cast<std::uint64_t>(to_int(k, v));
    else if (k == "seeds") {
      c.seeds.clear();
      for (const auto& s : parse_list(v)) c.seeds.push_back(static_cast<std::uint64_t>(to_int(k, s)));
    } else if (k == "search_trials") c.search_trials = static_cast<std::size_t>(to_int(k, v));
    else if (k == "embeddings_path") c.embeddings_path = v;
    else if (k == "pretrained") c.pretrained = v;
    else throw UsageError("unknown train config key '" + k + "'");
  }
}

inline std::string to_toml(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "model_kind = \"" << to_string(c.model_kind) << "\"\n"
     << "backend = \"" << c.backend << "\"\n"
     << "learning_rate = " << c.learning_rate << "\n"
     << "adam_epsilon = " << c.adam_epsilon << "\n"
     << "weight_decay = " << c.weight_decay << "\n"
     << "dropout = " << c.dropout << "\n"
     << "vocab_size = " << c.vocab_size << "\n"
     << "embedding_width = " << c.embedding_width << "\n"
     << "hidden_width = " << c.hidden_width << "\n"
     << "fc_width = " << c.fc_width << "\n"
     << "model_width = " << c.model_width << "\n"
     << "layers = " << c.layers << "\n"
     << "heads = " << c.heads << "\n"
     << "ffn_width = " << c.ffn_width << "\n"
     << "max_seq_len = " << c.max_seq_len << "\n"
     << "patience = " << c.patience << "\n"
     << "max_epochs = " << c.max_epochs << "\n"
     << "batch_size = " << c.batch_size << "\n"
     << "warmup_fraction = " << c.warmup_fraction << "\n"
     << "oversample = " << (c.oversample ? "true" : "false") << "\n"
     << "question_style = \"" << to_string(c.question_style) << "\"\n"
     << "grammatical_questions = " << (c.grammatical_questions ? "true" : "false") << "\n"
     << "seed = " << c.seed << "\n"
     << "seeds = [";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) os << (i ? ", " : "") << c.seeds[i];
  os << "]\n"
     << "search_trials = " << c.search_trials << "\n"
     << "embeddings_path = \"" << c.embeddings_path << "\"\n"
     << "pretrained = \"" << c.pretrained << "\"\n";
  return os.str();
}

// A masked sentence with its entity surfaces and (optional) gold label.
struct Example {
  std::string item_id;
  std::string text;
  std::string surface_p;
  std::string surface_q;
  std::optional<SentimentLabel> label;
};

struct Encoded {
  std::vector<int> tokens;  // masked sentence
  std::vector<int> p_ids;   // known tokens of the first entity surface
  std::vector<int> q_ids;
};

class Model {
 public:
  Model(TrainConfig cfg, Vocabulary vocab) : config_(std::move(cfg)), vocab_(std::move(vocab)) {}
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  ModelKind kind() const { return config_.model_kind; }
  const TrainConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  // 5 for the classifiers, 1 for the QA scorer.
  virtual int output_width() const { return kNumLabels; }

  Encoded encode(const Example& ex) const {
    return {vocab_.encode(ex.text), vocab_.encode_known(ex.surface_p), vocab_.encode_known(ex.surface_q)};
  }

  // Unnormalised output: 1x5 logits, or the 1x1 yes-logit for `question`
  // (ignored by classifiers).
  virtual nn::Var forward(nn::Tape& t, const Encoded& in, int question, bool training, Rng& rng) const = 0;

  // Inference: softmax probabilities, or per-question yes-scores for the QA
  // scorer.
  virtual std::array<double, kNumLabels> scores(const Encoded& in) const {
    nn::Tape t;
    Rng rng(0);
    const nn::Matrix p = nn::softmax_rows_value(forward(t, in, -1, false, rng).value());
    std::array<double, kNumLabels> out{};
    for (int c = 0; c < kNumLabels; ++c) out[static_cast<std::size_t>(c)] = p(0, c);
    return out;
  }

  std::array<double, kNumLabels> scores(const Example& ex) const { return scores(encode(ex)); }

 protected:
  TrainConfig config_;
  Vocabulary vocab_;
  nn::ParameterSet params_;
};

namespace detail {

inline nn::Index as_index(std::size_t v) { return static_cast<nn::Index>(v); }

// Hidden ReLU layer, dropout, output layer.
struct ClassifierHead {
  nn::Linear hidden;
  nn::Linear out;

  ClassifierHead() = default;
  ClassifierHead(nn::ParameterSet& ps, nn::Index in, nn::Index fc, nn::Index classes, Rng& rng)
      : hidden(ps, "head.hidden", in, fc, rng), out(ps, "head.out", fc, classes, rng) {}

  nn::Var operator()(nn::Tape& t, nn::Var x, double rate, bool training, Rng& rng) const {
    nn::Var h = nn::relu(hidden(t, x));
    if (training) h = nn::dropout(h, rate, rng);
    return out(t, h);
  }
};

inline std::pair<nn::Index, nn::Index> placeholder_positions(const std::vector<int>& tokens) {
  nn::Index p = -1, q = -1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == Vocabulary::kEnt1 && p < 0) p = static_cast<nn::Index>(i);
    if (tokens[i] == Vocabulary::kEnt2 && q < 0) q = static_cast<nn::Index>(i);
  }
  if (p < 0 || q < 0) throw ValidationError("sentence lacks the [Ent1]/[Ent2] placeholders");
  return {p, q};
}

}  // namespace detail

// Concatenated static embeddings of the two entity surfaces -> ReLU head.
// Multi-word surfaces average their known token vectors; fully unknown
// surfaces map to the zero vector.
class EntityPriorModel : public Model {
 public:
  EntityPriorModel(TrainConfig cfg, Vocabulary vocab, Rng& rng) : Model(std::move(cfg), std::move(vocab)) {
    const auto e = detail::as_index(config_.embedding_width);
    embeddings_ = &params_.add("embeddings", detail::as_index(vocab_.size()), e, /*decay=*/false);
    nn::init_uniform(*embeddings_, 0.1, rng);
    head_ = detail::ClassifierHead(params_, 2 * e, detail::as_index(config_.fc_width), kNumLabels, rng);
  }

  nn::Parameter& embeddings() { return *embeddings_; }

  nn::Var forward(nn::Tape& t, const Encoded& in, int, bool training, Rng& rng) const override {
    nn::Var ep = nn::mean_of_rows(t, *embeddings_, in.p_ids);
    nn::Var eq = nn::mean_of_rows(t, *embeddings_, in.q_ids);
    nn::Var x = nn::concat_cols({ep, eq});
    if (training) x = nn::dropout(x, config_.dropout, rng);
    return head_(t, x, config_.dropout, training, rng);
  }

 private:
  nn::Parameter* embeddings_ = nullptr;
  detail::ClassifierHead head_;
};

// BiLSTM over the masked sentence, read at the [Ent1]/[Ent2] positions.
class ContextModel : public Model {
 public:
  ContextModel(TrainConfig cfg, Vocabulary vocab, Rng& rng, bool with_entities = false)
      : Model(std::move(cfg), std::move(vocab)), with_entities_(with_entities) {
    const auto e = detail::as_index(config_.embedding_width);
    const auto h = detail::as_index(config_.hidden_width);
    embeddings_ = &params_.add("embeddings", detail::as_index(vocab_.size()), e, /*decay=*/false);
    nn::init_uniform(*embeddings_, 0.1, rng);
    lstm_ = nn::BiLstm(params_, "bilstm", e, h, rng);
    const nn::Index in = 4 * h + (with_entities ? 2 * e : 0);
    head_ = detail::ClassifierHead(params_, in, detail::as_index(config_.fc_width), kNumLabels, rng);
  }

  nn::Parameter& embeddings() { return *embeddings_; }

  nn::Var forward(nn::Tape& t, const Encoded& in, int, bool training, Rng& rng) const override {
    const auto [p, q] = detail::placeholder_positions(in.tokens);
    nn::Var x = nn::gather_rows(t, *embeddings_, in.tokens);
    if (training) x = nn::dropout(x, config_.dropout, rng);
    nn::Var states = lstm_(t, x);
    std::vector<nn::Var> parts;
    if (with_entities_) {
      parts.push_back(nn::mean_of_rows(t, *embeddings_, in.p_ids));
      parts.push_back(nn::mean_of_rows(t, *embeddings_, in.q_ids));
    }
    parts.push_back(nn::row(states, p));
    parts.push_back(nn::row(states, q));
    nn::Var feats = nn::concat_cols(parts);
    if (training) feats = nn::dropout(feats, config_.dropout, rng);
    return head_(t, feats, config_.dropout, training, rng);
  }

 private:
  bool with_entities_;
  nn::Parameter* embeddings_ = nullptr;
  nn::BiLstm lstm_;
  detail::ClassifierHead head_;
};

// e_p, e_q, lstm_p, lstm_q concatenated before the head.
class CombinedModel : public ContextModel {
 public:
  CombinedModel(TrainConfig cfg, Vocabulary vocab, Rng& rng)
      : ContextModel(std::move(cfg), std::move(vocab), rng, /*with_entities=*/true) {}
};

namespace detail {

// Transformer inputs under the BERT pair convention. Over-long inputs are
// cut from the right of the sentence segment first so the question survives.
struct TransformerInput {
  std::vector<int> ids;
  std::vector<int> segments;
};

inline TransformerInput single_input(const std::vector<int>& sentence, std::size_t max_len) {
  std::size_t keep = sentence.size();
  if (keep + 2 > max_len) {
    keep = max_len - 2;
    log::warn("input of " + std::to_string(sentence.size() + 2) + " tokens truncated to " + std::to_string(max_len));
  }
  TransformerInput in;
  in.ids.push_back(Vocabulary::kCls);
  in.ids.insert(in.ids.end(), sentence.begin(), sentence.begin() + static_cast<std::ptrdiff_t>(keep));
  in.ids.push_back(Vocabulary::kSep);
  in.segments.assign(in.ids.size(), 0);
  return in;
}

inline TransformerInput pair_input(const std::vector<int>& sentence, const std::vector<int>& question,
                                   std::size_t max_len) {
  std::size_t keep_s = sentence.size();
  std::size_t keep_q = question.size();
  if (keep_s + keep_q + 3 > max_len) {
    const std::size_t budget = max_len - 3;
    keep_q = std::min(keep_q, budget > 0 ? budget - 1 : 0);
    keep_s = std::min(keep_s, budget - keep_q);
    log::warn("pair input of " + std::to_string(sentence.size() + question.size() + 3) +
              " tokens truncated to " + std::to_string(max_len));
  }
  TransformerInput in;
  in.ids.push_back(Vocabulary::kCls);
  in.ids.insert(in.ids.end(), sentence.begin(), sentence.begin() + static_cast<std::ptrdiff_t>(keep_s));
  in.ids.push_back(Vocabulary::kSep);
  in.segments.assign(in.ids.size(), 0);
  in.ids.insert(in.ids.end(), question.begin(), question.begin() + static_cast<std::ptrdiff_t>(keep_q));
  in.ids.push_back(Vocabulary::kSep);
  in.segments.resize(in.ids.size(), 1);
  return in;
}

}  // namespace detail

class TransformerModelBase : public Model {
 public:
  TransformerModelBase(TrainConfig cfg, Vocabulary vocab, Rng& rng, nn::Index outputs)
      : Model(std::move(cfg), std::move(vocab)) {
    nn::TransformerShape s;
    s.vocab = detail::as_index(vocab_.size());
    s.width = detail::as_index(config_.model_width);
    s.layers = detail::as_index(config_.layers);
    s.heads = detail::as_index(config_.heads);
    s.ffn = detail::as_index(config_.ffn_width);
    s.max_positions = detail::as_index(config_.max_seq_len);
    encoder_ = nn::TransformerEncoder(params_, "encoder", s, rng);
    pooler_ = nn::Linear(params_, "pooler", s.width, s.width, rng);
    out_ = nn::Linear(params_, "head.out", s.width, outputs, rng);
  }

  // Head over the pooled [CLS] state.
  nn::Var run(nn::Tape& t, const detail::TransformerInput& in, bool training, Rng& rng) const {
    nn::Var h = encoder_(t, in.ids, in.segments, config_.dropout, training, rng);
    nn::Var pooled = nn::tanh(pooler_(t, nn::row(h, 0)));
    if (training) pooled = nn::dropout(pooled, config_.dropout, rng);
    return out_(t, pooled);
  }

 protected:
  nn::TransformerEncoder encoder_;
  nn::Linear pooler_;
  nn::Linear out_;
};

class TransformerClassifier : public TransformerModelBase {
 public:
  TransformerClassifier(TrainConfig cfg, Vocabulary vocab, Rng& rng)
      : TransformerModelBase(std::move(cfg), std::move(vocab), rng, kNumLabels) {}

  nn::Var forward(nn::Tape& t, const Encoded& in, int, bool training, Rng& rng) const override {
    return run(t, detail::single_input(in.tokens, config_.max_seq_len), training, rng);
  }
};

// Rates "[CLS] sentence [SEP] question [SEP]" with one sigmoid-squashed logit.
class QaScorer : public TransformerModelBase {
 public:
  QaScorer(TrainConfig cfg, Vocabulary vocab, Rng& rng)
      : TransformerModelBase(std::move(cfg), std::move(vocab), rng, 1) {
    for (int i = 0; i < kNumLabels; ++i) {
      questions_[static_cast<std::size_t>(i)] =
          vocab_.encode(question(i, config_.question_style, config_.grammatical_questions).text);
    }
  }

  int output_width() const override { return 1; }

  static PairConvention convention() { return PairConvention::bert(); }

  const std::vector<int>& question_ids(int i) const { return questions_.at(static_cast<std::size_t>(i)); }

  nn::Var forward(nn::Tape& t, const Encoded& in, int q, bool training, Rng& rng) const override {
    if (q < 0 || q >= kNumLabels) throw ValidationError("QA scorer needs a question index 0..4");
    return run(t, detail::pair_input(in.tokens, question_ids(q), config_.max_seq_len), training, rng);
  }

  nn::Var forward_pair(nn::Tape& t, const PairedInput& in, bool training, Rng& rng) const {
    return run(t, detail::pair_input(vocab_.encode(in.segment_a()), vocab_.encode(in.segment_b()), config_.max_seq_len),
               training, rng);
  }

  // Confidence in [0,1] that the question's answer is "yes".
  double qa_score(const PairedInput& in) const {
    nn::Tape t;
    Rng rng(0);
    return nn::sigmoid_value(forward_pair(t, in, false, rng).value())(0, 0);
  }

  std::array<double, kNumLabels> scores(const Encoded& in) const override {
    std::array<double, kNumLabels> out{};
    Rng rng(0);
    for (int i = 0; i < kNumLabels; ++i) {
      nn::Tape t;
      out[static_cast<std::size_t>(i)] = nn::sigmoid_value(forward(t, in, i, false, rng).value())(0, 0);
    }
    return out;
  }

 private:
  std::array<std::vector<int>, kNumLabels> questions_;
};

// Fresh model with weights drawn from the "init" substream of `seed`.
inline std::unique_ptr<Model> make_model(const TrainConfig& cfg, Vocabulary vocab, std::uint64_t seed) {
  validate(cfg);
  Rng rng = make_rng(seed, "init");
  switch (cfg.model_kind) {
    case ModelKind::kEntityPrior: return std::make_unique<EntityPriorModel>(cfg, std::move(vocab), rng);
    case ModelKind::kContext: return std::make_unique<ContextModel>(cfg, std::move(vocab), rng);
    case ModelKind::kCombined: return std::make_unique<CombinedModel>(cfg, std::move(vocab), rng);
    case ModelKind::kTransformerCls: return std::make_unique<TransformerClassifier>(cfg, std::move(vocab), rng);
    case ModelKind::kDse2qa: return std::make_unique<QaScorer>(cfg, std::move(vocab), rng);
  }
  throw UsageError("unknown model kind");
}

inline SentimentLabel predict_label(const Model& m, const std::array<double, kNumLabels>& scores) {
  (void)m;
  return argmax_label(std::span<const double, kNumLabels>(scores));
}

// ---------------------------------------------------------------------------
// Weights blob: "DSE2QAW1", u64 count, then per parameter
// (u32 name length, name, i64 rows, i64 cols, rows*cols doubles column-major).

inline void save_weights(const nn::ParameterSet& ps, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write weights: " + path);
  out.write("DSE2QAW1", 8);
  const std::uint64_t n = ps.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& p = ps[i];
    const auto len = static_cast<std::uint32_t>(p.name.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(p.name.data(), len);
    const std::int64_t r = p.value.rows(), c = p.value.cols();
    out.write(reinterpret_cast<const char*>(&r), sizeof r);
    out.write(reinterpret_cast<const char*>(&c), sizeof c);
    out.write(reinterpret_cast<const char*>(p.value.data()), static_cast<std::streamsize>(sizeof(double) * p.value.size()));
  }
}

inline void load_weights(nn::ParameterSet& ps, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open weights: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != "DSE2QAW1") throw InputError("not a weights file: " + path);
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (n != ps.size()) throw InputError("weights file has " + std::to_string(n) + " tensors, model expects " + std::to_string(ps.size()));
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    std::string name(len, '\0');
    in.read(name.data(), len);
    std::int64_t r = 0, c = 0;
    in.read(reinterpret_cast<char*>(&r), sizeof r);
    in.read(reinterpret_cast<char*>(&c), sizeof c);
    auto& p = ps[i];
    if (!in || name != p.name || r != p.value.rows() || c != p.value.cols()) {
      throw InputError("weights tensor mismatch at '" + name + "' in " + path);
    }
    in.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(sizeof(double) * p.value.size()));
  }
  if (!in) throw InputError("truncated weights file: " + path);
}

// word2vec text format ("word v1 ... vd", optional "count dim" header).
// Rows for words missing from the file keep their random initialisation.
inline std::size_t load_static_embeddings(nn::Parameter& table, const Vocabulary& vocab, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open embeddings: " + path);
  std::string line;
  std::size_t loaded = 0;
  while (std::getline(in, line)) {
    std::istringstream is(line);
    std::string word;
    is >> word;
    std::vector<double> v;
    double x;
    while (is >> x) v.push_back(x);
    if (v.size() != static_cast<std::size_t>(table.value.cols())) continue;  // header or foreign width
    const int id = vocab.id(text::lowercase(word));
    if (id == Vocabulary::kUnk) continue;
    for (std::size_t k = 0; k < v.size(); ++k) table.value(id, static_cast<nn::Index>(k)) = v[k];
    ++loaded;
  }
  return loaded;
}

}  // namespace dse2qa::models
