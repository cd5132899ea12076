#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dse2qa/config.hpp"
#include "dse2qa/core.hpp"
#include "dse2qa/errors.hpp"
#include "dse2qa/evaluation.hpp"
#include "dse2qa/log.hpp"
#include "dse2qa/models/model.hpp"
#include "dse2qa/nn/optim.hpp"
#include "dse2qa/random.hpp"

namespace dse2qa::models {

// Stops once `patience` consecutive epochs fail to strictly beat the best
// validation score.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  // Returns true when the new score is the best so far.
  bool update(int epoch, double score) {
    if (score > best_) {
      best_ = score;
      best_epoch_ = epoch;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const { return stale_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_score() const { return best_; }

 private:
  int patience_;
  int stale_ = 0;
  int best_epoch_ = 0;
  double best_ = -std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_micro_f1 = 0.0;
};

struct Prediction {
  std::string item_id;
  std::optional<SentimentLabel> gold;
  SentimentLabel predicted = SentimentLabel::kNeutral;
  std::array<double, kNumLabels> scores{};
};

inline std::vector<Prediction> predict(const Model& m, const std::vector<Example>& examples) {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    Prediction p;
    p.item_id = ex.item_id;
    p.gold = ex.label;
    p.scores = m.scores(ex);
    p.predicted = argmax_label(std::span<const double, kNumLabels>(p.scores));
    out.push_back(std::move(p));
  }
  return out;
}

// Records for labelled predictions; unlabelled ones are an error.
inline std::vector<eval::PredictionRecord> to_records(const std::vector<Prediction>& preds) {
  std::vector<eval::PredictionRecord> out;
  out.reserve(preds.size());
  for (const auto& p : preds) {
    if (!p.gold) throw ValidationError("prediction '" + p.item_id + "' has no gold label");
    out.push_back({p.item_id, *p.gold, p.predicted, p.scores});
  }
  return out;
}

struct TrainResult {
  std::unique_ptr<Model> model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_micro_f1 = 0.0;
};

namespace detail {

inline SentimentLabel require_label(const Example& ex) {
  if (!ex.label) throw ValidationError("training example '" + ex.item_id + "' has no label");
  return *ex.label;
}

inline Vocabulary build_vocab(const TrainConfig& cfg, const std::vector<Example>& train) {
  std::vector<std::string> texts;
  for (const auto& ex : train) {
    texts.push_back(ex.text);
    texts.push_back(ex.surface_p);
    texts.push_back(ex.surface_q);
  }
  if (cfg.model_kind == ModelKind::kDse2qa) {
    for (int i = 0; i < kNumLabels; ++i) texts.emplace_back(question(i, cfg.question_style, cfg.grammatical_questions).text);
  }
  return Vocabulary::build(texts, cfg.vocab_size);
}

struct Unit {
  std::size_t example = 0;
  int question = -1;  // QA tuples only
  int target = 0;
};

inline nn::Var unit_loss(const Model& m, nn::Tape& t, const Encoded& in, const Unit& u, Rng& rng) {
  nn::Var out = m.forward(t, in, u.question, true, rng);
  if (m.output_width() == 1) return nn::bce_with_logits(out, static_cast<double>(u.target));
  return nn::cross_entropy(out, u.target);
}

}  // namespace detail

inline double validation_micro_f1(const Model& m, const std::vector<Example>& val) {
  const auto records = to_records(predict(m, val));
  return eval::micro_f1(records);
}

inline std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& dir);

// Copies tensors whose names and shapes match a saved checkpoint. A source
// that is not an existing path is looked up under $DSE2QA_CACHE.
inline std::size_t warm_start(Model& m, const std::string& source) {
  std::filesystem::path dir(source);
  if (!std::filesystem::exists(dir)) {
    const char* cache = std::getenv("DSE2QA_CACHE");
    if (cache == nullptr) throw InputError("pretrained weights '" + source + "' not found and DSE2QA_CACHE is unset");
    dir = std::filesystem::path(cache) / source;
  }
  auto donor = load_checkpoint(dir);
  std::size_t copied = 0;
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    auto& p = m.params()[i];
    const auto* d = donor->params().find(p.name);
    if (d && d->value.rows() == p.value.rows() && d->value.cols() == p.value.cols()) {
      p.value = d->value;
      ++copied;
    }
  }
  return copied;
}

// Trains one model. Oversampling (if enabled) happens on the 5-way examples
// before question augmentation, so every label contributes equally many
// "yes" tuples. The weights from the best validation epoch are kept.
inline TrainResult train(const TrainConfig& cfg, const std::vector<Example>& train_set,
                         const std::vector<Example>& val_set) {
  validate(cfg);
  if (train_set.empty()) throw ValidationError("training set is empty");
  for (const auto& ex : train_set) detail::require_label(ex);
  if (cfg.max_epochs > 0 && val_set.empty()) throw ValidationError("validation set is empty");

  TrainResult result;
  result.model = make_model(cfg, detail::build_vocab(cfg, train_set), cfg.seed);
  Model& m = *result.model;
  if (!cfg.embeddings_path.empty()) {
    if (auto* table = m.params().find("embeddings")) {
      const auto n = load_static_embeddings(*table, m.vocab(), cfg.embeddings_path);
      log::info("loaded " + std::to_string(n) + " static embeddings");
    }
  }
  if (!cfg.pretrained.empty()) {
    const auto n = warm_start(m, cfg.pretrained);
    log::info("warm-started " + std::to_string(n) + " tensors from " + cfg.pretrained);
  }
  if (cfg.max_epochs == 0) return result;

  std::vector<Example> examples =
      cfg.oversample ? oversample(train_set, detail::require_label, cfg.seed) : train_set;
  std::vector<Encoded> encoded;
  encoded.reserve(examples.size());
  for (const auto& ex : examples) encoded.push_back(m.encode(ex));

  std::vector<detail::Unit> units;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const int gold = index_of(*examples[i].label);
    if (m.output_width() == 1) {
      for (int q = 0; q < kNumLabels; ++q) units.push_back({i, q, q == gold ? 1 : 0});
    } else {
      units.push_back({i, -1, gold});
    }
  }

  const bool tf = is_transformer(cfg.model_kind);
  nn::AdamOptions opts;
  opts.learning_rate = cfg.learning_rate;
  opts.epsilon = cfg.adam_epsilon;
  opts.weight_decay = cfg.weight_decay;
  opts.decoupled = tf;
  nn::Adam adam(m.params(), opts);
  const long steps_per_epoch = static_cast<long>((units.size() + cfg.batch_size - 1) / cfg.batch_size);
  nn::LinearSchedule schedule;
  schedule.base = cfg.learning_rate;
  if (tf) {
    schedule.total = steps_per_epoch * cfg.max_epochs;
    schedule.warmup = static_cast<long>(cfg.warmup_fraction * static_cast<double>(schedule.total));
    schedule.decay = true;
  }

  Rng shuffle_rng = make_rng(cfg.seed, "shuffle");
  Rng dropout_rng = make_rng(cfg.seed, "dropout");
  EarlyStopping stopper(cfg.patience);
  std::vector<nn::Matrix> best = m.params().snapshot();
  nn::Tape tape;
  long step = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(std::span<detail::Unit>(units), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < units.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(units.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      m.params().zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        tape.clear();
        const auto& u = units[k];
        nn::Var loss = detail::unit_loss(m, tape, encoded[u.example], u, dropout_rng);
        const double l = loss.scalar();
        if (!std::isfinite(l)) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
        }
        loss_sum += l;
        tape.backward(loss, inv);
      }
      adam.step(schedule.at(step));
      ++step;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(units.size());
    rec.val_micro_f1 = validation_micro_f1(m, val_set);
    result.history.push_back(rec);
    log::info("epoch " + std::to_string(epoch) + " loss " + std::to_string(rec.train_loss) + " val micro-F1 " +
              std::to_string(rec.val_micro_f1));
    if (stopper.update(epoch, rec.val_micro_f1)) best = m.params().snapshot();
    if (stopper.should_stop()) break;
  }
  m.params().restore(best);
  result.best_epoch = stopper.best_epoch();
  result.best_val_micro_f1 = stopper.best_score();
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint directory: config.toml, vocab.txt, weights.bin, metrics.json.

inline void save_checkpoint(const TrainResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.toml");
    if (!out) throw InputError("cannot write " + (dir / "config.toml").string());
    out << "[train]\n" << to_toml(r.model->config());
  }
  r.model->vocab().save((dir / "vocab.txt").string());
  save_weights(r.model->params(), (dir / "weights.bin").string());
  nlohmann::ordered_json j;
  j["best_epoch"] = r.best_epoch;
  j["best_val_micro_f1"] = r.best_val_micro_f1;
  j["history"] = nlohmann::ordered_json::array();
  for (const auto& h : r.history) {
    j["history"].push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_micro_f1", h.val_micro_f1}});
  }
  std::ofstream out(dir / "metrics.json");
  out << j.dump(2) << "\n";
}

inline std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("checkpoint directory not found: " + dir.string());
  config::KeyValues kv = config::load((dir / "config.toml").string());
  config::KeyValues train_kv;
  for (const auto& [k, v] : kv) {
    if (k.rfind("train.", 0) == 0) train_kv[k.substr(6)] = v;
  }
  auto it = train_kv.find("model_kind");
  if (it == train_kv.end()) throw InputError("checkpoint config lacks model_kind");
  TrainConfig cfg = default_config(parse_model_kind(it->second));
  apply_overrides(cfg, train_kv);
  auto model = make_model(cfg, Vocabulary::load((dir / "vocab.txt").string()), cfg.seed);
  load_weights(model->params(), (dir / "weights.bin").string());
  return model;
}

// ---------------------------------------------------------------------------
// Random hyperparameter search.

struct SearchSpace {
  double dropout_min = 0.1;
  double dropout_max = 0.5;
  std::vector<double> learning_rates;  // empty: keep the base rate
};

inline std::vector<TrainConfig> sample_configs(const TrainConfig& base, const SearchSpace& space, std::size_t n,
                                               std::uint64_t seed) {
  Rng rng = make_rng(seed, "search");
  std::vector<TrainConfig> out;
  for (std::size_t i = 0; i < n; ++i) {
    TrainConfig c = base;
    c.dropout = uniform_real(rng, space.dropout_min, space.dropout_max);
    if (!space.learning_rates.empty()) c.learning_rate = space.learning_rates[uniform_index(rng, space.learning_rates.size())];
    out.push_back(c);
  }
  return out;
}

// Index of the highest score; ties go to the earliest trial.
inline std::size_t select_best(const std::vector<double>& val_scores) {
  if (val_scores.empty()) throw ValidationError("no trials to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_scores.size(); ++i) {
    if (val_scores[i] > val_scores[best]) best = i;
  }
  return best;
}

struct SearchOutcome {
  std::vector<TrainConfig> trials;
  std::vector<double> val_scores;
  std::size_t best = 0;
  TrainResult result;
};

inline SearchOutcome hyperparameter_search(const TrainConfig& base, const SearchSpace& space,
                                           const std::vector<Example>& train_set,
                                           const std::vector<Example>& val_set) {
  SearchOutcome out;
  out.trials = sample_configs(base, space, base.search_trials, base.seed);
  std::vector<TrainResult> results;
  for (const auto& c : out.trials) {
    results.push_back(train(c, train_set, val_set));
    out.val_scores.push_back(results.back().best_val_micro_f1);
  }
  out.best = select_best(out.val_scores);
  out.result = std::move(results[out.best]);
  return out;
}

struct SeedRun {
  std::uint64_t seed = 0;
  eval::MetricReport report;
};

// Trains once per seed and evaluates each run on `test_set`.
inline std::vector<SeedRun> multi_seed_run(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                                           const std::vector<Example>& train_set,
                                           const std::vector<Example>& val_set,
                                           const std::vector<Example>& test_set) {
  std::vector<SeedRun> out;
  for (auto s : seeds) {
    TrainConfig c = base;
    c.seed = s;
    auto r = train(c, train_set, val_set);
    const auto records = to_records(predict(*r.model, test_set));
    out.push_back({s, eval::build_report(records)});
  }
  return out;
}

}  // namespace dse2qa::models
