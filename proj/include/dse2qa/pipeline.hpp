#pragma once

// Subcommand implementations behind the CLI. Each stage reads its inputs,
// writes its outputs under the output directory with a metadata header, and
// drops a run.json manifest (the only file carrying a timestamp).

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dse2qa/analysis.hpp"
#include "dse2qa/annotation.hpp"
#include "dse2qa/config.hpp"
#include "dse2qa/core.hpp"
#include "dse2qa/corpus.hpp"
#include "dse2qa/errors.hpp"
#include "dse2qa/evaluation.hpp"
#include "dse2qa/io.hpp"
#include "dse2qa/log.hpp"
#include "dse2qa/models/model.hpp"
#include "dse2qa/models/train.hpp"
#include "dse2qa/synthetic.hpp"

namespace dse2qa::pipeline {

namespace fs = std::filesystem;
using io::Json;

struct Paths {
  std::string corpus;
  std::string dictionary;
  std::string gazetteer;
  std::string media;
  std::string aliases;
  std::string responses;
  std::string candidates;
  std::string input;
  std::string train;
  std::string val;
  std::string checkpoint;
  std::string predictions;
  std::string out = "out";
};

struct CorpusSettings {
  double dictionary_fraction = 0.7;
  std::size_t target_count = 0;  // 0 keeps every candidate
  bool covid_only = false;
  std::set<std::string> entity_types{"PERSON", "NORP", "GPE", "ORG", "LOC", "FAC"};
};

struct AnnotationSettings {
  // Published split proportions (13,144 / 1,461 / 1,623 of 16,228).
  std::array<double, 3> split_fractions{13144.0 / 16228.0, 1461.0 / 16228.0, 1623.0 / 16228.0};
};

struct AnalysisSettings {
  std::size_t min_frequency = 20;
  std::size_t top_entities = 30;
  std::size_t top_n = 10;
};

struct PipelineConfig {
  std::uint64_t seed = 13;
  Paths paths;
  CorpusSettings corpus;
  AnnotationSettings annotation;
  models::TrainConfig train = models::default_config(models::ModelKind::kDse2qa);
  AnalysisSettings analysis;
  std::size_t trials = 1;
};

namespace detail {

inline std::string resolve(const fs::path& base, const std::string& v) {
  if (v.empty()) return v;
  fs::path p(v);
  return p.is_absolute() ? v : (base / p).lexically_normal().string();
}

}  // namespace detail

// Relative paths in a config file resolve against the file's directory.
// `model` replaces the configured model kind (and its backend default).
inline PipelineConfig load_config(const std::string& path, std::optional<models::ModelKind> model = std::nullopt) {
  PipelineConfig c;
  if (model) c.train = models::default_config(*model);
  if (path.empty()) return c;
  auto kv = config::load(path);
  if (model) {
    kv["train.model_kind"] = std::string(models::to_string(*model));
    kv.erase("train.backend");
  }
  const fs::path base = fs::path(path).parent_path();
  config::KeyValues train_kv;
  std::string model_kind;
  for (const auto& [k, v] : kv) {
    if (k.rfind("train.", 0) == 0) {
      train_kv[k.substr(6)] = v;
      if (k == "train.model_kind") model_kind = v;
    }
  }
  if (!model_kind.empty()) c.train = models::default_config(models::parse_model_kind(model_kind));
  models::apply_overrides(c.train, train_kv);
  for (const auto& [k, v] : kv) {
    if (k.rfind("train.", 0) == 0) continue;
    if (k == "seed") c.seed = static_cast<std::uint64_t>(config::to_int(k, v));
    else if (k == "trials") c.trials = static_cast<std::size_t>(config::to_int(k, v));
    else if (k == "paths.corpus") c.paths.corpus = detail::resolve(base, v);
    else if (k == "paths.dictionary") c.paths.dictionary = detail::resolve(base, v);
    else if (k == "paths.gazetteer") c.paths.gazetteer = detail::resolve(base, v);
    else if (k == "paths.media") c.paths.media = detail::resolve(base, v);
    else if (k == "paths.aliases") c.paths.aliases = detail::resolve(base, v);
    else if (k == "paths.responses") c.paths.responses = detail::resolve(base, v);
    else if (k == "paths.candidates") c.paths.candidates = detail::resolve(base, v);
    else if (k == "paths.input") c.paths.input = detail::resolve(base, v);
    else if (k == "paths.train") c.paths.train = detail::resolve(base, v);
    else if (k == "paths.val") c.paths.val = detail::resolve(base, v);
    else if (k == "paths.checkpoint") c.paths.checkpoint = detail::resolve(base, v);
    else if (k == "paths.predictions") c.paths.predictions = detail::resolve(base, v);
    else if (k == "paths.out") c.paths.out = detail::resolve(base, v);
    else if (k == "corpus.dictionary_fraction") c.corpus.dictionary_fraction = config::to_double(k, v);
    else if (k == "corpus.target_count") c.corpus.target_count = static_cast<std::size_t>(config::to_int(k, v));
    else if (k == "corpus.covid_only") c.corpus.covid_only = config::to_bool(k, v);
    else if (k == "corpus.entity_types") {
      c.corpus.entity_types.clear();
      for (auto& t : config::parse_list(v)) c.corpus.entity_types.insert(t);
    } else if (k == "annotation.split_fractions") {
      const auto parts = config::parse_list(v);
      if (parts.size() != 3) throw UsageError("annotation.split_fractions needs three values");
      for (std::size_t i = 0; i < 3; ++i) c.annotation.split_fractions[i] = config::to_double(k, parts[i]);
    } else if (k == "analysis.min_frequency") c.analysis.min_frequency = static_cast<std::size_t>(config::to_int(k, v));
    else if (k == "analysis.top_entities") c.analysis.top_entities = static_cast<std::size_t>(config::to_int(k, v));
    else if (k == "analysis.top_n") c.analysis.top_n = static_cast<std::size_t>(config::to_int(k, v));
    else throw UsageError("unknown config key '" + k + "' in " + path);
  }
  return c;
}

// Hash over every setting except file paths, so that identical runs into
// different directories share a hash.
inline std::string config_hash(const PipelineConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "seed=" << c.seed << "\ntrials=" << c.trials << "\n";
  os << "dictionary_fraction=" << c.corpus.dictionary_fraction << "\ntarget_count=" << c.corpus.target_count
     << "\ncovid_only=" << c.corpus.covid_only << "\nentity_types=";
  for (const auto& t : c.corpus.entity_types) os << t << ",";
  os << "\nsplit=";
  for (double f : c.annotation.split_fractions) os << f << ",";
  os << "\nmin_frequency=" << c.analysis.min_frequency << "\ntop_entities=" << c.analysis.top_entities
     << "\ntop_n=" << c.analysis.top_n << "\n";
  models::TrainConfig t = c.train;
  t.embeddings_path.clear();
  t.pretrained.clear();
  os << models::to_toml(t);
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << text::fnv1a(os.str());
  return hex.str();
}

inline io::Meta meta_for(const PipelineConfig& c, std::string stage) {
  return {std::move(stage), c.seed, config_hash(c)};
}

inline void require_path(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError("no " + what + " given");
  if (!fs::exists(path)) throw InputError(what + " not found: " + path);
}

inline void write_manifest(const PipelineConfig& c, const std::string& stage, const fs::path& dir,
                           const std::vector<std::string>& outputs) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream ts;
  ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  Json j;
  j["tool"] = io::kToolVersion;
  j["stage"] = stage;
  j["seed"] = c.seed;
  j["config_hash"] = config_hash(c);
  j["timestamp"] = ts.str();
  j["outputs"] = outputs;
  io::write_text(dir / "run.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// prepare-corpus

struct PrepareSummary {
  std::size_t articles = 0;
  std::size_t pairs = 0;
  std::size_t written = 0;
};

inline PrepareSummary prepare_corpus(const PipelineConfig& c) {
  require_path(c.paths.corpus, "corpus file");
  require_path(c.paths.dictionary, "dictionary file");
  auto articles = io::read_jsonl<corpus::RawArticle>(c.paths.corpus, io::article_from_json);
  const auto dict = corpus::SentimentDictionary::load(c.paths.dictionary);
  corpus::GazetteerRecognizer ner;
  if (!c.paths.gazetteer.empty()) {
    require_path(c.paths.gazetteer, "gazetteer file");
    ner = corpus::GazetteerRecognizer::load(c.paths.gazetteer);
  }
  const corpus::EntityTypeFilter filter(c.corpus.entity_types);
  const corpus::RuleSentenceSplitter splitter;

  std::stable_sort(articles.begin(), articles.end(),
                   [](const auto& a, const auto& b) { return a.article_id < b.article_id; });
  PrepareSummary s;
  std::vector<corpus::CandidatePair> pairs;
  for (const auto& a : articles) {
    if (c.corpus.covid_only && !analysis::covid_filter(a)) continue;
    ++s.articles;
    auto ps = corpus::article_candidates(a, splitter, ner, filter);
    pairs.insert(pairs.end(), std::make_move_iterator(ps.begin()), std::make_move_iterator(ps.end()));
  }
  if (articles.empty()) log::warn("corpus " + c.paths.corpus + " has no articles");
  s.pairs = pairs.size();

  std::size_t dict_pool = 0;
  for (auto& p : pairs) {
    const bool hit = corpus::dictionary_filter(p.sentence, dict);
    dict_pool += hit ? 1 : 0;
    p.sampling_route = hit ? corpus::SamplingRoute::kDictionary : corpus::SamplingRoute::kRandom;
  }
  std::vector<corpus::CandidatePair> chosen;
  if (c.corpus.target_count == 0) {
    chosen = std::move(pairs);
    corpus::detail::sort_canonical(chosen);
  } else {
    chosen = corpus::sample_candidates(std::move(pairs), dict, c.corpus.dictionary_fraction, c.corpus.target_count,
                                       c.seed);
  }

  std::vector<Json> rows;
  std::size_t routed_dict = 0;
  for (const auto& p : chosen) {
    routed_dict += p.sampling_route == corpus::SamplingRoute::kDictionary ? 1 : 0;
    rows.push_back(io::to_json(corpus::mask_entities(p)));
  }
  s.written = rows.size();
  const fs::path out(c.paths.out);
  io::write_jsonl(out / "candidates.jsonl", meta_for(c, "prepare-corpus"), rows);
  Json summary;
  summary["articles"] = s.articles;
  summary["candidate_pairs"] = s.pairs;
  summary["dictionary_pool"] = dict_pool;
  summary["random_pool"] = s.pairs - dict_pool;
  summary["written"] = s.written;
  summary["written_dictionary"] = routed_dict;
  summary["written_random"] = s.written - routed_dict;
  summary["dictionary_provenance"] = dict.provenance();
  io::write_text(out / "sampling_summary.json", summary.dump(2) + "\n");
  write_manifest(c, "prepare-corpus", out, {"candidates.jsonl", "sampling_summary.json"});
  return s;
}

// ---------------------------------------------------------------------------
// aggregate

struct AggregateSummary {
  std::size_t labeled = 0;
  std::size_t needs_annotation = 0;
  std::optional<double> kappa_before;
  std::optional<double> kappa_after;
};

inline std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& fractions) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (!(total > 0.0)) throw UsageError("split fractions must sum to a positive value");
  const auto train = static_cast<std::size_t>(std::llround(fractions[0] / total * static_cast<double>(n)));
  const auto val = std::min(n - std::min(n, train),
                            static_cast<std::size_t>(std::llround(fractions[1] / total * static_cast<double>(n))));
  return {std::min(n, train), val, n - std::min(n, train) - val};
}

namespace detail {

inline std::optional<double> kappa_or_null(const std::vector<annotation::VoteRow>& rows) {
  if (rows.empty()) return std::nullopt;
  return annotation::fleiss_kappa(rows);
}

inline Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::map<std::string, std::vector<SentimentLabel>> votes_by_item(
    const std::vector<annotation::AnnotationResponse>& rs) {
  std::map<std::string, std::vector<SentimentLabel>> out;
  for (const auto& r : rs) {
    if (!r.is_test_item) out[r.item_id].push_back(r.choice);
  }
  return out;
}

inline std::vector<annotation::VoteRow> five_vote_rows(const std::map<std::string, std::vector<SentimentLabel>>& v) {
  std::vector<annotation::VoteRow> rows;
  for (const auto& [id, votes] : v) {
    if (votes.size() != static_cast<std::size_t>(annotation::kRatersPerItem)) continue;
    annotation::VoteRow row{};
    for (auto l : votes) ++row[static_cast<std::size_t>(index_of(l))];
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

inline AggregateSummary aggregate(const PipelineConfig& c) {
  require_path(c.paths.responses, "responses file");
  const auto responses = io::read_jsonl<annotation::AnnotationResponse>(c.paths.responses, io::response_from_json);
  const auto filtered = annotation::filter_unreliable(responses);
  const auto raw_votes = detail::votes_by_item(responses);
  const auto kept_votes = detail::votes_by_item(filtered.kept);

  AggregateSummary s;
  std::vector<annotation::GoldLabel> gold;
  Json needs = Json::array();
  std::size_t ties = 0;
  for (const auto& [id, _] : raw_votes) {
    auto it = kept_votes.find(id);
    const std::size_t n = it == kept_votes.end() ? 0 : it->second.size();
    if (n != static_cast<std::size_t>(annotation::kRatersPerItem)) {
      needs.push_back({{"item_id", id}, {"reliable_responses", n}});
      continue;
    }
    gold.push_back(annotation::majority_vote(id, it->second));
    ties += gold.back().resolved_by == annotation::Resolution::kTieToNeutral ? 1 : 0;
  }
  s.labeled = gold.size();
  s.needs_annotation = needs.size();
  s.kappa_before = detail::kappa_or_null(detail::five_vote_rows(raw_votes));
  std::vector<annotation::VoteRow> after;
  for (const auto& g : gold) after.push_back(g.vote_counts);
  s.kappa_after = detail::kappa_or_null(after);

  const fs::path out(c.paths.out);
  std::vector<Json> gold_rows;
  for (const auto& g : gold) gold_rows.push_back(io::to_json(g));
  io::write_jsonl(out / "gold.jsonl", meta_for(c, "aggregate"), gold_rows);
  std::vector<std::string> outputs{"gold.jsonl", "annotation_report.json"};

  Json report;
  report["responses"] = responses.size();
  report["kept_responses"] = filtered.kept.size();
  report["items_labeled"] = s.labeled;
  report["ties_to_neutral"] = ties;
  report["kappa_before_filtering"] = detail::opt_json(s.kappa_before);
  report["kappa_after_filtering"] = detail::opt_json(s.kappa_after);
  report["needs_annotation"] = needs;
  Json workers = Json::object();
  for (const auto& [w, st] : filtered.ledger) {
    workers[w] = {{"total", st.total}, {"unreliable", st.unreliable}, {"discarded", st.discarded},
                  {"blacklisted", st.blacklisted}};
  }
  report["workers"] = workers;

  if (!c.paths.candidates.empty()) {
    require_path(c.paths.candidates, "candidates file");
    std::map<std::string, Json> by_id;
    for (auto& row : io::read_jsonl(c.paths.candidates)) by_id[io::str_field(row, "item_id")] = row;
    std::vector<Json> labeled;
    std::size_t missing = 0;
    for (const auto& g : gold) {
      auto it = by_id.find(g.item_id);
      if (it == by_id.end()) {
        ++missing;
        continue;
      }
      Json row = it->second;
      row["label"] = index_of(g.label);
      labeled.push_back(std::move(row));
    }
    if (missing > 0) log::warn(std::to_string(missing) + " gold items have no candidate record");
    report["gold_without_candidate"] = missing;
    io::write_jsonl(out / "labeled.jsonl", meta_for(c, "aggregate"), labeled);
    outputs.push_back("labeled.jsonl");
    if (!labeled.empty()) {
      const auto sizes = split_sizes(labeled.size(), c.annotation.split_fractions);
      const auto splits = annotation::split_dataset(
          labeled, [](const Json& j) { return io::label_field(j, "label"); }, sizes, c.seed);
      io::write_jsonl(out / "train.jsonl", meta_for(c, "aggregate"), splits.train);
      io::write_jsonl(out / "val.jsonl", meta_for(c, "aggregate"), splits.val);
      io::write_jsonl(out / "test.jsonl", meta_for(c, "aggregate"), splits.test);
      report["splits"] = {splits.train.size(), splits.val.size(), splits.test.size()};
      outputs.insert(outputs.end(), {"train.jsonl", "val.jsonl", "test.jsonl"});
    }
  }
  io::write_text(out / "annotation_report.json", report.dump(2) + "\n");
  write_manifest(c, "aggregate", out, outputs);
  return s;
}

// ---------------------------------------------------------------------------
// augment

inline std::size_t augment_file(const PipelineConfig& c) {
  require_path(c.paths.input, "input file");
  std::vector<Json> rows;
  for (const auto& ex : io::read_jsonl<models::Example>(c.paths.input, io::example_from_json)) {
    if (!ex.label) throw ValidationError("augment needs labelled examples; '" + ex.item_id + "' has no label");
    for (const auto& t : augment(ex.text, *ex.label, c.train.question_style, c.train.grammatical_questions)) {
      rows.push_back(io::to_json(t, ex.item_id, models::QaScorer::convention()));
    }
  }
  const fs::path out(c.paths.out);
  io::write_jsonl(out / "augmented.jsonl", meta_for(c, "augment"), rows);
  write_manifest(c, "augment", out, {"augmented.jsonl"});
  return rows.size();
}

// ---------------------------------------------------------------------------
// train

struct TrainSummary {
  int best_epoch = 0;
  double best_val_micro_f1 = 0.0;
};

inline TrainSummary train_model(const PipelineConfig& c) {
  require_path(c.paths.train, "training file");
  const auto train_set = io::read_jsonl<models::Example>(c.paths.train, io::example_from_json);
  std::vector<models::Example> val_set;
  if (c.train.max_epochs > 0) {
    require_path(c.paths.val, "validation file");
    val_set = io::read_jsonl<models::Example>(c.paths.val, io::example_from_json);
  }
  models::TrainConfig cfg = c.train;
  cfg.seed = c.seed;
  models::TrainResult result;
  Json trials = Json::array();
  if (c.trials > 1) {
    cfg.search_trials = c.trials;
    auto outcome = models::hyperparameter_search(cfg, models::SearchSpace{}, train_set, val_set);
    for (std::size_t i = 0; i < outcome.trials.size(); ++i) {
      trials.push_back({{"dropout", outcome.trials[i].dropout},
                        {"learning_rate", outcome.trials[i].learning_rate},
                        {"val_micro_f1", outcome.val_scores[i]}});
    }
    result = std::move(outcome.result);
  } else {
    result = models::train(cfg, train_set, val_set);
  }
  const fs::path out(c.paths.out);
  models::save_checkpoint(result, out);
  if (!trials.empty()) io::write_text(out / "search.json", trials.dump(2) + "\n");
  write_manifest(c, "train", out, {"config.toml", "vocab.txt", "weights.bin", "metrics.json"});
  return {result.best_epoch, result.best_val_micro_f1};
}

// ---------------------------------------------------------------------------
// predict

inline std::size_t predict_file(const PipelineConfig& c) {
  require_path(c.paths.checkpoint, "checkpoint directory");
  require_path(c.paths.input, "input file");
  const auto model = models::load_checkpoint(c.paths.checkpoint);
  const auto rows = io::read_jsonl(c.paths.input);
  std::vector<Json> out_rows;
  out_rows.reserve(rows.size());
  for (const auto& row : rows) {
    const auto ex = io::example_from_json(row);
    const auto scores = model->scores(ex);
    Json r = row;
    r["predicted"] = index_of(argmax_label(std::span<const double, kNumLabels>(scores)));
    r["scores"] = io::scores_json(scores);
    out_rows.push_back(std::move(r));
  }
  const fs::path out(c.paths.out);
  auto meta = meta_for(c, "predict");
  meta.stage = "predict:" + std::string(models::to_string(model->kind()));
  io::write_jsonl(out / "predictions.jsonl", meta, out_rows);
  write_manifest(c, "predict", out, {"predictions.jsonl"});
  return out_rows.size();
}

// ---------------------------------------------------------------------------
// evaluate

inline std::string method_from_predictions(const std::string& path) {
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  try {
    const auto j = Json::parse(first);
    if (io::is_meta(j)) {
      const auto stage = j["_meta"].value("stage", std::string());
      const auto colon = stage.find(':');
      if (colon != std::string::npos) return stage.substr(colon + 1);
    }
  } catch (const Json::parse_error&) {
  }
  return "model";
}

inline eval::MetricReport evaluate_file(const PipelineConfig& c) {
  require_path(c.paths.predictions, "predictions file");
  const auto records = io::read_jsonl<eval::PredictionRecord>(c.paths.predictions, io::record_from_json);
  if (records.empty()) throw ValidationError("no labelled predictions in " + c.paths.predictions);
  const auto report = eval::build_report(records);
  const fs::path out(c.paths.out);
  Json j;
  j["_meta"] = io::meta_line(meta_for(c, "evaluate"))["_meta"];
  j["report"] = io::to_json(report);
  io::write_text(out / "metrics.json", j.dump(2) + "\n");
  io::write_text(out / "metrics.txt", eval::render_table(report, method_from_predictions(c.paths.predictions)));
  write_manifest(c, "evaluate", out, {"metrics.json", "metrics.txt"});
  return report;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeSummary {
  std::size_t inferences = 0;
  std::size_t edges = 0;
  std::optional<double> negativity_ratio;
};

namespace detail {

inline std::string slug(const std::string& title) {
  std::string s;
  for (char ch : title) s += text::is_alnum(ch) ? ch : '_';
  return s;
}

inline std::string edges_csv(const std::vector<analysis::DirectedEdge>& edges) {
  std::ostringstream os;
  os << "source,target,sentiment,count\n";
  auto q = [](const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string r = "\"";
    for (char ch : s) r += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return r + "\"";
  };
  for (const auto& e : edges) {
    os << q(e.source) << "," << q(e.target) << "," << analysis::to_string(e.sentiment) << "," << e.count << "\n";
  }
  return os.str();
}

// Directed pairs with positive/negative counts and the smoothed log ratio.
inline std::string graph_csv(const std::vector<analysis::DirectedEdge>& edges, const std::set<std::string>& keep) {
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& e : edges) {
    if (!keep.empty() && (!keep.count(e.source) || !keep.count(e.target))) continue;
    auto& pn = pairs[{e.source, e.target}];
    (e.sentiment == analysis::Polarity::kPositive ? pn.first : pn.second) += e.count;
  }
  std::ostringstream os;
  os.precision(10);
  os << "source,target,positive,negative,log_ratio\n";
  for (const auto& [k, pn] : pairs) {
    os << k.first << "," << k.second << "," << pn.first << "," << pn.second << ","
       << analysis::log_ratio(pn.first, pn.second) << "\n";
  }
  return os.str();
}

}  // namespace detail

inline AnalyzeSummary analyze(const PipelineConfig& c) {
  require_path(c.paths.predictions, "predictions file");
  const auto rows = io::read_jsonl(c.paths.predictions);
  std::map<std::string, analysis::Bias> outlet_bias;
  if (!c.paths.media.empty()) {
    require_path(c.paths.media, "media list");
    for (const auto& m : analysis::load_media_csv(c.paths.media)) outlet_bias[m.name] = m.bias;
  }
  analysis::EntityCanonicalizer canon;
  if (!c.paths.aliases.empty()) {
    require_path(c.paths.aliases, "alias file");
    canon = analysis::EntityCanonicalizer::load(c.paths.aliases);
  }

  std::vector<analysis::Inference> all;
  std::map<analysis::Bias, std::vector<analysis::Inference>> grouped_inf;
  std::vector<corpus::CandidatePair> pairs;
  std::size_t unmapped = 0;
  for (const auto& row : rows) {
    analysis::Inference inf{io::pair_from_json(row), io::label_field(row, "predicted")};
    pairs.push_back(inf.pair);
    auto it = outlet_bias.find(inf.pair.outlet);
    if (it == outlet_bias.end()) {
      ++unmapped;
    } else {
      grouped_inf[it->second].push_back(inf);
    }
    all.push_back(std::move(inf));
  }

  const auto edge_set = analysis::count_edges(all, canon);
  const auto filtered = analysis::filter_min_frequency(edge_set.edges, c.analysis.min_frequency);
  analysis::GroupedEdges grouped;
  for (const auto& [bias, infs] : grouped_inf) grouped[bias] = analysis::count_edges(infs, canon).edges;
  const auto report = analysis::build_rank_tables(grouped);

  AnalyzeSummary s;
  s.inferences = all.size();
  s.edges = edge_set.edges.size();
  s.negativity_ratio = analysis::negativity_ratio(edge_set.edges);

  const fs::path out(c.paths.out);
  std::vector<std::string> outputs{"edges.csv", "edges_filtered.csv", "graph.csv", "rank_tables.txt", "analysis.json"};
  io::write_text(out / "edges.csv", detail::edges_csv(edge_set.edges));
  io::write_text(out / "edges_filtered.csv", detail::edges_csv(filtered));
  std::set<std::string> keep;
  if (c.analysis.top_entities > 0) {
    std::vector<corpus::CandidatePair> canon_pairs = pairs;
    keep = analysis::top_entities(canon_pairs, c.analysis.top_entities, canon);
  }
  io::write_text(out / "graph.csv", detail::graph_csv(filtered, keep));
  std::string tables;
  for (const auto& t : report.tables) {
    tables += analysis::render_rank_table(t, c.analysis.top_n) + "\n";
    const auto name = "rank_" + detail::slug(t.title) + ".csv";
    io::write_text(out / name, analysis::rank_table_csv(t));
    outputs.push_back(name);
  }
  io::write_text(out / "rank_tables.txt", tables);

  Json j;
  j["_meta"] = io::meta_line(meta_for(c, "analyze"))["_meta"];
  j["inferences"] = s.inferences;
  j["edges"] = s.edges;
  j["edges_after_min_frequency"] = filtered.size();
  j["self_pairs_dropped"] = edge_set.self_pairs_dropped;
  j["unmapped_outlets"] = unmapped;
  j["negativity_ratio"] = detail::opt_json(s.negativity_ratio);
  Json corr = Json::object();
  for (const auto& t : report.tables) corr[t.title] = detail::opt_json(t.left_right_spearman);
  j["left_right_spearman"] = corr;
  io::write_text(out / "analysis.json", j.dump(2) + "\n");
  write_manifest(c, "analyze", out, outputs);
  return s;
}

// ---------------------------------------------------------------------------
// synth

inline void synthesize(const PipelineConfig& c, std::size_t n_train, std::size_t n_val, std::size_t n_test) {
  const auto all = synthetic::generate(n_train + n_val + n_test, c.seed);
  const fs::path out(c.paths.out);
  auto dump = [&](std::size_t from, std::size_t to, const char* name) {
    std::vector<Json> rows;
    for (std::size_t i = from; i < to; ++i) rows.push_back(io::to_json(all[i]));
    io::write_jsonl(out / name, meta_for(c, "synth"), rows);
  };
  dump(0, n_train, "train.jsonl");
  dump(n_train, n_train + n_val, "val.jsonl");
  dump(n_train + n_val, all.size(), "test.jsonl");
  write_manifest(c, "synth", out, {"train.jsonl", "val.jsonl", "test.jsonl"});
}

// ---------------------------------------------------------------------------
// Published dataset totals

struct DatasetSummary {
  std::size_t total = 0;
  std::array<std::size_t, kNumLabels> class_counts{};
  std::map<std::string, std::size_t> split_counts;
};

// JSON-lines with "label" (0-4) and "split" in {train, val, test}.
inline DatasetSummary summarize_dataset(const std::string& path) {
  DatasetSummary s;
  for (const auto& row : io::read_jsonl(path)) {
    ++s.total;
    ++s.class_counts[static_cast<std::size_t>(index_of(io::label_field(row, "label")))];
    ++s.split_counts[row.value("split", std::string("unspecified"))];
  }
  return s;
}

}  // namespace dse2qa::pipeline
