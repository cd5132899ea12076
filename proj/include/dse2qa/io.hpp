#pragma once

// JSON-lines reading/writing and record conversions. Every file written by
// the pipeline starts with a {"_meta": {...}} header line.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dse2qa/annotation.hpp"
#include "dse2qa/core.hpp"
#include "dse2qa/corpus.hpp"
#include "dse2qa/errors.hpp"
#include "dse2qa/evaluation.hpp"
#include "dse2qa/log.hpp"
#include "dse2qa/models/model.hpp"

namespace dse2qa::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "dse2qa 0.1.0";

struct Meta {
  std::string stage;
  std::uint64_t seed = 0;
  std::string config_hash;
};

inline Json meta_line(const Meta& m) {
  Json j;
  j["_meta"] = {{"tool", kToolVersion}, {"stage", m.stage}, {"seed", m.seed}, {"config_hash", m.config_hash}};
  return j;
}

inline bool is_meta(const Json& j) { return j.is_object() && j.contains("_meta"); }

// Fraction of malformed lines above which a read aborts.
inline constexpr double kMaxMalformedFraction = 0.01;

// Reads non-blank, non-header lines. Lines that fail to parse (or that
// `convert` rejects) are reported with their line number and skipped; more
// than 1% bad lines aborts with InputError.
template <typename T>
std::vector<T> read_jsonl(const std::string& path, const std::function<T(const Json&)>& convert) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::vector<T> out;
  std::vector<std::string> problems;
  std::size_t lines = 0;
  std::size_t lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      ++lines;
      problems.push_back(path + ":" + std::to_string(lineno) + ": malformed JSON");
      continue;
    }
    if (is_meta(j)) continue;
    ++lines;
    try {
      out.push_back(convert(j));
    } catch (const std::exception& e) {
      problems.push_back(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    for (const auto& p : problems) log::warn(p);
    if (static_cast<double>(problems.size()) > kMaxMalformedFraction * static_cast<double>(lines)) {
      throw InputError(problems.front() + " (" + std::to_string(problems.size()) + " of " + std::to_string(lines) +
                       " lines malformed; aborting)");
    }
  }
  return out;
}

inline std::vector<Json> read_jsonl(const std::string& path) {
  return read_jsonl<Json>(path, [](const Json& j) {
    if (!j.is_object()) throw ValidationError("expected a JSON object");
    return j;
  });
}

inline void write_jsonl(const std::filesystem::path& path, const Meta& meta, const std::vector<Json>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << meta_line(meta).dump() << "\n";
  for (const auto& r : rows) out << r.dump() << "\n";
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
}

// ---------------------------------------------------------------------------
// Field helpers

inline const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw ValidationError(std::string("missing field '") + name + "'");
  return j.at(name);
}

inline std::string str_field(const Json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) throw ValidationError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

inline SentimentLabel label_field(const Json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number_integer()) throw ValidationError(std::string("field '") + name + "' must be an integer 0-4");
  return label_from_index(v.get<long long>());
}

// ---------------------------------------------------------------------------
// Conversions

inline corpus::RawArticle article_from_json(const Json& j) {
  corpus::RawArticle a;
  a.article_id = str_field(j, "article_id");
  a.outlet = j.contains("outlet") && j["outlet"].is_string() ? j["outlet"].get<std::string>() : "";
  if (j.contains("published") && j["published"].is_string()) a.published = j["published"].get<std::string>();
  a.text = str_field(j, "text");
  return a;
}

inline Json to_json(const corpus::EntitySpan& s) {
  return {{"surface", s.surface}, {"start", s.start}, {"end", s.end}, {"entity_type", s.entity_type}};
}

inline corpus::EntitySpan span_from_json(const Json& j) {
  corpus::EntitySpan s;
  s.surface = str_field(j, "surface");
  s.start = j.value("start", std::size_t{0});
  s.end = j.value("end", std::size_t{0});
  s.entity_type = j.value("entity_type", std::string());
  return s;
}

// Candidate record: a MaskedSentence with its source pair flattened in.
inline Json to_json(const corpus::MaskedSentence& m) {
  const auto& p = m.original;
  Json j;
  j["item_id"] = p.item_id();
  j["text"] = m.text;
  j["sentence"] = p.sentence;
  j["first"] = to_json(p.first);
  j["second"] = to_json(p.second);
  j["article_id"] = p.source_article;
  j["outlet"] = p.outlet;
  j["sentence_index"] = p.sentence_index;
  j["sampling_route"] = corpus::to_string(p.sampling_route);
  return j;
}

inline corpus::CandidatePair pair_from_json(const Json& j) {
  corpus::CandidatePair p;
  p.sentence = j.value("sentence", std::string());
  p.first = span_from_json(field(j, "first"));
  p.second = span_from_json(field(j, "second"));
  p.source_article = j.value("article_id", std::string());
  p.outlet = j.value("outlet", std::string());
  p.sentence_index = j.value("sentence_index", std::size_t{0});
  if (j.contains("sampling_route")) p.sampling_route = corpus::parse_sampling_route(str_field(j, "sampling_route"));
  return p;
}

// Model input from a candidate-shaped record; "label" is optional.
inline models::Example example_from_json(const Json& j) {
  models::Example ex;
  ex.item_id = str_field(j, "item_id");
  ex.text = str_field(j, "text");
  ex.surface_p = str_field(field(j, "first"), "surface");
  ex.surface_q = str_field(field(j, "second"), "surface");
  if (j.contains("label") && !j["label"].is_null()) ex.label = label_field(j, "label");
  return ex;
}

inline Json to_json(const models::Example& ex) {
  Json j;
  j["item_id"] = ex.item_id;
  j["text"] = ex.text;
  j["first"] = {{"surface", ex.surface_p}};
  j["second"] = {{"surface", ex.surface_q}};
  if (ex.label) j["label"] = index_of(*ex.label);
  return j;
}

inline annotation::AnnotationResponse response_from_json(const Json& j) {
  annotation::AnnotationResponse r;
  r.item_id = str_field(j, "item_id");
  r.worker_id = str_field(j, "worker_id");
  r.choice = label_field(j, "choice");
  const auto& d = field(j, "duration_seconds");
  if (!d.is_number()) throw ValidationError("field 'duration_seconds' must be a number");
  r.duration_seconds = d.get<double>();
  if (r.duration_seconds < 0.0) throw ValidationError("negative duration_seconds");
  r.is_test_item = j.value("is_test_item", false);
  r.test_passed = j.value("test_passed", true);
  return r;
}

inline Json to_json(const annotation::GoldLabel& g) {
  Json j;
  j["item_id"] = g.item_id;
  j["label"] = index_of(g.label);
  j["vote_counts"] = g.vote_counts;
  j["resolved_by"] = annotation::to_string(g.resolved_by);
  return j;
}

inline Json to_json(const AugmentedTuple& t, const std::string& item_id, const PairConvention& conv) {
  Json j;
  j["item_id"] = item_id;
  j["question_index"] = t.question.index;
  j["style"] = to_string(t.question.style);
  j["sentence"] = t.sentence;
  j["question"] = std::string(t.question.text);
  j["binary_label"] = t.binary_label;
  j["serialized"] = serialize_pair(t.sentence, t.question, conv).serialized();
  return j;
}

inline Json scores_json(const std::array<double, kNumLabels>& s) {
  Json a = Json::array();
  for (double v : s) a.push_back(v);
  return a;
}

// Prediction file rows carry the input record plus "predicted" and "scores";
// the gold label (if any) stays under "label".
inline eval::PredictionRecord record_from_json(const Json& j) {
  eval::PredictionRecord r;
  r.item_id = str_field(j, "item_id");
  r.gold = label_field(j, "label");
  r.predicted = label_field(j, "predicted");
  if (j.contains("scores") && !j["scores"].is_null()) {
    const auto& s = j["scores"];
    if (!s.is_array() || s.size() != kNumLabels) throw ValidationError("field 'scores' must hold 5 numbers");
    std::array<double, kNumLabels> v{};
    for (std::size_t c = 0; c < kNumLabels; ++c) v[c] = s[c].get<double>();
    r.scores = v;
  }
  return r;
}

inline Json to_json(const eval::MetricReport& r) {
  Json j;
  j["count"] = r.count;
  j["micro_f1"] = r.micro_f1;
  j["macro_f1"] = r.macro_f1;
  j["map"] = r.has_ap ? Json(r.map) : Json(nullptr);
  j["per_class_f1"] = r.per_class_f1;
  j["per_class_ap"] = r.has_ap ? Json(r.per_class_ap) : Json(nullptr);
  Json absent = Json::array();
  Json no_pos = Json::array();
  for (int c = 0; c < kNumLabels; ++c) {
    if (r.absent_class[static_cast<std::size_t>(c)]) absent.push_back(c);
    if (r.no_positives[static_cast<std::size_t>(c)]) no_pos.push_back(c);
  }
  j["absent_classes"] = absent;
  j["classes_without_positives"] = no_pos;
  return j;
}

}  // namespace dse2qa::io
