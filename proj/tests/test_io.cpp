#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "dse2qa/io.hpp"

using namespace dse2qa;
namespace fs = std::filesystem;

namespace {

fs::path write_lines(const std::string& name, const std::vector<std::string>& lines) {
  const auto p = fs::temp_directory_path() / ("dse2qa_test_io_" + name);
  std::ofstream out(p);
  for (const auto& l : lines) out << l << "\n";
  return p;
}

std::string good(int i) { return R"({"item_id":"i)" + std::to_string(i) + R"(","text":"[Ent1] met [Ent2] .","first":{"surface":"A"},"second":{"surface":"B"},"label":0})"; }

}  // namespace

TEST_CASE("meta header is written first and skipped on read") {
  const auto p = fs::temp_directory_path() / "dse2qa_test_io_meta.jsonl";
  io::write_jsonl(p, {"stage", 7, "abc"}, {io::Json{{"x", 1}}, io::Json{{"x", 2}}});
  std::ifstream in(p);
  std::string first;
  std::getline(in, first);
  CHECK(first == R"({"_meta":{"tool":"dse2qa 0.1.0","stage":"stage","seed":7,"config_hash":"abc"}})");
  const auto rows = io::read_jsonl(p.string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[1]["x"] == 2);
}

TEST_CASE("a few bad lines are skipped, many abort") {
  std::vector<std::string> lines;
  for (int i = 0; i < 200; ++i) lines.push_back(good(i));
  lines[50] = "{not json";
  lines[120] = "";
  // 1 of 199 counted lines is bad: within the 1% budget
  const auto ok = write_lines("some_bad.jsonl", lines);
  const auto examples = io::read_jsonl<models::Example>(ok.string(), io::example_from_json);
  CHECK(examples.size() == 198);

  lines[150] = R"({"item_id":"x","text":"t","first":{"surface":"A"},"second":{"surface":"B"},"label":9})";

  const auto bad = write_lines("many_bad.jsonl", lines);
  try {
    (void)io::read_jsonl<models::Example>(bad.string(), io::example_from_json);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find(":51:") != std::string::npos);
  }
  CHECK_THROWS_AS(io::read_jsonl("/nonexistent/file.jsonl"), InputError);
}

TEST_CASE("example records round-trip") {
  models::Example ex{"a1:0:0-5", "[Ent1] praised [Ent2] .", "Joe Biden", "NATO", SentimentLabel::kPositiveForward};
  const auto back = io::example_from_json(io::to_json(ex));
  CHECK(back.item_id == ex.item_id);
  CHECK(back.text == ex.text);
  CHECK(back.surface_p == ex.surface_p);
  CHECK(back.surface_q == ex.surface_q);
  CHECK(back.label == ex.label);
  ex.label.reset();
  CHECK_FALSE(io::example_from_json(io::to_json(ex)).label);
}

TEST_CASE("response validation") {
  const auto r = io::response_from_json(io::Json::parse(R"({"item_id":"x","worker_id":"w","choice":3,"duration_seconds":4.5})"));
  CHECK(r.choice == SentimentLabel::kNegativeForward);
  CHECK_FALSE(r.is_test_item);
  CHECK_THROWS_AS(io::response_from_json(io::Json::parse(R"({"item_id":"x","worker_id":"w","choice":5,"duration_seconds":4.5})")),
                  ValidationError);
  CHECK_THROWS_AS(io::response_from_json(io::Json::parse(R"({"item_id":"x","worker_id":"w","choice":1,"duration_seconds":-1})")),
                  ValidationError);
  CHECK_THROWS_AS(io::response_from_json(io::Json::parse(R"({"item_id":"x","worker_id":"w","choice":"1","duration_seconds":2})")),
                  ValidationError);
}

TEST_CASE("augmented tuples serialise with the pair convention") {
  const auto tuples = augment("[Ent1] blamed [Ent2] .", SentimentLabel::kNegativeForward, QuestionStyle::kComplete);
  const auto j = io::to_json(tuples[3], "it", PairConvention::bert());
  CHECK(j["binary_label"] == 1);
  CHECK(j["question"] == "Does [Ent1] has negative sentiment toward [Ent2]?");
  CHECK(j["serialized"] == "[CLS] [Ent1] blamed [Ent2] . [SEP] Does [Ent1] has negative sentiment toward [Ent2]? [SEP]");
}

TEST_CASE("prediction records need five scores") {
  const auto r = io::record_from_json(io::Json::parse(R"({"item_id":"x","label":1,"predicted":2,"scores":[0,0.1,0.9,0,0]})"));
  CHECK(r.gold == SentimentLabel::kPositiveForward);
  CHECK(r.predicted == SentimentLabel::kPositiveBackward);
  CHECK((*r.scores)[2] == 0.9);
  CHECK_THROWS_AS(io::record_from_json(io::Json::parse(R"({"item_id":"x","label":1,"predicted":2,"scores":[0,1]})")),
                  ValidationError);
}
