#include <catch_amalgamated.hpp>

#include "cli_chain.hpp"
#include "dse2qa/pipeline.hpp"

using namespace dse2qa;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dse2qa_test_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
}

}  // namespace

TEST_CASE("fixture chain is byte-identical across runs") {
  const auto root = scratch("chain");
  const auto a = cli::run_chain(root / "a");
  const auto b = cli::run_chain(root / "b");
  REQUIRE(a.size() == 7);
  REQUIRE(b.size() == 7);
  for (const auto& s : a) {
    INFO(s.name);
    CHECK(s.status == 0);
  }
  CHECK(cli::first_difference(root / "a", root / "b").empty());
  CHECK(fs::exists(root / "a" / "ana" / "rank_tables.txt"));
}

TEST_CASE("fixture chain intermediate results") {
  const auto root = scratch("values");
  REQUIRE(cli::run_chain(root).back().status == 0);
  const auto cands = io::read_jsonl((root / "prep" / "candidates.jsonl").string());
  CHECK(cands.size() == 33);
  std::size_t dict = 0;
  for (const auto& c : cands) dict += c["sampling_route"] == "dictionary";
  CHECK(dict == 20);

  const auto report = io::Json::parse(cli::slurp(root / "agg" / "annotation_report.json"));
  CHECK(report["items_labeled"] == 30);
  CHECK(report["needs_annotation"].size() == 3);
  CHECK(report["kappa_before_filtering"].get<double>() == Catch::Approx(0.75864).margin(5e-6));
  CHECK(report["kappa_after_filtering"].get<double>() == Catch::Approx(0.75568).margin(5e-6));

  const auto gold = io::read_jsonl((root / "agg" / "gold.jsonl").string());
  for (const auto& g : gold) {
    if (g["item_id"] == "a07:3:0-26") {
      CHECK(g["label"] == 0);
      CHECK(g["resolved_by"] == "tie_to_neutral");
    }
  }
  CHECK(io::read_jsonl((root / "aug" / "augmented.jsonl").string()).size() == 150);
  const auto preds = io::read_jsonl((root / "pred" / "predictions.jsonl").string());
  CHECK(preds.size() == 30);
  std::ifstream in(root / "pred" / "predictions.jsonl");
  std::string first;
  std::getline(in, first);
  CHECK(io::Json::parse(first)["_meta"]["stage"] == "predict:dse2qa");
}

TEST_CASE("exit codes") {
  const auto root = scratch("exit");
  const std::string cfg = "--config " + cli::quote(cli::source("config/default.toml")) + " --quiet ";
  CHECK(cli::run("--help") == 0);
  CHECK(cli::run("") == 1);
  CHECK(cli::run("train --no-such-flag") == 1);
  CHECK(cli::run("evaluate --model bert") == 1);
  CHECK(cli::run("evaluate " + cfg + "--out " + cli::quote((root / "o").string())) == 1);
  CHECK(cli::run("evaluate " + cfg + "--predictions /nonexistent.jsonl --out " + cli::quote((root / "o").string())) == 2);

  write(root / "bad.toml", "[train]\nlearing_rate = 1\n");
  CHECK(cli::run("synth --config " + cli::quote((root / "bad.toml").string()) + " --out " + cli::quote((root / "o").string())) == 1);

  // unlabelled training data
  write(root / "unlabelled.jsonl", R"({"item_id":"x","text":"[Ent1] met [Ent2] .","first":{"surface":"A"},"second":{"surface":"B"}})"
                                   "\n");
  CHECK(cli::run("train " + cfg + "--train " + cli::quote((root / "unlabelled.jsonl").string()) + " --val " +
                 cli::quote((root / "unlabelled.jsonl").string()) + " --out " +
                 cli::quote((root / "o").string())) == 3);

  // a learning rate this large overflows the loss
  REQUIRE(cli::run("synth " + cfg + "--train-size 50 --val-size 10 --test-size 10 --out " + cli::quote((root / "syn").string())) == 0);
  write(root / "explode.toml", "[train]\nmodel_kind = \"entity_prior\"\nlearning_rate = 1e300\nembedding_width = 8\nfc_width = 8\n"
                               "max_epochs = 3\noversample = false\n");
  CHECK(cli::run("train --config " + cli::quote((root / "explode.toml").string()) + " --quiet --train " +
                 cli::quote((root / "syn" / "train.jsonl").string()) + " --val " + cli::quote((root / "syn" / "val.jsonl").string()) +
                 " --out " + cli::quote((root / "o2").string())) == 4);
}

TEST_CASE("global options may follow the subcommand") {
  const auto root = scratch("order");
  CHECK(cli::run("synth --train-size 5 --val-size 5 --test-size 5 --seed 3 --out " + cli::quote(root.string())) == 0);
  const auto rows = io::read_jsonl((root / "train.jsonl").string());
  CHECK(rows.size() == 5);
}

TEST_CASE("config loading resolves paths and rejects unknown keys") {
  const auto root = scratch("config");
  write(root / "c.toml", "seed = 99\n[paths]\ncorpus = \"sub/corpus.jsonl\"\n[train]\nmodel_kind = \"context\"\n");
  const auto c = pipeline::load_config((root / "c.toml").string());
  CHECK(c.seed == 99);
  CHECK(c.paths.corpus == (root / "sub" / "corpus.jsonl").string());
  CHECK(c.train.model_kind == models::ModelKind::kContext);
  CHECK(c.train.backend == "bilstm");
  const auto o = pipeline::load_config((root / "c.toml").string(), models::ModelKind::kDse2qa);
  CHECK(o.train.backend == "tiny_transformer");

  write(root / "d.toml", "[corpus]\nbogus = 1\n");
  CHECK_THROWS_AS(pipeline::load_config((root / "d.toml").string()), UsageError);
}

TEST_CASE("config hash ignores paths") {
  pipeline::PipelineConfig a, b;
  b.paths.out = "/elsewhere";
  b.train.pretrained = "ckpt";
  CHECK(pipeline::config_hash(a) == pipeline::config_hash(b));
  b.seed = 14;
  CHECK(pipeline::config_hash(a) != pipeline::config_hash(b));
}

TEST_CASE("split sizes follow the published proportions") {
  CHECK(pipeline::split_sizes(16228, {13144, 1461, 1623}) == std::array<std::size_t, 3>{13144, 1461, 1623});
  const auto s = pipeline::split_sizes(30, {13144, 1461, 1623});
  CHECK(s[0] + s[1] + s[2] == 30);
}

TEST_CASE("dataset summary") {
  const auto root = scratch("dataset");
  write(root / "d.jsonl", R"({"label":0,"split":"train"})"
                          "\n"
                          R"({"label":3,"split":"test"})"
                          "\n"
                          R"({"label":3,"split":"train"})"
                          "\n");
  const auto s = pipeline::summarize_dataset((root / "d.jsonl").string());
  CHECK(s.total == 3);
  CHECK(s.class_counts == std::array<std::size_t, 5>{1, 0, 0, 2, 0});
  CHECK(s.split_counts.at("train") == 2);
}
