// dse2qa command-line entry point.
//
// Exit codes: 0 success, 1 usage/config error, 2 missing or unreadable
// input, 3 invalid data, 4 training failure.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dse2qa/errors.hpp"
#include "dse2qa/log.hpp"
#include "dse2qa/pipeline.hpp"

namespace {

using dse2qa::pipeline::PipelineConfig;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> question_style;
  std::optional<std::string> model;
  std::optional<std::string> out;
  bool quiet = false;
};

PipelineConfig resolve(const Globals& g) {
  std::optional<dse2qa::models::ModelKind> kind;
  if (g.model) kind = dse2qa::models::parse_model_kind(*g.model);
  PipelineConfig c = dse2qa::pipeline::load_config(g.config, kind);
  if (g.seed) c.seed = *g.seed;
  if (g.question_style) c.train.question_style = dse2qa::parse_question_style(*g.question_style);
  if (g.out) c.paths.out = *g.out;
  return c;
}

void set_if(std::string& dst, const std::optional<std::string>& v) {
  if (v) dst = *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directed sentiment extraction between named entities (DSE2QA)"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Config file (TOML-style)");
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--question-style", g.question_style, "complete or pseudo")->check(CLI::IsMember({"complete", "pseudo"}));
  app.add_option("--model", g.model, "entity_prior, context, combined, transformer_cls or dse2qa")
      ->check(CLI::IsMember({"entity_prior", "context", "combined", "transformer_cls", "dse2qa"}));
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--quiet", g.quiet, "Suppress info messages");

  std::optional<std::string> corpus, dictionary, gazetteer, responses, candidates, input, train_file, val_file,
      checkpoint, predictions, media, aliases, pretrained;
  std::optional<int> epochs;
  std::optional<std::size_t> trials;
  std::size_t n_train = 500, n_val = 100, n_test = 100;
  std::string dataset;

  auto* prep = app.add_subcommand("prepare-corpus", "Split, tag and sample candidate entity pairs");
  prep->add_option("--corpus", corpus, "Article dump (JSON lines)");
  prep->add_option("--dictionary", dictionary, "Sentiment keyword list");
  prep->add_option("--gazetteer", gazetteer, "Entity gazetteer (surface<TAB>TYPE)");

  auto* agg = app.add_subcommand("aggregate", "Filter crowd responses, vote, split");
  agg->add_option("--responses", responses, "Annotation responses (JSON lines)");
  agg->add_option("--candidates", candidates, "Candidate file to attach labels to");

  auto* aug = app.add_subcommand("augment", "Expand labelled sentences into 5 question tuples");
  aug->add_option("--input", input, "Labelled examples (JSON lines)");

  auto* trn = app.add_subcommand("train", "Train a model and write a checkpoint directory");
  trn->add_option("--train", train_file, "Training examples");
  trn->add_option("--val", val_file, "Validation examples");
  trn->add_option("--epochs", epochs, "Maximum epochs (0 writes the initial weights)");
  trn->add_option("--trials", trials, "Random hyperparameter trials");
  trn->add_option("--pretrained", pretrained, "Checkpoint to warm-start from");

  auto* prd = app.add_subcommand("predict", "Score examples with a checkpoint");
  prd->add_option("--checkpoint", checkpoint, "Checkpoint directory");
  prd->add_option("--input", input, "Examples (JSON lines)");

  auto* evl = app.add_subcommand("evaluate", "Micro/macro F1 and (m)AP for a prediction file");
  evl->add_option("--predictions", predictions, "Prediction file");

  auto* ana = app.add_subcommand("analyze", "Sentiment edges and media-group rank tables");
  ana->add_option("--predictions", predictions, "Prediction file with candidate metadata");
  ana->add_option("--media", media, "Media list CSV (name,bias)");
  ana->add_option("--aliases", aliases, "Entity alias table");

  auto* syn = app.add_subcommand("synth", "Generate the separable synthetic corpus");
  syn->add_option("--train-size", n_train, "Training examples");
  syn->add_option("--val-size", n_val, "Validation examples");
  syn->add_option("--test-size", n_test, "Test examples");

  auto* chk = app.add_subcommand("check-dataset", "Report label and split totals of a labelled dataset");
  chk->add_option("dataset", dataset, "Dataset (JSON lines with label and split)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(dse2qa::ExitCode::kUsage);
  }

  dse2qa::log::ScopedSink sink([&g](std::string_view level, std::string_view msg) {
    if (g.quiet && level == "info") return;
    std::cerr << "[" << level << "] " << msg << "\n";
  });

  try {
    PipelineConfig c = resolve(g);
    namespace p = dse2qa::pipeline;
    if (*prep) {
      set_if(c.paths.corpus, corpus);
      set_if(c.paths.dictionary, dictionary);
      set_if(c.paths.gazetteer, gazetteer);
      const auto s = p::prepare_corpus(c);
      std::cout << "articles " << s.articles << ", candidate pairs " << s.pairs << ", written " << s.written << "\n";
    } else if (*agg) {
      set_if(c.paths.responses, responses);
      set_if(c.paths.candidates, candidates);
      const auto s = p::aggregate(c);
      std::cout << "labelled " << s.labeled << ", needs re-annotation " << s.needs_annotation;
      if (s.kappa_after) std::cout << ", kappa " << *s.kappa_after;
      std::cout << "\n";
    } else if (*aug) {
      set_if(c.paths.input, input);
      const auto n = p::augment_file(c);
      std::cout << "tuples " << n << "\n";
    } else if (*trn) {
      set_if(c.paths.train, train_file);
      set_if(c.paths.val, val_file);
      if (epochs) c.train.max_epochs = *epochs;
      if (trials) c.trials = *trials;
      if (pretrained) c.train.pretrained = *pretrained;
      const auto s = p::train_model(c);
      std::cout << "best epoch " << s.best_epoch << ", val micro-F1 " << s.best_val_micro_f1 << "\n";
    } else if (*prd) {
      set_if(c.paths.checkpoint, checkpoint);
      set_if(c.paths.input, input);
      const auto n = p::predict_file(c);
      std::cout << "predictions " << n << "\n";
    } else if (*evl) {
      set_if(c.paths.predictions, predictions);
      const auto r = p::evaluate_file(c);
      std::cout << dse2qa::eval::render_table(r, p::method_from_predictions(c.paths.predictions));
    } else if (*ana) {
      set_if(c.paths.predictions, predictions);
      set_if(c.paths.media, media);
      set_if(c.paths.aliases, aliases);
      const auto s = p::analyze(c);
      std::cout << "inferences " << s.inferences << ", edges " << s.edges;
      if (s.negativity_ratio) std::cout << ", negativity ratio " << *s.negativity_ratio;
      std::cout << "\n";
    } else if (*syn) {
      p::synthesize(c, n_train, n_val, n_test);
      std::cout << "wrote " << n_train << "/" << n_val << "/" << n_test << " examples to " << c.paths.out << "\n";
    } else if (*chk) {
      const auto s = p::summarize_dataset(dataset);
      std::cout << "total " << s.total << "\nclasses";
      for (auto n : s.class_counts) std::cout << " " << n;
      std::cout << "\n";
      for (const auto& [split, n] : s.split_counts) std::cout << split << " " << n << "\n";
    }
  } catch (const dse2qa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(dse2qa::ExitCode::kInput);
  }
  return 0;
}
