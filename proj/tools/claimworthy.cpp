// Command-line surface: stats, run, baseline, tune, report.
// Exit codes: 0 success, 2 config error, 3 backend failure, 4 dataset error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "claimworthy/baselines.hpp"
#include "claimworthy/corpus.hpp"
#include "claimworthy/error.hpp"
#include "claimworthy/metrics.hpp"
#include "claimworthy/prompt.hpp"
#include "claimworthy/runner.hpp"
#include "claimworthy/soft_prompt.hpp"
#include "claimworthy/tinylm.hpp"

namespace fs = std::filesystem;
using namespace claimworthy;

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Backend:
    case ErrorKind::Protocol:
    case ErrorKind::Request:
      return 3;
    case ErrorKind::Dataset:
    case ErrorKind::InsufficientData:
      return 4;
    default:
      return 1;
  }
}

struct StatsArgs {
  std::string train, dev, test;
  bool as_json = false;
};

int run_stats(const StatsArgs& args) {
  std::vector<std::pair<std::string, std::string>> splits;
  if (!args.train.empty()) splits.emplace_back("train", args.train);
  if (!args.dev.empty()) splits.emplace_back("dev", args.dev);
  if (!args.test.empty()) splits.emplace_back("test", args.test);
  if (splits.empty()) {
    throw Error(ErrorKind::Config,
                "stats needs at least one of --train/--dev/--test");
  }

  nlohmann::json out_json;
  std::string table =
      "| Split | Samples | Positive | Negative | Max length | Min length | "
      "Avg length |\n| --- | --- | --- | --- | --- | --- | --- |\n";
  for (const auto& [name, path] : splits) {
    const std::vector<LabeledExample> examples = load_split(path);
    const SplitStats stats = compute_stats(examples);
    if (args.as_json) {
      out_json[name] = {{"n_samples", stats.n_samples},
                        {"n_positive", stats.n_positive},
                        {"n_negative", stats.n_negative},
                        {"max_len", stats.max_len},
                        {"min_len", stats.min_len},
                        {"avg_len", stats.avg_len}};
    } else {
      table += "| " + name + " | " + std::to_string(stats.n_samples) + " | " +
               std::to_string(stats.n_positive) + " | " +
               std::to_string(stats.n_negative) + " | " +
               std::to_string(stats.max_len) + " | " +
               std::to_string(stats.min_len) + " | " +
               std::to_string(stats.avg_len) + " |\n";
    }
  }
  if (args.as_json) {
    std::cout << out_json.dump(2) << "\n";
  } else {
    std::cout << table;
  }
  return 0;
}

struct RunArgs {
  std::string config_path;
  bool dry = false;
};

int run_run(const RunArgs& args) {
  const ExperimentConfig config = load_experiment_config(args.config_path);
  if (args.dry) {
    dry_run(config, std::cout);
    return 0;
  }
  const RunRecord record = run_experiment(config);
  const std::span<const RunRecord> one(&record, 1);
  std::cout << render_report(one, ReportStyle::Markdown);
  std::cout << "outputs: " << (config.output_dir / config.name).string()
            << "\n";
  return 0;
}

struct BaselineArgs {
  std::string name;
  std::string train, test;
  std::size_t rounds = 3;
  std::vector<std::uint32_t> seeds;
  std::string averaging = "per_round";
  std::string output_dir = "runs";
  std::string run_name;
  std::string save_model;
};

int run_baseline(const BaselineArgs& args) {
  ExperimentConfig config;
  config.name = args.run_name.empty() ? "baseline-" + args.name : args.run_name;
  config.train_path = args.train;
  config.test_path = args.test;
  config.shot_counts = {0};
  config.rounds = args.rounds;
  config.seeds = args.seeds;
  if (config.seeds.empty()) {
    for (std::size_t r = 0; r < config.rounds; ++r) {
      config.seeds.push_back(static_cast<std::uint32_t>(r + 1));
    }
  }
  config.averaging = args.averaging == "pooled" ? AveragingMode::Pooled
                                                : AveragingMode::PerRound;
  config.output_dir = args.output_dir;
  config.backend_kind = ExperimentBackendKind::Baseline;
  config.baseline_name = args.name;

  if (!args.save_model.empty()) {
    if (args.name != "ngram") {
      throw Error(ErrorKind::Config, "--save-model only applies to ngram");
    }
    const std::vector<LabeledExample> train = load_split(config.train_path);
    save_ngram_model(ngram_fit(train), args.save_model);
    std::cout << "model saved: " << args.save_model << "\n";
  }

  const RunRecord record = run_experiment(config);
  const std::span<const RunRecord> one(&record, 1);
  std::cout << render_report(one, ReportStyle::Markdown);
  std::cout << "outputs: " << (config.output_dir / config.name).string()
            << "\n";
  return 0;
}

struct TuneArgs {
  std::string train, eval_split;
  std::string checkpoint;
  std::string template_name = "short";
  std::size_t prefix_len = 20;
  std::size_t vocab = 256;
  std::size_t embed_dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t context = 256;
  std::uint32_t model_seed = 1;
  std::uint32_t init_seed = 7;
  std::uint32_t shuffle_seed = 13;
  double lr = 3e-5;
  std::size_t epochs = 5;
  std::size_t batch = 8;
  double weight_decay = 0.01;
};

std::vector<TrainExample> tokenize_split(
    const std::vector<LabeledExample>& examples, std::size_t budget) {
  std::vector<TrainExample> out;
  out.reserve(examples.size());
  for (const LabeledExample& ex : examples) {
    out.push_back({byte_tokenize(ex.claim.text, budget), ex.label});
  }
  return out;
}

int run_tune(const TuneArgs& args) {
  TemplateKind kind;
  if (args.template_name == "long") {
    kind = TemplateKind::long_form();
  } else if (args.template_name == "short") {
    kind = TemplateKind::short_form();
  } else {
    kind = TemplateKind::custom(args.template_name);
  }

  TinyLMConfig lm_config;
  lm_config.vocab_size = args.vocab;
  lm_config.embed_dim = args.embed_dim;
  lm_config.n_layers = args.layers;
  lm_config.n_heads = args.heads;
  lm_config.context_len = args.context;
  lm_config.seed = args.model_seed;
  lm_config.validate();
  if (args.prefix_len >= lm_config.context_len) {
    throw Error(ErrorKind::Config, "prefix length must leave context room");
  }

  const TinyLM lm = TinyLM::init(lm_config);
  SoftPromptState sp =
      init_soft_prompt(args.prefix_len, lm_config.embed_dim, args.init_seed);

  TrainHyperparams hp;
  hp.learning_rate = args.lr;
  hp.epochs = args.epochs;
  hp.batch_size = args.batch;
  hp.weight_decay = args.weight_decay;
  hp.shuffle_seed = args.shuffle_seed;

  const std::size_t budget = lm_config.context_len - args.prefix_len;
  const std::vector<LabeledExample> train_split = load_split(args.train);
  const std::vector<TrainExample> train_data =
      tokenize_split(train_split, budget);

  const TrainReport train_report = train(lm, sp, train_data, hp);

  std::cout << "trainable parameters: " << train_report.trainable_count << " ("
            << format_param_ratio(train_report.trainable_count,
                                  lm.parameter_count())
            << " of the " << lm.parameter_count() << "-parameter base)\n";
  std::cout << "base frozen: "
            << (train_report.base_checksum_before == train_report.base_checksum_after
                    ? "yes"
                    : "NO (bug)")
            << "\n";
  for (std::size_t e = 0; e < train_report.epoch_mean_losses.size(); ++e) {
    std::cout << "epoch " << (e + 1)
              << " mean loss: " << render4(train_report.epoch_mean_losses[e])
              << "\n";
  }
  std::cout << "train accuracy: " << render4(train_report.final_train_accuracy)
            << "\n";

  save_checkpoint(args.checkpoint, lm, sp, hp, to_string(kind));
  std::cout << "checkpoint saved: " << args.checkpoint << "\n";

  if (!args.eval_split.empty()) {
    const std::vector<LabeledExample> eval_examples =
        load_split(args.eval_split);
    std::vector<Label> preds;
    std::vector<Label> gold;
    preds.reserve(eval_examples.size());
    gold.reserve(eval_examples.size());
    for (const LabeledExample& ex : eval_examples) {
      preds.push_back(classify_with_prefix(
          lm, sp, byte_tokenize(ex.claim.text, budget)));
      gold.push_back(ex.label);
    }
    const MetricsReport metrics = report(confusion(preds, gold));
    std::cout << "eval f1: " << render4(metrics.f1)
              << " recall: " << render4(metrics.recall)
              << " precision: " << render4(metrics.precision)
              << " accuracy: " << render4(metrics.accuracy) << "\n";
  }
  return 0;
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string output;
};

int run_report(const ReportArgs& args) {
  std::vector<RunRecord> records;
  records.reserve(args.runs.size());
  for (const std::string& run : args.runs) {
    fs::path path(run);
    if (fs::is_directory(path)) path /= "record.jsonl";
    records.push_back(load_run_record(path));
  }
  const fs::path out(args.output);
  emit_report(records, out);
  emit_charts(records, out / "charts");
  std::cout << render_report(records, ReportStyle::Markdown);
  std::cout << "outputs: " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"check-worthiness estimation pipeline"};
  app.require_subcommand(1);

  StatsArgs stats_args;
  CLI::App* stats = app.add_subcommand("stats", "dataset split statistics");
  stats->add_option("--train", stats_args.train, "train split TSV");
  stats->add_option("--dev", stats_args.dev, "dev split TSV");
  stats->add_option("--test", stats_args.test, "test split TSV");
  stats->add_flag("--json", stats_args.as_json, "emit JSON instead of a table");

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", run_args.config_path, "experiment JSON")
      ->required();
  run->add_flag("--dry-run", run_args.dry,
                "print assembled prompts, no backend calls");

  BaselineArgs baseline_args;
  CLI::App* baseline =
      app.add_subcommand("baseline", "evaluate a classical baseline");
  baseline
      ->add_option("--name", baseline_args.name,
                   "majority, random, or ngram")
      ->required();
  baseline->add_option("--train", baseline_args.train, "train split TSV")
      ->required();
  baseline->add_option("--test", baseline_args.test, "test split TSV")
      ->required();
  baseline->add_option("--rounds", baseline_args.rounds, "rounds (default 3)");
  baseline->add_option("--seeds", baseline_args.seeds, "one seed per round")
      ->delimiter(',');
  baseline->add_option("--averaging", baseline_args.averaging,
                       "per_round (default) or pooled");
  baseline->add_option("--output", baseline_args.output_dir,
                       "output parent directory (default runs)");
  baseline->add_option("--run-name", baseline_args.run_name,
                       "run directory name");
  baseline->add_option("--save-model", baseline_args.save_model,
                       "save the fitted ngram model as JSON");

  TuneArgs tune_args;
  CLI::App* tune = app.add_subcommand("tune", "train a soft prompt");
  tune->add_option("--train", tune_args.train, "train split TSV")->required();
  tune->add_option("--eval", tune_args.eval_split, "held-out split TSV");
  tune->add_option("--checkpoint", tune_args.checkpoint, "checkpoint path")
      ->required();
  tune->add_option("--template", tune_args.template_name,
                   "template tag to record (long, short, or a custom name)");
  tune->add_option("--prefix-len", tune_args.prefix_len,
                   "prefix rows p (default 20)");
  tune->add_option("--vocab", tune_args.vocab, "vocab size (default 256)");
  tune->add_option("--embed-dim", tune_args.embed_dim,
                   "embedding width e (default 64)");
  tune->add_option("--layers", tune_args.layers, "transformer layers");
  tune->add_option("--heads", tune_args.heads, "attention heads");
  tune->add_option("--context", tune_args.context, "context length");
  tune->add_option("--model-seed", tune_args.model_seed, "base model seed");
  tune->add_option("--init-seed", tune_args.init_seed, "prefix init seed");
  tune->add_option("--shuffle-seed", tune_args.shuffle_seed,
                   "epoch shuffle seed");
  tune->add_option("--lr", tune_args.lr, "learning rate (default 3e-5)");
  tune->add_option("--epochs", tune_args.epochs, "epochs (default 5)");
  tune->add_option("--batch", tune_args.batch, "batch size (default 8)");
  tune->add_option("--weight-decay", tune_args.weight_decay,
                   "decoupled weight decay (default 0.01)");

  ReportArgs report_args;
  CLI::App* report =
      app.add_subcommand("report", "combine finished runs into one report");
  report
      ->add_option("--runs", report_args.runs,
                   "run directories or record.jsonl paths")
      ->required()
      ->delimiter(',');
  report->add_option("--output", report_args.output, "output directory")
      ->required();

  try {
    app.parse(argc, argv);
    if (stats->parsed()) return run_stats(stats_args);
    if (run->parsed()) return run_run(run_args);
    if (baseline->parsed()) return run_baseline(baseline_args);
    if (tune->parsed()) return run_tune(tune_args);
    if (report->parsed()) return run_report(report_args);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what()
              << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
