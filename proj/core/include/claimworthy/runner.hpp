#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "claimworthy/backend.hpp"
#include "claimworthy/corpus.hpp"
#include "claimworthy/metrics.hpp"
#include "claimworthy/prompt.hpp"

namespace claimworthy {

// Per-round averaging (arithmetic mean of round metrics, the default) or
// pooling all rounds into one confusion matrix before computing metrics.
enum class AveragingMode { PerRound, Pooled };

enum class ExperimentBackendKind { Http, Scripted, Baseline, Checkpoint };

// One experiment: a dataset, a template, a shot-count sweep, and a
// generator (live backend, scripted stand-in, classical baseline, or a
// tuned soft-prompt checkpoint). Loaded from a versioned JSON document.
struct ExperimentConfig {
  std::string name;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  TemplateKind template_kind = TemplateKind::short_form();
  std::filesystem::path template_file;  // required when kind is Custom
  std::vector<std::size_t> shot_counts{0};
  std::size_t rounds = 3;
  std::vector<std::uint32_t> seeds;  // one per round
  std::size_t token_budget = 4096;
  AveragingMode averaging = AveragingMode::PerRound;
  bool stratified_demos = false;
  std::filesystem::path output_dir = "runs";

  ExperimentBackendKind backend_kind = ExperimentBackendKind::Scripted;
  BackendConfig http;                     // Http
  std::filesystem::path script_file;      // Scripted
  std::string baseline_name;              // Baseline: majority|random|ngram
  std::filesystem::path checkpoint_path;  // Checkpoint
  std::filesystem::path cache_path;       // optional response cache

  void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// The resolved config as a JSON string; embedded in every record so runs
// are self-describing.
std::string experiment_config_json(const ExperimentConfig& config);

struct ExampleRow {
  std::string claim_id;
  std::string prompt_sha;  // digest of what the generator actually saw
  std::string raw_output;
  Label predicted = Label::No;
  Label gold = Label::No;
};

struct RoundResult {
  std::uint32_t seed = 0;
  ConfusionMatrix cm;
  MetricsReport metrics;
  std::vector<ExampleRow> rows;  // test-set order
};

struct CellResult {
  std::size_t shots = 0;
  std::vector<RoundResult> rounds;
  MetricsReport averaged;
};

struct RunRecord {
  std::string name;
  std::string model_label;        // report "Model" column
  std::string condition_prefix;   // template tag, or "-" for baselines
  bool shots_in_condition = true; // append "/<n>-shot" to the condition
  std::string config_snapshot;    // JSON
  std::string started_at;
  std::string finished_at;
  std::vector<CellResult> cells;
  std::size_t backend_calls = 0;  // generates that reached the generator
  std::size_t cache_hits = 0;
};

// Report "Template/Demonstration" column for one cell.
std::string condition_label(const RunRecord& record, const CellResult& cell);

// Runs the full pipeline: loads splits, builds the generator, sweeps
// shot counts over seeded rounds with a bounded worker pool, persists
// record.jsonl incrementally under output_dir/name/, then emits
// metrics.csv, report.md, and charts/*.svg there.
RunRecord run_experiment(const ExperimentConfig& config);

// Prints every assembled, budget-truncated prompt without building a
// backend or writing any output files.
void dry_run(const ExperimentConfig& config, std::ostream& out);

enum class ReportStyle { Markdown, Csv };

// Rows are emitted in record order, one per (record, cell), with columns
// Model | Template/Demonstration | F1 | Recall | Precision | Accuracy at
// four decimals. Re-verifies that every stored row's label matches the
// verbalizer applied to its stored raw output.
std::string render_report(std::span<const RunRecord> records,
                          ReportStyle style);

// Writes report.md and metrics.csv into `dir`.
void emit_report(std::span<const RunRecord> records,
                 const std::filesystem::path& dir);

struct ChartRow {
  std::string metric;
  std::string model;
  std::string condition;
  double value = 0.0;
};

std::vector<ChartRow> chart_rows(std::span<const RunRecord> records);

void write_chart_data_csv(std::span<const ChartRow> rows,
                          const std::filesystem::path& path);
std::vector<ChartRow> parse_chart_data_csv(const std::filesystem::path& path);

// Deterministic grouped bar chart (integer-pixel geometry, fixed palette).
// Models missing from `metric` entirely are omitted with a legend note.
std::string render_bar_chart_svg(std::span<const ChartRow> rows,
                                 std::string_view metric);

// data.csv plus one SVG per metric; charts are rendered from the parsed
// CSV, never directly from the records.
void emit_charts(std::span<const RunRecord> records,
                 const std::filesystem::path& charts_dir);

// Rebuilds a RunRecord from a completed record.jsonl (used by the report
// subcommand to combine earlier runs into one table).
RunRecord load_run_record(const std::filesystem::path& record_jsonl);

}  // namespace claimworthy
