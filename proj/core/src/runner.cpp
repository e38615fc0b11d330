#include "claimworthy/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include "claimworthy/baselines.hpp"
#include "claimworthy/digest.hpp"
#include "claimworthy/error.hpp"
#include "claimworthy/soft_prompt.hpp"
#include "claimworthy/verbalizer.hpp"

namespace claimworthy {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kMetricNames[4] = {"f1", "recall", "precision",
                                         "accuracy"};

std::string iso_utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string averaging_to_string(AveragingMode mode) {
  return mode == AveragingMode::PerRound ? "per_round" : "pooled";
}

AveragingMode averaging_from_string(const std::string& text) {
  if (text == "per_round") return AveragingMode::PerRound;
  if (text == "pooled") return AveragingMode::Pooled;
  throw Error(ErrorKind::Config,
              "averaging must be \"per_round\" or \"pooled\", got \"" + text +
                  "\"");
}

std::string backend_kind_to_string(ExperimentBackendKind kind) {
  switch (kind) {
    case ExperimentBackendKind::Http: return "http";
    case ExperimentBackendKind::Scripted: return "scripted";
    case ExperimentBackendKind::Baseline: return "baseline";
    case ExperimentBackendKind::Checkpoint: return "checkpoint";
  }
  return "?";
}

ExperimentBackendKind backend_kind_from_string(const std::string& text) {
  if (text == "http") return ExperimentBackendKind::Http;
  if (text == "scripted") return ExperimentBackendKind::Scripted;
  if (text == "baseline") return ExperimentBackendKind::Baseline;
  if (text == "checkpoint") return ExperimentBackendKind::Checkpoint;
  throw Error(ErrorKind::Config, "unknown backend kind \"" + text + "\"");
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = 1;
  j["name"] = c.name;
  json dataset;
  if (!c.train_path.empty()) dataset["train"] = c.train_path.string();
  dataset["test"] = c.test_path.string();
  j["dataset"] = std::move(dataset);

  json tmpl;
  switch (c.template_kind.tag) {
    case TemplateKind::Tag::Long: tmpl["kind"] = "long"; break;
    case TemplateKind::Tag::Short: tmpl["kind"] = "short"; break;
    case TemplateKind::Tag::Custom:
      tmpl["kind"] = "custom";
      tmpl["name"] = c.template_kind.custom_name;
      tmpl["file"] = c.template_file.string();
      break;
  }
  j["template"] = std::move(tmpl);

  j["shots"] = c.shot_counts;
  j["rounds"] = c.rounds;
  j["seeds"] = c.seeds;
  j["token_budget"] = c.token_budget;
  j["averaging"] = averaging_to_string(c.averaging);
  j["stratified_demos"] = c.stratified_demos;
  j["output_dir"] = c.output_dir.string();

  json backend;
  backend["kind"] = backend_kind_to_string(c.backend_kind);
  switch (c.backend_kind) {
    case ExperimentBackendKind::Http:
      backend["base_url"] = c.http.base_url;
      backend["model"] = c.http.model_name;
      backend["temperature"] = c.http.temperature;
      backend["max_new_tokens"] = c.http.max_new_tokens;
      backend["timeout_ms"] = c.http.timeout_ms;
      backend["max_retries"] = c.http.max_retries;
      backend["max_parallel"] = c.http.max_parallel;
      backend["retry_base_ms"] = c.http.retry_base_ms;
      backend["retry_cap_ms"] = c.http.retry_cap_ms;
      break;
    case ExperimentBackendKind::Scripted:
      backend["script_file"] = c.script_file.string();
      break;
    case ExperimentBackendKind::Baseline:
      backend["name"] = c.baseline_name;
      break;
    case ExperimentBackendKind::Checkpoint:
      backend["checkpoint"] = c.checkpoint_path.string();
      break;
  }
  j["backend"] = std::move(backend);

  if (!c.cache_path.empty()) j["cache"] = c.cache_path.string();
  return j;
}

std::size_t require_count(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_unsigned()) {
    throw Error(ErrorKind::Config,
                std::string("config: ") + key + " must be a non-negative integer");
  }
  return j[key].get<std::size_t>();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty()) {
    throw Error(ErrorKind::Config, "experiment name must be non-empty");
  }
  if (name.find('/') != std::string::npos ||
      name.find('\\') != std::string::npos) {
    throw Error(ErrorKind::Config,
                "experiment name must not contain path separators");
  }
  if (test_path.empty()) {
    throw Error(ErrorKind::Config, "test dataset path is required");
  }
  if (rounds == 0) throw Error(ErrorKind::Config, "rounds must be >= 1");
  if (seeds.size() != rounds) {
    std::ostringstream msg;
    msg << "need exactly one seed per round: " << seeds.size() << " seeds for "
        << rounds << " rounds";
    throw Error(ErrorKind::Config, msg.str());
  }
  if (shot_counts.empty()) {
    throw Error(ErrorKind::Config, "shots list must be non-empty");
  }
  if (token_budget == 0) {
    throw Error(ErrorKind::Config, "token budget must be positive");
  }

  const bool prompt_flow = backend_kind == ExperimentBackendKind::Http ||
                           backend_kind == ExperimentBackendKind::Scripted;
  if (prompt_flow && template_kind.tag == TemplateKind::Tag::Custom &&
      template_file.empty()) {
    throw Error(ErrorKind::Config,
                "custom template requires a template file path");
  }
  const bool needs_demos =
      prompt_flow &&
      std::any_of(shot_counts.begin(), shot_counts.end(),
                  [](std::size_t n) { return n > 0; });
  if ((needs_demos || backend_kind == ExperimentBackendKind::Baseline) &&
      train_path.empty()) {
    throw Error(ErrorKind::Config,
                "train dataset path is required for this configuration");
  }

  switch (backend_kind) {
    case ExperimentBackendKind::Http:
      http.validate();
      break;
    case ExperimentBackendKind::Scripted:
      if (script_file.empty()) {
        throw Error(ErrorKind::Config, "scripted backend requires script_file");
      }
      break;
    case ExperimentBackendKind::Baseline:
      if (baseline_name != "majority" && baseline_name != "random" &&
          baseline_name != "ngram") {
        throw Error(ErrorKind::Config,
                    "baseline must be majority, random, or ngram, got \"" +
                        baseline_name + "\"");
      }
      break;
    case ExperimentBackendKind::Checkpoint:
      if (checkpoint_path.empty()) {
        throw Error(ErrorKind::Config,
                    "checkpoint backend requires a checkpoint path");
      }
      break;
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Config, "cannot open config: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config,
                "config: invalid JSON in " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorKind::Config, "config must be a JSON object");
  }
  if (j.value("version", 0) != 1) {
    throw Error(ErrorKind::Config, "config: unsupported version (expect 1)");
  }

  ExperimentConfig c;
  try {
    c.name = j.at("name").get<std::string>();

    const json& dataset = j.at("dataset");
    if (dataset.contains("train")) {
      c.train_path = dataset.at("train").get<std::string>();
    }
    c.test_path = dataset.at("test").get<std::string>();

    if (j.contains("template")) {
      const json& tmpl = j.at("template");
      const std::string kind = tmpl.at("kind").get<std::string>();
      if (kind == "long") {
        c.template_kind = TemplateKind::long_form();
      } else if (kind == "short") {
        c.template_kind = TemplateKind::short_form();
      } else if (kind == "custom") {
        c.template_kind =
            TemplateKind::custom(tmpl.at("name").get<std::string>());
        if (tmpl.contains("file")) {
          c.template_file = tmpl.at("file").get<std::string>();
        }
      } else {
        throw Error(ErrorKind::Config,
                    "template kind must be long, short, or custom");
      }
    }

    if (j.contains("shots")) {
      c.shot_counts.clear();
      for (const json& s : j.at("shots")) {
        if (!s.is_number_unsigned()) {
          throw Error(ErrorKind::Config, "shot counts must be non-negative");
        }
        c.shot_counts.push_back(s.get<std::size_t>());
      }
    }
    if (j.contains("rounds")) c.rounds = require_count(j, "rounds");
    if (j.contains("seeds")) {
      for (const json& s : j.at("seeds")) {
        if (!s.is_number_unsigned()) {
          throw Error(ErrorKind::Config, "seeds must be non-negative");
        }
        c.seeds.push_back(s.get<std::uint32_t>());
      }
    } else {
      for (std::size_t r = 0; r < c.rounds; ++r) {
        c.seeds.push_back(static_cast<std::uint32_t>(r + 1));
      }
    }
    if (j.contains("token_budget")) {
      c.token_budget = require_count(j, "token_budget");
    }
    if (j.contains("averaging")) {
      c.averaging = averaging_from_string(j.at("averaging").get<std::string>());
    }
    if (j.contains("stratified_demos")) {
      c.stratified_demos = j.at("stratified_demos").get<bool>();
    }
    if (j.contains("output_dir")) {
      c.output_dir = j.at("output_dir").get<std::string>();
    }

    const json& backend = j.at("backend");
    c.backend_kind =
        backend_kind_from_string(backend.at("kind").get<std::string>());
    switch (c.backend_kind) {
      case ExperimentBackendKind::Http:
        c.http.base_url = backend.at("base_url").get<std::string>();
        c.http.model_name = backend.at("model").get<std::string>();
        c.http.temperature = backend.value("temperature", 0.0);
        c.http.max_new_tokens = backend.value("max_new_tokens", 16);
        c.http.timeout_ms = backend.value("timeout_ms", 30000);
        c.http.max_retries = backend.value("max_retries", 3);
        c.http.max_parallel = backend.value("max_parallel", 4);
        c.http.retry_base_ms = backend.value("retry_base_ms", 500);
        c.http.retry_cap_ms = backend.value("retry_cap_ms", 16000);
        break;
      case ExperimentBackendKind::Scripted:
        c.script_file = backend.at("script_file").get<std::string>();
        break;
      case ExperimentBackendKind::Baseline:
        c.baseline_name = backend.at("name").get<std::string>();
        break;
      case ExperimentBackendKind::Checkpoint:
        c.checkpoint_path = backend.at("checkpoint").get<std::string>();
        break;
    }

    if (j.contains("cache")) c.cache_path = j.at("cache").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "config: missing or mistyped field in " +
                                       path.string() + ": " + e.what());
  }

  c.validate();
  return c;
}

std::string experiment_config_json(const ExperimentConfig& config) {
  return config_to_json(config).dump();
}

std::string condition_label(const RunRecord& record, const CellResult& cell) {
  if (!record.shots_in_condition) return record.condition_prefix;
  return record.condition_prefix + "/" + std::to_string(cell.shots) + "-shot";
}

namespace {

// ----- record.jsonl plumbing -----

class RecordWriter {
 public:
  explicit RecordWriter(const fs::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) {
      throw Error(ErrorKind::Config, "cannot write " + path.string());
    }
  }

  void line(const json& j) {
    out_ << j.dump() << '\n';
    out_.flush();
    if (!out_) {
      throw Error(ErrorKind::Internal, "record write failed: " + path_.string());
    }
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

json row_json(std::size_t shots, std::size_t round, const ExampleRow& row) {
  return json{{"type", "example"},
              {"shots", shots},
              {"round", round},
              {"claim_id", row.claim_id},
              {"prompt_sha", row.prompt_sha},
              {"raw_output", row.raw_output},
              {"predicted", std::string(to_string(row.predicted))},
              {"gold", std::string(to_string(row.gold))}};
}

json round_json(std::size_t shots, std::size_t round, const RoundResult& rr) {
  return json{{"type", "round"},     {"shots", shots},
              {"round", round},      {"seed", rr.seed},
              {"tp", rr.cm.tp},      {"fp", rr.cm.fp},
              {"fn", rr.cm.fn},      {"tn", rr.cm.tn},
              {"f1", rr.metrics.f1}, {"recall", rr.metrics.recall},
              {"precision", rr.metrics.precision},
              {"accuracy", rr.metrics.accuracy}};
}

json cell_json(const CellResult& cell) {
  return json{{"type", "cell"},
              {"shots", cell.shots},
              {"f1", cell.averaged.f1},
              {"recall", cell.averaged.recall},
              {"precision", cell.averaged.precision},
              {"accuracy", cell.averaged.accuracy}};
}

// ----- generator construction -----

BackendPtr make_scripted_backend(const fs::path& script_file) {
  std::ifstream in(script_file, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Config,
                "cannot open script file: " + script_file.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "script file: invalid JSON in " +
                                       script_file.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("responses") ||
      !j["responses"].is_object()) {
    throw Error(ErrorKind::Config,
                "script file needs a \"responses\" object keyed by prompt "
                "digest");
  }
  std::map<std::string, std::string> script;
  for (const auto& [digest, text] : j["responses"].items()) {
    if (!text.is_string()) {
      throw Error(ErrorKind::Config,
                  "script file: response for " + digest + " must be a string");
    }
    script[digest] = text.get<std::string>();
  }
  std::optional<std::string> fallback;
  if (j.contains("fallback")) fallback = j["fallback"].get<std::string>();
  const std::string name = j.value("name", std::string("scripted"));
  const int parallel = j.value("max_parallel", 1);
  if (parallel < 1) {
    throw Error(ErrorKind::Config, "script file: max_parallel must be >= 1");
  }
  return std::make_shared<ScriptedBackend>(std::move(script),
                                           std::move(fallback), name, parallel);
}

// ----- prompt-flow evaluation with a bounded worker pool -----

std::vector<ExampleRow> evaluate_prompt_round(
    const PromptTemplate& tmpl, std::span<const LabeledExample> demos,
    std::span<const LabeledExample> test, std::size_t budget, Backend& backend,
    std::size_t shots, std::size_t round, RecordWriter& writer) {
  const std::size_t n = test.size();
  std::vector<std::optional<ExampleRow>> slots(n);
  std::mutex mu;
  std::condition_variable cv;
  bool failed = false;
  ErrorKind fail_kind = ErrorKind::Internal;
  std::string fail_msg;
  std::atomic<std::size_t> next{0};

  auto process = [&](std::size_t i) {
    const LabeledExample& ex = test[i];
    AssembledPrompt prompt = truncate_to_budget(tmpl, ex.claim, demos, budget);
    GenerationResult gen = backend.generate(prompt);
    ExampleRow row;
    row.claim_id = ex.claim.id;
    row.prompt_sha = prompt_digest(prompt.text);
    row.raw_output = gen.text;
    row.predicted = map_output(gen.text);
    row.gold = ex.label;
    return row;
  };

  auto record_failure = [&](ErrorKind kind, std::size_t i,
                            const char* what) {
    std::lock_guard lk(mu);
    if (!failed) {
      failed = true;
      fail_kind = kind;
      fail_msg = "example " + test[i].claim.id + " (index " +
                 std::to_string(i) + "): " + what;
    }
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard lk(mu);
        if (failed) return;
      }
      try {
        ExampleRow row = process(i);
        std::lock_guard lk(mu);
        slots[i] = std::move(row);
      } catch (const Error& e) {
        record_failure(e.kind(), i, e.what());
      } catch (const std::exception& e) {
        record_failure(ErrorKind::Internal, i, e.what());
      } catch (...) {
        record_failure(ErrorKind::Internal, i, "unknown exception");
      }
      cv.notify_all();
    }
  };

  const int declared = std::max(1, backend.max_parallel());
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(declared),
                            std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);

  // Coordinator: flush the contiguous ready prefix so the record on disk
  // is ordered by example index and survives an abort mid-round.
  std::vector<ExampleRow> rows;
  rows.reserve(n);
  {
    std::unique_lock lk(mu);
    std::size_t flushed = 0;
    while (flushed < n) {
      cv.wait(lk, [&] { return failed || slots[flushed].has_value(); });
      if (slots[flushed].has_value()) {
        while (flushed < n && slots[flushed].has_value()) {
          rows.push_back(std::move(*slots[flushed]));
          slots[flushed].reset();
          ++flushed;
          lk.unlock();
          writer.line(row_json(shots, round, rows.back()));
          lk.lock();
        }
      } else {
        break;  // failed and the next slot will never arrive
      }
    }
  }
  for (std::thread& t : pool) t.join();
  {
    std::lock_guard lk(mu);
    if (failed) throw Error(fail_kind, fail_msg);
  }
  return rows;
}

RoundResult finish_round(std::uint32_t seed, std::vector<ExampleRow> rows) {
  RoundResult rr;
  rr.seed = seed;
  std::vector<Label> preds;
  std::vector<Label> gold;
  preds.reserve(rows.size());
  gold.reserve(rows.size());
  for (const ExampleRow& row : rows) {
    preds.push_back(row.predicted);
    gold.push_back(row.gold);
  }
  rr.cm = confusion(preds, gold);
  rr.metrics = report(rr.cm);
  rr.rows = std::move(rows);
  return rr;
}

MetricsReport cell_average(const CellResult& cell, AveragingMode mode) {
  if (mode == AveragingMode::PerRound) {
    std::vector<MetricsReport> reports;
    reports.reserve(cell.rounds.size());
    for (const RoundResult& rr : cell.rounds) reports.push_back(rr.metrics);
    return average_rounds(reports);
  }
  ConfusionMatrix total;
  for (const RoundResult& rr : cell.rounds) {
    total.tp += rr.cm.tp;
    total.fp += rr.cm.fp;
    total.fn += rr.cm.fn;
    total.tn += rr.cm.tn;
  }
  return report(total);
}

// Rows for generators that classify the claim directly (baselines and
// tuned checkpoints). The "prompt" the generator saw is the claim text
// itself, and the stored raw output is the literal label word, so the
// verbalizer consistency re-check holds by construction.
std::vector<ExampleRow> direct_rows(
    std::span<const LabeledExample> test,
    const std::function<Label(std::size_t, const LabeledExample&)>& predict,
    std::size_t shots, std::size_t round, RecordWriter& writer) {
  std::vector<ExampleRow> rows;
  rows.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const LabeledExample& ex = test[i];
    ExampleRow row;
    row.claim_id = ex.claim.id;
    row.prompt_sha = prompt_digest(ex.claim.text);
    row.predicted = predict(i, ex);
    row.raw_output = std::string(to_string(row.predicted));
    row.gold = ex.label;
    writer.line(row_json(shots, round, row));
    rows.push_back(std::move(row));
  }
  return rows;
}

PromptTemplate resolve_template(const ExperimentConfig& config) {
  if (config.template_kind.tag == TemplateKind::Tag::Custom) {
    return load_template_file(config.template_file,
                              config.template_kind.custom_name);
  }
  return builtin_template(config.template_kind);
}

std::string baseline_display_name(const std::string& name) {
  if (name == "majority") return "Majority";
  if (name == "random") return "Random";
  return "N-grams";
}

void verify_rows(const RunRecord& record) {
  for (const CellResult& cell : record.cells) {
    for (const RoundResult& rr : cell.rounds) {
      for (const ExampleRow& row : rr.rows) {
        if (map_output(row.raw_output) != row.predicted) {
          throw Error(ErrorKind::Internal,
                      "stored label disagrees with the verbalizer for claim " +
                          row.claim_id + " in run " + record.name);
        }
      }
    }
  }
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(const std::string& line,
                                   std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += ch;
      }
    } else if (ch == '"' && current.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  if (quoted) {
    throw Error(ErrorKind::Config,
                "unterminated quote at line " + std::to_string(line_no));
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::Config, "cannot write " + path.string());
  }
  out << content;
  out.flush();
  if (!out) {
    throw Error(ErrorKind::Internal, "write failed: " + path.string());
  }
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config) {
  config.validate();

  std::vector<LabeledExample> train;
  if (!config.train_path.empty()) train = load_split(config.train_path);
  std::vector<LabeledExample> test = load_split(config.test_path);

  RunRecord record;
  record.name = config.name;
  record.config_snapshot = experiment_config_json(config);
  record.started_at = iso_utc_now();

  const fs::path dir = config.output_dir / config.name;
  fs::create_directories(dir / "charts");
  RecordWriter writer(dir / "record.jsonl");

  const bool prompt_flow =
      config.backend_kind == ExperimentBackendKind::Http ||
      config.backend_kind == ExperimentBackendKind::Scripted;

  BackendPtr backend;
  const CachedBackend* cached = nullptr;
  std::optional<Checkpoint> checkpoint;
  MajorityModel majority;
  NgramModel ngram;

  if (prompt_flow) {
    BackendPtr inner =
        config.backend_kind == ExperimentBackendKind::Http
            ? BackendPtr(std::make_shared<HttpBackend>(config.http))
            : make_scripted_backend(config.script_file);
    record.model_label = inner->model_name();
    record.condition_prefix = to_string(config.template_kind);
    record.shots_in_condition = true;
    if (!config.cache_path.empty()) {
      auto wrapped =
          std::make_shared<CachedBackend>(std::move(inner), config.cache_path);
      cached = wrapped.get();
      backend = std::move(wrapped);
    } else {
      backend = std::move(inner);
    }
  } else if (config.backend_kind == ExperimentBackendKind::Baseline) {
    record.model_label = baseline_display_name(config.baseline_name);
    record.condition_prefix = "-";
    record.shots_in_condition = false;
    if (config.baseline_name == "majority") {
      majority = majority_fit(train);
    } else if (config.baseline_name == "ngram") {
      ngram = ngram_fit(train);
    }
  } else {
    checkpoint = load_checkpoint(config.checkpoint_path);
    const std::string requested = to_string(config.template_kind);
    if (checkpoint->template_tag != requested) {
      throw Error(ErrorKind::Config,
                  "checkpoint was trained for template \"" +
                      checkpoint->template_tag + "\" but the config requests \"" +
                      requested + "\"");
    }
    if (checkpoint->sp.prefix_len() >= checkpoint->lm.config.context_len) {
      throw Error(ErrorKind::Config,
                  "checkpoint prefix fills the whole model context");
    }
    record.model_label =
        "soft-prompt(p=" + std::to_string(checkpoint->sp.prefix_len()) + ")";
    record.condition_prefix = checkpoint->template_tag;
    record.shots_in_condition = false;
  }

  writer.line(json{{"type", "config"},
                   {"version", 1},
                   {"name", record.name},
                   {"model_label", record.model_label},
                   {"condition_prefix", record.condition_prefix},
                   {"shots_in_condition", record.shots_in_condition},
                   {"started_at", record.started_at},
                   {"config", config_to_json(config)}});

  if (prompt_flow) {
    const PromptTemplate tmpl = resolve_template(config);
    for (std::size_t shots : config.shot_counts) {
      CellResult cell;
      cell.shots = shots;
      for (std::size_t r = 0; r < config.rounds; ++r) {
        std::vector<LabeledExample> demos;
        if (shots > 0) {
          demos = sample_demonstrations(train, shots, config.seeds[r],
                                        config.stratified_demos);
        }
        std::vector<ExampleRow> rows =
            evaluate_prompt_round(tmpl, demos, test, config.token_budget,
                                  *backend, shots, r, writer);
        RoundResult rr = finish_round(config.seeds[r], std::move(rows));
        writer.line(round_json(shots, r, rr));
        cell.rounds.push_back(std::move(rr));
      }
      cell.averaged = cell_average(cell, config.averaging);
      writer.line(cell_json(cell));
      record.cells.push_back(std::move(cell));
    }
    if (cached != nullptr) {
      record.backend_calls = cached->miss_count();
      record.cache_hits = cached->hit_count();
    } else {
      record.backend_calls =
          config.shot_counts.size() * config.rounds * test.size();
    }
  } else {
    // Baselines and checkpoints classify the claim directly; the shot sweep
    // does not apply, so the run is a single cell.
    CellResult cell;
    cell.shots = 0;
    std::vector<Label> random_round;
    for (std::size_t r = 0; r < config.rounds; ++r) {
      std::function<Label(std::size_t, const LabeledExample&)> predict;
      if (config.backend_kind == ExperimentBackendKind::Checkpoint) {
        predict = [&](std::size_t, const LabeledExample& ex) {
          const std::size_t budget = checkpoint->lm.config.context_len -
                                     checkpoint->sp.prefix_len();
          std::vector<std::size_t> ids = byte_tokenize(ex.claim.text, budget);
          return classify_with_prefix(checkpoint->lm, checkpoint->sp, ids);
        };
      } else if (config.baseline_name == "majority") {
        predict = [&](std::size_t, const LabeledExample& ex) {
          return majority_predict(majority, ex.claim.text);
        };
      } else if (config.baseline_name == "ngram") {
        predict = [&](std::size_t, const LabeledExample& ex) {
          return ngram_predict(ngram, ex.claim.text);
        };
      } else {
        random_round = random_predict(config.seeds[r], test.size());
        predict = [&](std::size_t i, const LabeledExample&) {
          return random_round[i];
        };
      }
      std::vector<ExampleRow> rows = direct_rows(test, predict, 0, r, writer);
      RoundResult rr = finish_round(config.seeds[r], std::move(rows));
      writer.line(round_json(0, r, rr));
      cell.rounds.push_back(std::move(rr));
    }
    cell.averaged = cell_average(cell, config.averaging);
    writer.line(cell_json(cell));
    record.cells.push_back(std::move(cell));
  }

  record.finished_at = iso_utc_now();
  writer.line(json{{"type", "done"},
                   {"finished_at", record.finished_at},
                   {"backend_calls", record.backend_calls},
                   {"cache_hits", record.cache_hits}});

  const std::span<const RunRecord> one(&record, 1);
  emit_report(one, dir);
  emit_charts(one, dir / "charts");
  return record;
}

void dry_run(const ExperimentConfig& config, std::ostream& out) {
  config.validate();
  if (config.backend_kind == ExperimentBackendKind::Baseline ||
      config.backend_kind == ExperimentBackendKind::Checkpoint) {
    out << "(no prompts: this backend kind classifies claims directly)\n";
    return;
  }
  std::vector<LabeledExample> train;
  if (!config.train_path.empty()) train = load_split(config.train_path);
  const std::vector<LabeledExample> test = load_split(config.test_path);
  const PromptTemplate tmpl = resolve_template(config);

  for (std::size_t shots : config.shot_counts) {
    for (std::size_t r = 0; r < config.rounds; ++r) {
      std::vector<LabeledExample> demos;
      if (shots > 0) {
        demos = sample_demonstrations(train, shots, config.seeds[r],
                                      config.stratified_demos);
      }
      for (const LabeledExample& ex : test) {
        const AssembledPrompt prompt =
            truncate_to_budget(tmpl, ex.claim, demos, config.token_budget);
        out << "=== shots=" << shots << " round=" << r
            << " claim=" << ex.claim.id
            << " sha256=" << prompt_digest(prompt.text) << " ===\n"
            << prompt.text << "\n\n";
      }
    }
  }
}

std::string render_report(std::span<const RunRecord> records,
                          ReportStyle style) {
  if (records.empty()) {
    throw Error(ErrorKind::Validation, "no records to report");
  }
  for (const RunRecord& record : records) verify_rows(record);

  std::string out;
  if (style == ReportStyle::Markdown) {
    out += "| Model | Template/Demonstration | F1 | Recall | Precision | "
           "Accuracy |\n";
    out += "| --- | --- | --- | --- | --- | --- |\n";
    for (const RunRecord& record : records) {
      for (const CellResult& cell : record.cells) {
        out += "| " + record.model_label + " | " +
               condition_label(record, cell) + " | " +
               render4(cell.averaged.f1) + " | " +
               render4(cell.averaged.recall) + " | " +
               render4(cell.averaged.precision) + " | " +
               render4(cell.averaged.accuracy) + " |\n";
      }
    }
  } else {
    out += "model,template_demonstration,f1,recall,precision,accuracy\n";
    for (const RunRecord& record : records) {
      for (const CellResult& cell : record.cells) {
        out += csv_escape(record.model_label) + "," +
               csv_escape(condition_label(record, cell)) + "," +
               render4(cell.averaged.f1) + "," +
               render4(cell.averaged.recall) + "," +
               render4(cell.averaged.precision) + "," +
               render4(cell.averaged.accuracy) + "\n";
      }
    }
  }
  return out;
}

void emit_report(std::span<const RunRecord> records, const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file(dir / "report.md",
                  render_report(records, ReportStyle::Markdown));
  write_text_file(dir / "metrics.csv",
                  render_report(records, ReportStyle::Csv));
}

std::vector<ChartRow> chart_rows(std::span<const RunRecord> records) {
  if (records.empty()) {
    throw Error(ErrorKind::Validation, "no records to chart");
  }
  std::vector<ChartRow> rows;
  for (const RunRecord& record : records) {
    for (const CellResult& cell : record.cells) {
      const std::string condition = condition_label(record, cell);
      const double values[4] = {cell.averaged.f1, cell.averaged.recall,
                                cell.averaged.precision,
                                cell.averaged.accuracy};
      for (int m = 0; m < 4; ++m) {
        rows.push_back(
            {kMetricNames[m], record.model_label, condition, values[m]});
      }
    }
  }
  return rows;
}

void write_chart_data_csv(std::span<const ChartRow> rows,
                          const fs::path& path) {
  std::string out = "metric,model,condition,value\n";
  for (const ChartRow& row : rows) {
    out += csv_escape(row.metric) + "," + csv_escape(row.model) + "," +
           csv_escape(row.condition) + "," + canonical_double(row.value) +
           "\n";
  }
  write_text_file(path, out);
}

std::vector<ChartRow> parse_chart_data_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Config, "cannot open chart data: " + path.string());
  }
  std::vector<ChartRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "metric,model,condition,value") {
        throw Error(ErrorKind::Config,
                    "chart data: unexpected header in " + path.string());
      }
      continue;
    }
    if (line.empty()) continue;
    const std::vector<std::string> fields = csv_split(line, line_no);
    if (fields.size() != 4) {
      throw Error(ErrorKind::Config,
                  "chart data: expected 4 fields at line " +
                      std::to_string(line_no));
    }
    char* end = nullptr;
    const double value = std::strtod(fields[3].c_str(), &end);
    if (end == fields[3].c_str() || *end != '\0') {
      throw Error(ErrorKind::Config,
                  "chart data: bad value at line " + std::to_string(line_no));
    }
    rows.push_back({fields[0], fields[1], fields[2], value});
  }
  return rows;
}

std::string render_bar_chart_svg(std::span<const ChartRow> rows,
                                 std::string_view metric) {
  constexpr const char* kPalette[8] = {"#4878A8", "#E08A3C", "#6AA84F",
                                       "#A64D79", "#8E7CC3", "#C27BA0",
                                       "#76A5AF", "#B45309"};
  const int margin_l = 70;
  const int margin_r = 30;
  const int margin_t = 50;
  const int plot_h = 300;
  const int bar_w = 40;
  const int in_gap = 6;
  const int group_gap = 40;

  auto append_unique = [](std::vector<std::string>& list,
                          const std::string& item) {
    if (std::find(list.begin(), list.end(), item) == list.end()) {
      list.push_back(item);
    }
  };

  std::vector<std::string> models_all;
  std::vector<std::string> models_with;
  std::vector<std::string> conditions;
  std::map<std::pair<std::string, std::string>, double> values;
  for (const ChartRow& row : rows) {
    append_unique(models_all, row.model);
    if (row.metric != metric) continue;
    append_unique(models_with, row.model);
    append_unique(conditions, row.condition);
    values[{row.model, row.condition}] = row.value;
  }
  std::vector<std::string> omitted;
  for (const std::string& model : models_all) {
    if (std::find(models_with.begin(), models_with.end(), model) ==
        models_with.end()) {
      omitted.push_back(model);
    }
  }

  const int series = static_cast<int>(models_with.size());
  const int groups = static_cast<int>(conditions.size());
  const int group_w = series > 0 ? series * bar_w + (series - 1) * in_gap : 0;
  const int plot_w =
      std::max(groups > 0 ? groups * group_w + (groups - 1) * group_gap : 0,
               240);
  const int legend_entries =
      static_cast<int>(models_with.size() + omitted.size());
  const int legend_h = legend_entries * 18 + 10;
  const int width = margin_l + plot_w + margin_r;
  const int height = margin_t + plot_h + 40 + legend_h + 10;

  auto num = [](long long v) { return std::to_string(v); };
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
         "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) +
         " " + num(height) + "\">\n";
  svg += "<style>text{font-family:monospace;fill:#222}</style>\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + num(width / 2) +
         "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" +
         xml_escape(metric) + "</text>\n";

  static const char* kTickLabels[5] = {"0.00", "0.25", "0.50", "0.75",
                                       "1.00"};
  for (int i = 0; i <= 4; ++i) {
    const int y = margin_t + plot_h - plot_h * i / 4;
    svg += "<line x1=\"" + num(margin_l) + "\" y1=\"" + num(y) + "\" x2=\"" +
           num(margin_l + plot_w) + "\" y2=\"" + num(y) +
           "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + num(margin_l - 8) + "\" y=\"" + num(y + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + kTickLabels[i] +
           "</text>\n";
  }
  svg += "<line x1=\"" + num(margin_l) + "\" y1=\"" + num(margin_t) +
         "\" x2=\"" + num(margin_l) + "\" y2=\"" + num(margin_t + plot_h) +
         "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  if (models_with.empty()) {
    svg += "<text x=\"" + num(margin_l + plot_w / 2) + "\" y=\"" +
           num(margin_t + plot_h / 2) +
           "\" text-anchor=\"middle\" font-size=\"13\">no data</text>\n";
  }

  for (int gi = 0; gi < groups; ++gi) {
    const int group_x = margin_l + gi * (group_w + group_gap);
    for (int si = 0; si < series; ++si) {
      const auto it = values.find({models_with[si], conditions[gi]});
      if (it == values.end()) continue;
      const double v = std::clamp(it->second, 0.0, 1.0);
      const int h = static_cast<int>(std::llround(v * plot_h));
      const int x = group_x + si * (bar_w + in_gap);
      const int y = margin_t + plot_h - h;
      svg += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" +
             num(bar_w) + "\" height=\"" + num(h) + "\" fill=\"" +
             kPalette[si % 8] + "\"/>\n";
      svg += "<text x=\"" + num(x + bar_w / 2) + "\" y=\"" + num(y - 4) +
             "\" text-anchor=\"middle\" font-size=\"9\">" + render4(v) +
             "</text>\n";
    }
    svg += "<text x=\"" + num(group_x + group_w / 2) + "\" y=\"" +
           num(margin_t + plot_h + 20) +
           "\" text-anchor=\"middle\" font-size=\"11\">" +
           xml_escape(conditions[gi]) + "</text>\n";
  }

  const int legend_y0 = margin_t + plot_h + 44;
  int entry = 0;
  for (int si = 0; si < series; ++si, ++entry) {
    const int y = legend_y0 + entry * 18;
    svg += "<rect x=\"" + num(margin_l) + "\" y=\"" + num(y - 10) +
           "\" width=\"12\" height=\"12\" fill=\"" + kPalette[si % 8] +
           "\"/>\n";
    svg += "<text x=\"" + num(margin_l + 18) + "\" y=\"" + num(y) +
           "\" font-size=\"11\">" + xml_escape(models_with[si]) + "</text>\n";
  }
  for (const std::string& model : omitted) {
    const int y = legend_y0 + entry * 18;
    ++entry;
    svg += "<text x=\"" + num(margin_l) + "\" y=\"" + num(y) +
           "\" font-size=\"11\" fill=\"#888888\">(no " + xml_escape(metric) +
           " data: " + xml_escape(model) + ")</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_charts(std::span<const RunRecord> records,
                 const fs::path& charts_dir) {
  fs::create_directories(charts_dir);
  const std::vector<ChartRow> rows = chart_rows(records);
  write_chart_data_csv(rows, charts_dir / "data.csv");
  const std::vector<ChartRow> parsed =
      parse_chart_data_csv(charts_dir / "data.csv");
  for (const char* metric : kMetricNames) {
    write_text_file(charts_dir / (std::string(metric) + ".svg"),
                    render_bar_chart_svg(parsed, metric));
  }
}

RunRecord load_run_record(const fs::path& record_jsonl) {
  std::ifstream in(record_jsonl, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Config,
                "cannot open record: " + record_jsonl.string());
  }

  RunRecord record;
  bool saw_config = false;
  bool saw_done = false;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<ExampleRow>>
      rows_by_round;
  std::map<std::size_t, std::vector<RoundResult>> rounds_by_shots;
  std::vector<CellResult> cells;

  auto parse_line_label = [&](const json& j, const char* key,
                              std::size_t line_no) {
    const std::optional<Label> label =
        parse_label(j.at(key).get<std::string>());
    if (!label) {
      throw Error(ErrorKind::Config, "record: bad label at line " +
                                         std::to_string(line_no));
    }
    return *label;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Config,
                  "record: invalid JSON at line " + std::to_string(line_no) +
                      " of " + record_jsonl.string() + ": " + e.what());
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (type == "config") {
        saw_config = true;
        record.name = j.at("name").get<std::string>();
        record.model_label = j.at("model_label").get<std::string>();
        record.condition_prefix = j.at("condition_prefix").get<std::string>();
        record.shots_in_condition = j.at("shots_in_condition").get<bool>();
        record.started_at = j.at("started_at").get<std::string>();
        record.config_snapshot = j.at("config").dump();
      } else if (type == "example") {
        ExampleRow row;
        row.claim_id = j.at("claim_id").get<std::string>();
        row.prompt_sha = j.at("prompt_sha").get<std::string>();
        row.raw_output = j.at("raw_output").get<std::string>();
        row.predicted = parse_line_label(j, "predicted", line_no);
        row.gold = parse_line_label(j, "gold", line_no);
        rows_by_round[{j.at("shots").get<std::size_t>(),
                       j.at("round").get<std::size_t>()}]
            .push_back(std::move(row));
      } else if (type == "round") {
        RoundResult rr;
        rr.seed = j.at("seed").get<std::uint32_t>();
        rr.cm.tp = j.at("tp").get<std::size_t>();
        rr.cm.fp = j.at("fp").get<std::size_t>();
        rr.cm.fn = j.at("fn").get<std::size_t>();
        rr.cm.tn = j.at("tn").get<std::size_t>();
        rr.metrics.f1 = j.at("f1").get<double>();
        rr.metrics.recall = j.at("recall").get<double>();
        rr.metrics.precision = j.at("precision").get<double>();
        rr.metrics.accuracy = j.at("accuracy").get<double>();
        const std::size_t shots = j.at("shots").get<std::size_t>();
        const std::size_t round = j.at("round").get<std::size_t>();
        rr.rows = std::move(rows_by_round[{shots, round}]);
        rows_by_round.erase({shots, round});
        rounds_by_shots[shots].push_back(std::move(rr));
      } else if (type == "cell") {
        CellResult cell;
        cell.shots = j.at("shots").get<std::size_t>();
        cell.averaged.f1 = j.at("f1").get<double>();
        cell.averaged.recall = j.at("recall").get<double>();
        cell.averaged.precision = j.at("precision").get<double>();
        cell.averaged.accuracy = j.at("accuracy").get<double>();
        cell.rounds = std::move(rounds_by_shots[cell.shots]);
        rounds_by_shots.erase(cell.shots);
        cells.push_back(std::move(cell));
      } else if (type == "done") {
        saw_done = true;
        record.finished_at = j.at("finished_at").get<std::string>();
        record.backend_calls = j.at("backend_calls").get<std::size_t>();
        record.cache_hits = j.at("cache_hits").get<std::size_t>();
      } else {
        throw Error(ErrorKind::Config, "record: unknown line type \"" + type +
                                           "\" at line " +
                                           std::to_string(line_no));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Config,
                  "record: missing or mistyped field at line " +
                      std::to_string(line_no) + ": " + e.what());
    }
  }

  if (!saw_config) {
    throw Error(ErrorKind::Config,
                "record has no config line: " + record_jsonl.string());
  }
  if (!saw_done) {
    throw Error(ErrorKind::Config,
                "record is incomplete (no done line): " +
                    record_jsonl.string());
  }
  record.cells = std::move(cells);
  return record;
}

}  // namespace claimworthy
