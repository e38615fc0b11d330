#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "claimworthy/prompt.hpp"

namespace claimworthy {

struct BackendConfig {
  std::string base_url;
  std::string model_name;
  double temperature = 0.0;  // deterministic by default
  int max_new_tokens = 16;
  int timeout_ms = 30000;
  int max_retries = 3;   // capped at 8
  int max_parallel = 4;  // >= 1
  // Full-jitter exponential backoff parameters; defaults 500 ms base, 16 s
  // cap. Overridable so tests can run fast.
  int retry_base_ms = 500;
  int retry_cap_ms = 16000;

  void validate() const;
};

struct GenerationResult {
  std::string text;
  std::int64_t latency_ms = 0;
  int attempt_count = 0;  // >= 1 unless from_cache
  bool from_cache = false;
};

// Text-in/text-out generator. Implementations must be safe to share across
// a bounded pool of concurrent workers.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual GenerationResult generate(const AssembledPrompt& prompt) = 0;

  // Identity used for cache keys.
  virtual std::string model_name() const = 0;
  virtual double temperature() const = 0;

  // Upper bound on concurrent generate() calls the caller should issue.
  virtual int max_parallel() const { return 1; }
};

using BackendPtr = std::shared_ptr<Backend>;

// Deterministic backend keyed by exact prompt digest; unknown digests fall
// back to `fallback` when set, otherwise raise. Records every received
// prompt for assertions.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::map<std::string, std::string> script = {},
                           std::optional<std::string> fallback = std::nullopt,
                           std::string name = "scripted", int parallel = 1);

  GenerationResult generate(const AssembledPrompt& prompt) override;
  std::string model_name() const override { return name_; }
  double temperature() const override { return 0.0; }
  int max_parallel() const override { return parallel_; }

  std::vector<std::string> received_prompts() const;
  std::size_t call_count() const;

 private:
  std::map<std::string, std::string> script_;
  std::optional<std::string> fallback_;
  std::string name_;
  int parallel_ = 1;
  mutable std::mutex mutex_;
  std::vector<std::string> received_;
};

// Append-only JSONL response cache in front of another backend. Keys are
// cache_key(model, temperature, prompt text); a hit returns the stored text
// with from_cache=true and no inner call. Any malformed record fails loudly.
class CachedBackend : public Backend {
 public:
  CachedBackend(BackendPtr inner, std::filesystem::path cache_path);

  GenerationResult generate(const AssembledPrompt& prompt) override;
  std::string model_name() const override { return inner_->model_name(); }
  double temperature() const override { return inner_->temperature(); }
  int max_parallel() const override { return inner_->max_parallel(); }

  std::size_t hit_count() const;
  std::size_t miss_count() const;

 private:
  void append_record(const std::string& key, const std::string& prompt_text,
                     const std::string& response);

  BackendPtr inner_;
  std::filesystem::path cache_path_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

// Chat-completions client over HTTP(S). POSTs to
// {base_url}/v1/chat/completions with the prompt as a single user message,
// retries transport errors and 429/5xx with full-jitter backoff, and honours
// the max_parallel semaphore. Reads LLM_API_KEY for the bearer token.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig config);
  ~HttpBackend() override;

  GenerationResult generate(const AssembledPrompt& prompt) override;
  std::string model_name() const override { return config_.model_name; }
  double temperature() const override { return config_.temperature; }
  int max_parallel() const override { return config_.max_parallel; }

  const BackendConfig& config() const { return config_; }

 private:
  struct Impl;
  BackendConfig config_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace claimworthy
