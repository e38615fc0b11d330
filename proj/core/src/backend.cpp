#include "claimworthy/backend.hpp"

#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "claimworthy/digest.hpp"
#include "claimworthy/error.hpp"

namespace claimworthy {

void BackendConfig::validate() const {
  if (base_url.empty()) {
    throw Error(ErrorKind::Config, "backend base_url is empty");
  }
  if (model_name.empty()) {
    throw Error(ErrorKind::Config, "backend model_name is empty");
  }
  if (temperature < 0.0) {
    throw Error(ErrorKind::Config, "temperature must be >= 0");
  }
  if (max_new_tokens <= 0) {
    throw Error(ErrorKind::Config, "max_new_tokens must be positive");
  }
  if (max_retries < 0 || max_retries > 8) {
    throw Error(ErrorKind::Config, "max_retries must be in [0, 8]");
  }
  if (max_parallel < 1) {
    throw Error(ErrorKind::Config, "max_parallel must be >= 1");
  }
  if (timeout_ms <= 0 || retry_base_ms <= 0 || retry_cap_ms < retry_base_ms) {
    throw Error(ErrorKind::Config, "invalid timeout/backoff configuration");
  }
}

// ----- ScriptedBackend -----

ScriptedBackend::ScriptedBackend(std::map<std::string, std::string> script,
                                 std::optional<std::string> fallback,
                                 std::string name, int parallel)
    : script_(std::move(script)),
      fallback_(std::move(fallback)),
      name_(std::move(name)),
      parallel_(parallel < 1 ? 1 : parallel) {}

GenerationResult ScriptedBackend::generate(const AssembledPrompt& prompt) {
  const std::string digest = prompt_digest(prompt.text);
  std::string response;
  {
    std::lock_guard lock(mutex_);
    received_.push_back(prompt.text);
    const auto it = script_.find(digest);
    if (it != script_.end()) {
      response = it->second;
    } else if (fallback_) {
      response = *fallback_;
    } else {
      throw Error(ErrorKind::Backend,
                  "scripted backend has no response for prompt digest " +
                      digest + " and no fallback");
    }
  }
  GenerationResult result;
  result.text = std::move(response);
  result.latency_ms = 0;
  result.attempt_count = 1;
  result.from_cache = false;
  return result;
}

std::vector<std::string> ScriptedBackend::received_prompts() const {
  std::lock_guard lock(mutex_);
  return received_;
}

std::size_t ScriptedBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return received_.size();
}

// ----- CachedBackend -----

CachedBackend::CachedBackend(BackendPtr inner, std::filesystem::path cache_path)
    : inner_(std::move(inner)), cache_path_(std::move(cache_path)) {
  if (cache_path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(cache_path_.parent_path(), ec);
  }
  std::ifstream in(cache_path_, std::ios::binary);
  if (!in) return;  // no cache yet
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("key") ||
        !record.contains("response") || !record.contains("model") ||
        !record.contains("prompt_sha")) {
      throw Error(ErrorKind::Cache, "corrupt cache record at " +
                                        cache_path_.string() + ":" +
                                        std::to_string(line_no));
    }
    entries_[record["key"].get<std::string>()] =
        record["response"].get<std::string>();
  }
}

GenerationResult CachedBackend::generate(const AssembledPrompt& prompt) {
  const std::string key =
      cache_key(inner_->model_name(), inner_->temperature(), prompt.text);
  {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(key);
    if (it != entries_.end()) {
      ++hits_;
      GenerationResult result;
      result.text = it->second;
      result.latency_ms = 0;
      result.attempt_count = 0;
      result.from_cache = true;
      return result;
    }
  }
  GenerationResult result = inner_->generate(prompt);
  {
    std::lock_guard lock(mutex_);
    ++misses_;
    // Another worker may have raced the same prompt; last write wins and
    // both wrote the same deterministic response.
    entries_[key] = result.text;
    append_record(key, prompt.text, result.text);
  }
  return result;
}

void CachedBackend::append_record(const std::string& key,
                                  const std::string& prompt_text,
                                  const std::string& response) {
  nlohmann::json record = {
      {"key", key},
      {"model", inner_->model_name()},
      {"temperature", inner_->temperature()},
      {"prompt_sha", prompt_digest(prompt_text)},
      {"response", response},
      {"timestamp",
       std::chrono::duration_cast<std::chrono::milliseconds>(
           std::chrono::system_clock::now().time_since_epoch())
           .count()},
  };
  std::ofstream out(cache_path_, std::ios::binary | std::ios::app);
  if (!out) {
    throw Error(ErrorKind::Cache,
                "cannot append to cache file " + cache_path_.string());
  }
  out << record.dump() << '\n';
  out.flush();
  if (!out) {
    throw Error(ErrorKind::Cache,
                "short write to cache file " + cache_path_.string());
  }
}

std::size_t CachedBackend::hit_count() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t CachedBackend::miss_count() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

}  // namespace claimworthy
