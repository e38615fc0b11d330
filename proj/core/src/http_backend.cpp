#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "claimworthy/backend.hpp"
#include "claimworthy/error.hpp"

namespace claimworthy {

namespace {

struct ParsedUrl {
  std::string scheme_host_port;  // what httplib::Client wants
  std::string path_prefix;       // "" or "/gateway"
};

ParsedUrl parse_base_url(const std::string& base_url) {
  const std::size_t scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::Config,
                "base_url must start with http:// or https://: " + base_url);
  }
  const std::size_t path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl parsed;
  if (path_start == std::string::npos) {
    parsed.scheme_host_port = base_url;
  } else {
    parsed.scheme_host_port = base_url.substr(0, path_start);
    parsed.path_prefix = base_url.substr(path_start);
    while (parsed.path_prefix.ends_with('/')) parsed.path_prefix.pop_back();
  }
  return parsed;
}

// Counting semaphore with a runtime limit.
class BoundedGate {
 public:
  explicit BoundedGate(int limit) : available_(limit) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
};

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status <= 599);
}

}  // namespace

struct HttpBackend::Impl {
  ParsedUrl url;
  BoundedGate gate;
  std::string api_key;
  std::mt19937 jitter;
  std::mutex jitter_mutex;

  Impl(const BackendConfig& config)
      : url(parse_base_url(config.base_url)),
        gate(config.max_parallel),
        jitter(std::random_device{}()) {
    if (const char* key = std::getenv("LLM_API_KEY")) api_key = key;
  }

  std::int64_t backoff_ms(int attempt, const BackendConfig& config) {
    // Full jitter: uniform in [0, min(cap, base * 2^(attempt-1))].
    double ceiling = static_cast<double>(config.retry_base_ms);
    for (int i = 1; i < attempt; ++i) ceiling *= 2.0;
    ceiling = std::min(ceiling, static_cast<double>(config.retry_cap_ms));
    std::lock_guard lock(jitter_mutex);
    const double unit =
        static_cast<double>(jitter()) / 4294967296.0;  // [0, 1)
    return static_cast<std::int64_t>(unit * ceiling);
  }
};

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
  impl_ = std::make_unique<Impl>(config_);
}

HttpBackend::~HttpBackend() = default;

GenerationResult HttpBackend::generate(const AssembledPrompt& prompt) {
  if (prompt.text.empty()) {
    throw Error(ErrorKind::Validation, "refusing to send an empty prompt");
  }
  const nlohmann::json body = {
      {"model", config_.model_name},
      {"messages",
       nlohmann::json::array(
           {{{"role", "user"}, {"content", prompt.text}}})},
      {"temperature", config_.temperature},
      {"max_tokens", config_.max_new_tokens},
  };
  const std::string payload = body.dump();
  const std::string path = impl_->url.path_prefix + "/v1/chat/completions";

  impl_->gate.acquire();
  struct GateRelease {
    BoundedGate& gate;
    ~GateRelease() { gate.release(); }
  } release{impl_->gate};

  const auto started = std::chrono::steady_clock::now();
  std::string last_failure = "no attempt made";
  int attempts = 0;
  while (attempts <= config_.max_retries) {
    ++attempts;
    httplib::Client client(impl_->url.scheme_host_port);
    client.set_connection_timeout(0, config_.timeout_ms * 1000LL);
    client.set_read_timeout(0, config_.timeout_ms * 1000LL);
    client.set_write_timeout(0, config_.timeout_ms * 1000LL);
    httplib::Headers headers;
    if (!impl_->api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + impl_->api_key);
    }
    httplib::Result response =
        client.Post(path, headers, payload, "application/json");

    if (!response) {
      last_failure =
          std::string("transport error: ") + httplib::to_string(response.error());
    } else if (response->status == 200) {
      nlohmann::json doc = nlohmann::json::parse(response->body, nullptr, false);
      if (doc.is_discarded()) {
        throw Error(ErrorKind::Protocol,
                    "backend returned non-JSON body for " + path);
      }
      if (!doc.contains("choices") || !doc["choices"].is_array() ||
          doc["choices"].empty() ||
          !doc["choices"][0].contains("message") ||
          !doc["choices"][0]["message"].contains("content") ||
          !doc["choices"][0]["message"]["content"].is_string()) {
        throw Error(ErrorKind::Protocol,
                    "response is missing choices[0].message.content");
      }
      GenerationResult result;
      result.text = doc["choices"][0]["message"]["content"].get<std::string>();
      result.attempt_count = attempts;
      result.from_cache = false;
      result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
      return result;
    } else if (retryable_status(response->status)) {
      last_failure = "HTTP " + std::to_string(response->status);
    } else {
      throw Error(ErrorKind::Request,
                  "HTTP " + std::to_string(response->status) + " from " +
                      path + " (not retryable)");
    }

    if (attempts <= config_.max_retries) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(impl_->backoff_ms(attempts, config_)));
    }
  }
  throw Error(ErrorKind::Backend,
              "backend unavailable after " + std::to_string(attempts) +
                  " attempts; last failure: " + last_failure);
}

}  // namespace claimworthy
