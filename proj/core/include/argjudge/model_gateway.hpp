#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "argjudge/common.hpp"
#include "argjudge/prompt_kit.hpp"

namespace argjudge {

struct Decoding {
  double temperature = 0.0;
  int max_tokens = 512;
};

struct ModelSpec {
  std::string model_id;
  /// "http(s)://host[:port]/path" for OpenAI-compatible chat endpoints, or
  /// "mock:<persona spec>" / "mock:@<script.json>" for scripted backends.
  std::string endpoint;
  Decoding decoding;
  /// Name of the environment variable holding the bearer token (never the token).
  std::string auth_env;
  /// Requests per second; 0 means unlimited.
  double rate_limit = 0.0;
  int max_in_flight = 4;
  /// Model name sent to the provider; defaults to model_id.
  std::string remote_model;
};

struct CompletionRecord {
  std::string model_id;
  std::string prompt_hash;
  std::string request_time;
  std::string response_text;
  int attempt_count = 0;
  bool from_cache = false;
};

/// One provider transport. `send` throws TransportError for retryable failures and
/// RefusalError when the provider declines.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string send(const ModelSpec& spec, const PromptBundle& prompt) = 0;
};

/// OpenAI-compatible chat-completions client over cpp-httplib.
class HttpBackend final : public Backend {
 public:
  std::string send(const ModelSpec& spec, const PromptBundle& prompt) override;
};

/// Gold winners keyed by argument content, consulted by "gold oracle" mock personas.
class GoldBook {
 public:
  static std::string key(std::string_view topic, std::string_view arg1, std::string_view arg2);
  void add(std::string_view topic, std::string_view arg1, std::string_view arg2, Winner winner);
  std::optional<Winner> find(std::string_view topic, std::string_view arg1, std::string_view arg2) const;
  std::size_t size() const { return winners_.size(); }

 private:
  std::map<std::string, Winner> winners_;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds base_delay{250};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};
};

struct GatewayOptions {
  /// Content-addressed on-disk cache; in-memory only when unset.
  std::optional<std::string> cache_dir;
  RetryPolicy retry;
  /// Injected for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct MockScript;

class Gateway {
 public:
  explicit Gateway(GatewayOptions options = {});
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Cache hit: returns the stored record (from_cache = true) without contacting the
  /// backend. Miss: sends with bounded exponential backoff, then caches. Throws
  /// TransportError once retries are exhausted and RefusalError immediately.
  CompletionRecord complete(const ModelSpec& spec, const PromptBundle& prompt);

  /// Routes `model_id` to `backend` regardless of its endpoint.
  void register_backend(const std::string& model_id, std::shared_ptr<Backend> backend);

  /// Registers a scripted mock for `model_id` and returns its spec.
  ModelSpec add_mock(const std::string& model_id, const MockScript& script);

  void set_gold_book(std::shared_ptr<const GoldBook> book);
  std::shared_ptr<const GoldBook> gold_book() const;

  /// Backend invocations so far (attempts, including failed ones).
  std::size_t backend_calls() const { return backend_calls_.load(); }

  static std::string cache_key(const ModelSpec& spec, const std::string& prompt_hash);

 private:
  struct Limiter;

  std::shared_ptr<Backend> backend_for(const ModelSpec& spec);
  Limiter& limiter_for(const ModelSpec& spec);
  std::optional<CompletionRecord> cache_lookup(const std::string& key);
  void cache_store(const std::string& key, const CompletionRecord& record);
  CompletionRecord fetch(const ModelSpec& spec, const PromptBundle& prompt, const std::string& prompt_hash);

  GatewayOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Backend>> by_model_;
  std::map<std::string, std::shared_ptr<Backend>> by_endpoint_;
  std::map<std::string, CompletionRecord> memory_cache_;
  std::map<std::string, std::shared_future<CompletionRecord>> in_flight_;
  std::map<std::string, std::unique_ptr<Limiter>> limiters_;
  std::shared_ptr<const GoldBook> gold_;
  std::atomic<std::size_t> backend_calls_{0};
};

/// Provider config: JSON array (or {"models": [...]}) of {model_id, endpoint, auth_env,
/// rate_limit, max_in_flight, max_tokens, remote_model}. Temperature is always 0.
std::vector<ModelSpec> parse_provider_config(std::string_view json_text);
std::vector<ModelSpec> load_provider_config(const std::string& path);

}  // namespace argjudge
