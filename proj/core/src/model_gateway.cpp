#include "argjudge/model_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "argjudge/mock_backend.hpp"
#include "csv.hpp"

namespace argjudge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string GoldBook::key(std::string_view topic, std::string_view arg1, std::string_view arg2) {
  std::string joined;
  joined.append(topic).append(1, '\x1f').append(arg1).append(1, '\x1f').append(arg2);
  return sha256_hex(joined);
}

void GoldBook::add(std::string_view topic, std::string_view arg1, std::string_view arg2, Winner winner) {
  winners_[key(topic, arg1, arg2)] = winner;
}

std::optional<Winner> GoldBook::find(std::string_view topic, std::string_view arg1, std::string_view arg2) const {
  auto it = winners_.find(key(topic, arg1, arg2));
  if (it == winners_.end()) return std::nullopt;
  return it->second;
}

// Bounded in-flight requests plus optional request pacing for one model.
struct Gateway::Limiter {
  std::mutex mu;
  std::condition_variable cv;
  int available = 1;
  std::chrono::steady_clock::time_point next_slot{};

  void acquire() {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return available > 0; });
    --available;
  }
  void release() {
    {
      std::lock_guard lock(mu);
      ++available;
    }
    cv.notify_one();
  }
  // Returns how long the caller should wait before sending.
  std::chrono::milliseconds reserve(double rate_limit) {
    if (rate_limit <= 0.0) return std::chrono::milliseconds{0};
    std::lock_guard lock(mu);
    const auto now = std::chrono::steady_clock::now();
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / rate_limit));
    const auto slot = std::max(now, next_slot);
    next_slot = slot + interval;
    return std::chrono::duration_cast<std::chrono::milliseconds>(slot - now);
  }
};

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)) {
  if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (options_.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be at least 1");
  if (options_.cache_dir) fs::create_directories(*options_.cache_dir);
}

Gateway::~Gateway() = default;

void Gateway::register_backend(const std::string& model_id, std::shared_ptr<Backend> backend) {
  std::lock_guard lock(mu_);
  by_model_[model_id] = std::move(backend);
}

ModelSpec Gateway::add_mock(const std::string& model_id, const MockScript& script) {
  auto backend = std::make_shared<MockBackend>(script, [this] { return gold_book(); });
  register_backend(model_id, backend);
  ModelSpec spec;
  spec.model_id = model_id;
  spec.endpoint = "mock:" + model_id;
  return spec;
}

void Gateway::set_gold_book(std::shared_ptr<const GoldBook> book) {
  std::lock_guard lock(mu_);
  gold_ = std::move(book);
}

std::shared_ptr<const GoldBook> Gateway::gold_book() const {
  std::lock_guard lock(mu_);
  return gold_;
}

std::string Gateway::cache_key(const ModelSpec& spec, const std::string& prompt_hash) {
  return sha256_hex(fmt::format("{}\x1f{:.6f}\x1f{}\x1f{}", spec.model_id, spec.decoding.temperature,
                                spec.decoding.max_tokens, prompt_hash));
}

std::shared_ptr<Backend> Gateway::backend_for(const ModelSpec& spec) {
  std::lock_guard lock(mu_);
  if (auto it = by_model_.find(spec.model_id); it != by_model_.end()) return it->second;
  if (auto it = by_endpoint_.find(spec.endpoint); it != by_endpoint_.end()) return it->second;

  std::shared_ptr<Backend> backend;
  if (spec.endpoint.rfind("mock:", 0) == 0) {
    const std::string body = spec.endpoint.substr(5);
    MockScript script;
    if (!body.empty() && body.front() == '@') {
      script = parse_mock_script_json(detail::slurp_file(body.substr(1)));
    } else {
      script = parse_mock_spec(body);
    }
    backend = std::make_shared<MockBackend>(std::move(script), [this] { return gold_book(); });
  } else if (spec.endpoint.rfind("http://", 0) == 0 || spec.endpoint.rfind("https://", 0) == 0) {
    backend = std::make_shared<HttpBackend>();
  } else {
    throw ConfigError(fmt::format("model {}: unsupported endpoint '{}'", spec.model_id, spec.endpoint));
  }
  by_endpoint_[spec.endpoint] = backend;
  return backend;
}

Gateway::Limiter& Gateway::limiter_for(const ModelSpec& spec) {
  std::lock_guard lock(mu_);
  auto& slot = limiters_[spec.model_id];
  if (!slot) {
    slot = std::make_unique<Limiter>();
    slot->available = std::max(1, spec.max_in_flight);
  }
  return *slot;
}

std::optional<CompletionRecord> Gateway::cache_lookup(const std::string& key) {
  if (auto it = memory_cache_.find(key); it != memory_cache_.end()) return it->second;
  if (!options_.cache_dir) return std::nullopt;
  const fs::path path = fs::path(*options_.cache_dir) / key.substr(0, 2) / (key + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  auto j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    spdlog::warn("ignoring unreadable cache entry {}", path.string());
    return std::nullopt;
  }
  CompletionRecord rec;
  rec.model_id = j.value("model_id", "");
  rec.prompt_hash = j.value("prompt_hash", "");
  rec.request_time = j.value("request_time", "");
  rec.response_text = j.value("response_text", "");
  rec.attempt_count = j.value("attempt_count", 0);
  memory_cache_[key] = rec;
  return rec;
}

void Gateway::cache_store(const std::string& key, const CompletionRecord& record) {
  memory_cache_[key] = record;
  if (!options_.cache_dir) return;
  const fs::path dir = fs::path(*options_.cache_dir) / key.substr(0, 2);
  fs::create_directories(dir);
  const fs::path final_path = dir / (key + ".json");
  std::ostringstream tid;
  tid << std::this_thread::get_id();
  const fs::path tmp = dir / (key + ".tmp." + tid.str());
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw StoreError("cannot write cache entry " + tmp.string());
    json j{{"key", key},
           {"model_id", record.model_id},
           {"prompt_hash", record.prompt_hash},
           {"request_time", record.request_time},
           {"response_text", record.response_text},
           {"attempt_count", record.attempt_count}};
    out << j.dump() << '\n';
  }
  fs::rename(tmp, final_path);
}

CompletionRecord Gateway::fetch(const ModelSpec& spec, const PromptBundle& prompt, const std::string& prompt_hash) {
  auto backend = backend_for(spec);
  Limiter& limiter = limiter_for(spec);
  limiter.acquire();
  struct Release {
    Limiter& l;
    ~Release() { l.release(); }
  } release{limiter};

  const auto& retry = options_.retry;
  std::string last_error;
  for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
    if (auto wait = limiter.reserve(spec.rate_limit); wait.count() > 0) options_.sleep(wait);
    ++backend_calls_;
    try {
      CompletionRecord rec;
      rec.model_id = spec.model_id;
      rec.prompt_hash = prompt_hash;
      rec.request_time = utc_timestamp();
      rec.response_text = backend->send(spec, prompt);
      rec.attempt_count = attempt;
      return rec;
    } catch (const TransportError& e) {
      last_error = e.what();
      if (attempt == retry.max_attempts) break;
      const double factor = std::pow(retry.multiplier, attempt - 1);
      auto delay = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(retry.base_delay.count()) * factor));
      options_.sleep(std::min(delay, retry.max_delay));
    }
  }
  throw TransportError(fmt::format("model {}: {} attempts failed; last error: {}", spec.model_id,
                                   retry.max_attempts, last_error));
}

CompletionRecord Gateway::complete(const ModelSpec& spec, const PromptBundle& prompt) {
  const std::string prompt_hash = prompt.hash();
  const std::string key = cache_key(spec, prompt_hash);

  std::shared_future<CompletionRecord> pending;
  std::promise<CompletionRecord> promise;
  {
    std::lock_guard lock(mu_);
    if (auto hit = cache_lookup(key)) {
      hit->from_cache = true;
      return *hit;
    }
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      pending = it->second;
    } else {
      in_flight_[key] = promise.get_future().share();
    }
  }
  if (pending.valid()) {
    CompletionRecord rec = pending.get();
    rec.from_cache = true;
    return rec;
  }

  try {
    CompletionRecord rec = fetch(spec, prompt, prompt_hash);
    {
      std::lock_guard lock(mu_);
      cache_store(key, rec);
      in_flight_.erase(key);
    }
    promise.set_value(rec);
    return rec;
  } catch (...) {
    {
      std::lock_guard lock(mu_);
      in_flight_.erase(key);
    }
    promise.set_exception(std::current_exception());
    throw;
  }
}

std::vector<ModelSpec> parse_provider_config(std::string_view json_text) {
  auto root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) throw ConfigError("provider config is not valid JSON");
  if (root.is_object() && root.contains("models")) root = root["models"];
  if (!root.is_array()) throw ConfigError("provider config must be a list of models");

  std::vector<ModelSpec> out;
  for (const auto& m : root) {
    if (!m.is_object()) throw ConfigError("provider entry must be an object");
    ModelSpec spec;
    spec.model_id = m.value("model_id", "");
    spec.endpoint = m.value("endpoint", "");
    if (spec.model_id.empty() || spec.endpoint.empty()) throw ConfigError("provider entry needs model_id and endpoint");
    if (m.contains("token") || m.contains("api_key"))
      throw ConfigError("model " + spec.model_id + ": credentials must come from the environment (auth_env)");
    spec.auth_env = m.value("auth_env", "");
    spec.rate_limit = m.value("rate_limit", 0.0);
    spec.max_in_flight = m.value("max_in_flight", 4);
    spec.decoding.max_tokens = m.value("max_tokens", 512);
    spec.remote_model = m.value("remote_model", "");
    if (m.contains("temperature") && m["temperature"].get<double>() != 0.0)
      throw ConfigError("model " + spec.model_id + ": temperature is fixed at 0");
    for (const auto& prev : out)
      if (prev.model_id == spec.model_id) throw ConfigError("duplicate model_id " + spec.model_id);
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<ModelSpec> load_provider_config(const std::string& path) {
  try {
    return parse_provider_config(detail::slurp_file(path));
  } catch (const DatasetError&) {
    throw ConfigError("cannot read provider config " + path);
  }
}

}  // namespace argjudge
