#include <cstdlib>
#include <regex>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "argjudge/model_gateway.hpp"

namespace argjudge {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& endpoint) {
  static const std::regex pattern(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, pattern)) throw ConfigError("malformed endpoint URL " + endpoint);
  Url u{m[1].str(), m[2].matched ? m[2].str() : std::string("/v1/chat/completions")};
  return u;
}

bool looks_like_refusal(const std::string& message) {
  const std::string m = to_lower(message);
  return m.find("content policy") != std::string::npos || m.find("content_filter") != std::string::npos ||
         m.find("safety") != std::string::npos;
}

}  // namespace

std::string HttpBackend::send(const ModelSpec& spec, const PromptBundle& prompt) {
  const Url url = split_url(spec.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);

  httplib::Headers headers;
  if (!spec.auth_env.empty()) {
    const char* token = std::getenv(spec.auth_env.c_str());
    if (!token || !*token) throw ConfigError(fmt::format("model {}: ${} is not set", spec.model_id, spec.auth_env));
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  nlohmann::json body{
      {"model", spec.remote_model.empty() ? spec.model_id : spec.remote_model},
      {"temperature", spec.decoding.temperature},
      {"max_tokens", spec.decoding.max_tokens},
      {"messages",
       {{{"role", "system"}, {"content", prompt.system_message}}, {{"role", "user"}, {"content", prompt.user_text()}}}}};

  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) throw TransportError(fmt::format("{}: {}", spec.endpoint, httplib::to_string(res.error())));

  auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (res->status == 429 || res->status >= 500)
    throw TransportError(fmt::format("{}: HTTP {}", spec.endpoint, res->status));
  if (res->status != 200) {
    std::string message = res->body;
    if (!reply.is_discarded() && reply.contains("error") && reply["error"].is_object())
      message = reply["error"].value("message", message);
    if (looks_like_refusal(message)) throw RefusalError(fmt::format("{}: {}", spec.model_id, message));
    throw TransportError(fmt::format("{}: HTTP {}: {}", spec.endpoint, res->status, message));
  }
  if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty())
    throw TransportError(spec.endpoint + ": response lacks choices");

  const auto& choice = reply["choices"][0];
  if (choice.value("finish_reason", "") == "content_filter")
    throw RefusalError(spec.model_id + ": response withheld by content filter");
  const auto& message = choice.value("message", nlohmann::json::object());
  if (message.contains("refusal") && message["refusal"].is_string() && !message["refusal"].get<std::string>().empty())
    throw RefusalError(spec.model_id + ": " + message["refusal"].get<std::string>());
  if (!message.contains("content") || !message["content"].is_string())
    throw TransportError(spec.endpoint + ": response lacks message content");
  return message["content"].get<std::string>();
}

}  // namespace argjudge
