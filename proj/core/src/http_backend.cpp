#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "judgekit/gateway.hpp"

namespace judgekit::llm {

using nlohmann::json;

namespace {

json request_body(const ChatRequest& request, int n) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return json{{"model", request.model},
              {"messages", std::move(messages)},
              {"temperature", request.sampling.temperature},
              {"top_p", request.sampling.top_p},
              {"n", n}};
}

FinishReason map_finish_reason(const json& choice) {
  if (!choice.contains("finish_reason") || choice["finish_reason"].is_null()) {
    return FinishReason::error;
  }
  return finish_reason_from_string(choice["finish_reason"].get<std::string>());
}

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
      throw ConfigError("http backend requires a base URL");
    }
    if (config_.max_attempts < 1) {
      throw ConfigError("http backend max_attempts must be >= 1");
    }
  }

  std::vector<Completion> complete(const ChatRequest& request,
                                   const std::vector<int>& sample_indices) override {
    if (config_.use_native_n || sample_indices.size() == 1) {
      return post_once(request, static_cast<int>(sample_indices.size()));
    }
    std::vector<Completion> out;
    out.reserve(sample_indices.size());
    for (std::size_t i = 0; i < sample_indices.size(); ++i) {
      auto one = post_once(request, 1);
      out.push_back(std::move(one.front()));
    }
    return out;
  }

  std::string name() const override { return "http:" + config_.base_url; }

 private:
  std::vector<Completion> post_once(const ChatRequest& request, int n) {
    const std::string body = request_body(request, n).dump();
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    auto backoff = config_.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(static_cast<long long>(
            static_cast<double>(backoff.count()) * config_.backoff_multiplier));
      }

      httplib::Client client(config_.base_url);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      auto res = client.Post(config_.path, headers, body, "application/json");

      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw GatewayError("endpoint rejected request: HTTP " +
                           std::to_string(res->status) + " " + res->body);
      }
      return parse_completions(res->body, n);
    }
    throw GatewayError("endpoint unreachable after " +
                       std::to_string(config_.max_attempts) +
                       " attempts (" + last_error + ")");
  }

  std::vector<Completion> parse_completions(const std::string& body, int n) {
    json payload;
    try {
      payload = json::parse(body);
    } catch (const json::exception& e) {
      throw GatewayError(std::string("malformed endpoint response: ") + e.what());
    }
    if (!payload.contains("choices") || !payload["choices"].is_array() ||
        payload["choices"].empty()) {
      throw GatewayError("malformed endpoint response: no choices array");
    }
    std::vector<Completion> out;
    out.reserve(static_cast<std::size_t>(n));
    for (const auto& choice : payload["choices"]) {
      if (!choice.contains("message") || !choice["message"].contains("content")) {
        throw GatewayError("malformed endpoint response: choice without message");
      }
      out.push_back(Completion{choice["message"]["content"].get<std::string>(),
                               map_finish_reason(choice), ""});
      if (out.size() == static_cast<std::size_t>(n)) break;
    }
    if (out.size() != static_cast<std::size_t>(n)) {
      throw GatewayError("endpoint returned " + std::to_string(out.size()) +
                         " choices, expected " + std::to_string(n));
    }
    return out;
  }

  HttpBackendConfig config_;
};

}  // namespace

std::unique_ptr<Backend> make_http_backend(HttpBackendConfig config) {
  return std::make_unique<HttpBackend>(std::move(config));
}

}  // namespace judgekit::llm
