#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tutoreval/llm/transport.hpp"
#include "tutoreval/types.hpp"

namespace tutoreval {

inline constexpr std::string_view kOpenAiDefaultBaseUrl = "https://api.openai.com";
inline constexpr std::string_view kGeminiDefaultBaseUrl =
    "https://generativelanguage.googleapis.com";

// Request/response shaping is split out from the HTTP plumbing so the wire
// dialects are unit-testable without a server.

inline nlohmann::json build_openai_request(const std::string& prompt, const ModelConfig& config) {
  nlohmann::json body;
  body["model"] = config.model_name;
  body["temperature"] = config.temperature;
  body["max_tokens"] = config.max_output_tokens;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  return body;
}

inline std::string parse_openai_response(const nlohmann::json& body) {
  if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty())
    throw Error(Errc::transport, "openai response carries no choices");
  return body["choices"][0].at("message").at("content").get<std::string>();
}

inline std::string openai_completions_path() { return "/v1/chat/completions"; }

inline nlohmann::json build_gemini_request(const std::string& prompt, const ModelConfig& config) {
  nlohmann::json body;
  body["contents"] = nlohmann::json::array({{{"parts", nlohmann::json::array({{{"text", prompt}}})}}});
  body["generationConfig"] = {{"temperature", config.temperature},
                              {"maxOutputTokens", config.max_output_tokens}};
  return body;
}

inline std::string parse_gemini_response(const nlohmann::json& body) {
  if (!body.contains("candidates") || !body["candidates"].is_array() || body["candidates"].empty())
    throw Error(Errc::transport, "gemini response carries no candidates");
  const auto& parts = body["candidates"][0].at("content").at("parts");
  std::string text;
  for (const auto& part : parts)
    if (part.contains("text")) text += part["text"].get<std::string>();
  return text;
}

inline std::string gemini_generate_path(const std::string& model_name) {
  return "/v1beta/models/" + model_name + ":generateContent";
}

namespace detail {

inline TransportStatus classify_http_status(int status) {
  if (status == 401 || status == 403) return TransportStatus::auth_error;
  if (status == 429) return TransportStatus::rate_limited;
  if (status >= 500) return TransportStatus::server_error;
  if (status >= 400) return TransportStatus::bad_request;
  return TransportStatus::ok;
}

// One short-lived connection per request; no shared connection state between
// worker threads.
inline TransportReply post_json(const std::string& base_url, const std::string& path,
                                const httplib::Headers& headers, const nlohmann::json& body) {
  httplib::Client http(base_url);
  http.set_connection_timeout(10, 0);
  http.set_read_timeout(120, 0);
  http.set_write_timeout(30, 0);
  auto res = http.Post(path, headers, body.dump(), "application/json");
  if (!res)
    return TransportReply::failure(TransportStatus::network_error,
                                   httplib::to_string(res.error()));
  const TransportStatus status = classify_http_status(res->status);
  if (status != TransportStatus::ok)
    return TransportReply::failure(status, "HTTP " + std::to_string(res->status) + ": " + res->body);
  return TransportReply::success(res->body);
}

}  // namespace detail

class OpenAiTransport final : public Transport {
 public:
  OpenAiTransport(std::string base_url, std::string api_key)
      : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {}

  TransportReply send(const std::string& prompt, const ModelConfig& config, int) override {
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    TransportReply raw = detail::post_json(base_url_, openai_completions_path(), headers,
                                           build_openai_request(prompt, config));
    if (raw.status != TransportStatus::ok) return raw;
    try {
      return TransportReply::success(parse_openai_response(nlohmann::json::parse(raw.text)));
    } catch (const std::exception& e) {
      return TransportReply::failure(TransportStatus::bad_request,
                                     std::string("unexpected response shape: ") + e.what());
    }
  }

 private:
  std::string base_url_;
  std::string api_key_;
};

class GeminiTransport final : public Transport {
 public:
  GeminiTransport(std::string base_url, std::string api_key)
      : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {}

  TransportReply send(const std::string& prompt, const ModelConfig& config, int) override {
    httplib::Headers headers{{"x-goog-api-key", api_key_}};
    TransportReply raw = detail::post_json(base_url_, gemini_generate_path(config.model_name),
                                           headers, build_gemini_request(prompt, config));
    if (raw.status != TransportStatus::ok) return raw;
    try {
      return TransportReply::success(parse_gemini_response(nlohmann::json::parse(raw.text)));
    } catch (const std::exception& e) {
      return TransportReply::failure(TransportStatus::bad_request,
                                     std::string("unexpected response shape: ") + e.what());
    }
  }

 private:
  std::string base_url_;
  std::string api_key_;
};

namespace detail {

inline std::string env_or(const char* name, std::string_view fallback) {
  const char* value = std::getenv(name);
  return value != nullptr && *value != '\0' ? std::string(value) : std::string(fallback);
}

inline std::string require_api_key(const char* env_name) {
  const char* value = std::getenv(env_name);
  if (value == nullptr || *value == '\0')
    throw Error(Errc::config, std::string("missing credentials: set ") + env_name);
  return value;
}

}  // namespace detail

// Builds the transport for a model. Remote providers read credentials from
// the environment (OPENAI_API_KEY / GEMINI_API_KEY); base_url_override is for
// self-hosted compatible endpoints and tests.
inline std::unique_ptr<Transport> make_transport(const ModelConfig& config,
                                                 const std::string& mock_fixtures_path = {},
                                                 const std::string& base_url_override = {}) {
  switch (config.provider) {
    case Provider::mock:
      if (mock_fixtures_path.empty())
        throw Error(Errc::config, "mock provider needs a fixtures file (--mock-fixtures)");
      return std::make_unique<MockTransport>(std::filesystem::path(mock_fixtures_path));
    case Provider::openai_compatible: {
      std::string base = !base_url_override.empty()
                             ? base_url_override
                             : detail::env_or("OPENAI_BASE_URL", kOpenAiDefaultBaseUrl);
      return std::make_unique<OpenAiTransport>(std::move(base),
                                               detail::require_api_key("OPENAI_API_KEY"));
    }
    case Provider::gemini_compatible: {
      std::string base = !base_url_override.empty()
                             ? base_url_override
                             : detail::env_or("GEMINI_BASE_URL", kGeminiDefaultBaseUrl);
      return std::make_unique<GeminiTransport>(std::move(base),
                                               detail::require_api_key("GEMINI_API_KEY"));
    }
  }
  throw Error(Errc::config, "unknown provider");
}

}  // namespace tutoreval
