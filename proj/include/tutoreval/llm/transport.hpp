#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutoreval/llm/cache.hpp"
#include "tutoreval/types.hpp"

namespace tutoreval {

enum class Provider { openai_compatible, gemini_compatible, mock };

inline std::string provider_name(Provider p) {
  switch (p) {
    case Provider::openai_compatible: return "openai-compatible";
    case Provider::gemini_compatible: return "gemini-compatible";
    case Provider::mock: return "mock";
  }
  return "?";
}

inline Provider provider_from_string(std::string_view s) {
  if (s == "openai-compatible" || s == "openai") return Provider::openai_compatible;
  if (s == "gemini-compatible" || s == "gemini") return Provider::gemini_compatible;
  if (s == "mock") return Provider::mock;
  throw Error(Errc::config, "unknown provider '" + std::string(s) +
                                "' (expected openai, gemini, or mock)");
}

struct ModelConfig {
  Provider provider = Provider::mock;
  std::string model_name;
  double temperature = 0.0;  // 0 asks the provider for deterministic decoding
  int max_output_tokens = 1024;
  int requests_per_minute = 60;
  int max_retries = 5;

  void validate() const {
    if (model_name.empty()) throw Error(Errc::config, "model_name must be set");
    if (temperature < 0.0) throw Error(Errc::config, "temperature must be >= 0");
    if (max_output_tokens < 1) throw Error(Errc::config, "max_output_tokens must be positive");
    if (requests_per_minute < 1) throw Error(Errc::config, "requests_per_minute must be positive");
    if (max_retries < 0) throw Error(Errc::config, "max_retries must be >= 0");
  }
};

enum class TransportStatus {
  ok,
  rate_limited,   // retryable
  server_error,   // retryable
  network_error,  // retryable
  auth_error,     // fatal: bad or missing credentials
  bad_request,    // fatal: the provider rejected the request shape
  fixture_miss,   // fatal: mock provider has no fixture for this digest
};

inline bool is_retryable(TransportStatus s) {
  return s == TransportStatus::rate_limited || s == TransportStatus::server_error ||
         s == TransportStatus::network_error;
}

inline const char* transport_status_name(TransportStatus s) {
  switch (s) {
    case TransportStatus::ok: return "ok";
    case TransportStatus::rate_limited: return "rate-limited";
    case TransportStatus::server_error: return "server-error";
    case TransportStatus::network_error: return "network-error";
    case TransportStatus::auth_error: return "auth-error";
    case TransportStatus::bad_request: return "bad-request";
    case TransportStatus::fixture_miss: return "fixture-miss";
  }
  return "?";
}

struct TransportReply {
  TransportStatus status = TransportStatus::ok;
  std::string text;    // completion text when status == ok
  std::string detail;  // provider error text otherwise

  static TransportReply success(std::string text) {
    return TransportReply{TransportStatus::ok, std::move(text), {}};
  }
  static TransportReply failure(TransportStatus status, std::string detail) {
    return TransportReply{status, {}, std::move(detail)};
  }
};

// One provider wire dialect. Implementations must be safe to call from
// multiple worker threads.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply send(const std::string& prompt, const ModelConfig& config,
                              int sample_index) = 0;
  // Remote transports pass through the rate limiter; offline ones do not.
  virtual bool is_remote() const { return true; }
};

// ---------------------------------------------------------------------------
// Mock provider
// ---------------------------------------------------------------------------
// Fixture file: JSON object mapping prompt digest -> array of candidate
// response strings. Candidate choice is a pure function of (digest,
// temperature, sample_index), so replays are exact.

using FixtureMap = std::map<std::string, std::vector<std::string>>;

inline FixtureMap read_fixtures(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::config, "cannot open fixture file: " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw Error(Errc::config, "fixture file must hold a JSON object: " + path.string());
  FixtureMap fixtures;
  for (const auto& [digest, candidates] : doc.items()) {
    if (!candidates.is_array() || candidates.empty())
      throw Error(Errc::config, "fixture entry '" + digest + "' must be a nonempty array");
    fixtures[digest] = candidates.get<std::vector<std::string>>();
  }
  return fixtures;
}

inline void write_fixtures(const std::filesystem::path& path, const FixtureMap& fixtures) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [digest, candidates] : fixtures) doc[digest] = candidates;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::config, "cannot write fixture file: " + path.string());
  out << doc.dump(2) << '\n';
}

class MockTransport final : public Transport {
 public:
  explicit MockTransport(FixtureMap fixtures) : fixtures_(std::move(fixtures)) {}
  explicit MockTransport(const std::filesystem::path& fixture_path)
      : MockTransport(read_fixtures(fixture_path)) {}

  TransportReply send(const std::string& prompt, const ModelConfig& config,
                      int sample_index) override {
    const std::string digest = sha256_hex(prompt);
    auto it = fixtures_.find(digest);
    if (it == fixtures_.end())
      return TransportReply::failure(TransportStatus::fixture_miss,
                                     "no fixture for prompt digest " + digest);
    const auto& candidates = it->second;
    return TransportReply::success(candidates[pick(digest, config.temperature, sample_index,
                                                   candidates.size())]);
  }

  bool is_remote() const override { return false; }

  // Seeded pseudorandom candidate choice; any byte change in the prompt, the
  // temperature, or the sample index moves it.
  static size_t pick(std::string_view digest, double temperature, int sample_index,
                     size_t n_candidates) {
    std::uint64_t h = fnv1a64(digest);
    h = splitmix64(h ^ static_cast<std::uint64_t>(llround(temperature * 1e6)));
    h = splitmix64(h ^ static_cast<std::uint64_t>(sample_index));
    return static_cast<size_t>(h % n_candidates);
  }

 private:
  FixtureMap fixtures_;
};

}  // namespace tutoreval
