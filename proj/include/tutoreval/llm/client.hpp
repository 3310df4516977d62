#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tutoreval/llm/cache.hpp"
#include "tutoreval/llm/clock.hpp"
#include "tutoreval/llm/rate_limiter.hpp"
#include "tutoreval/llm/transport.hpp"
#include "tutoreval/types.hpp"

namespace tutoreval {

struct CompletionOutcome {
  bool ok = false;
  std::string text;  // set when ok
  Errc error_code = Errc::transport;
  std::string error_message;

  static CompletionOutcome success(std::string text) {
    return CompletionOutcome{true, std::move(text), Errc::transport, {}};
  }
  static CompletionOutcome failure(Errc code, std::string message) {
    return CompletionOutcome{false, {}, code, std::move(message)};
  }
};

// Chat-completion front end: cache lookaside, token-budget rate limiting for
// remote transports, exponential backoff with full jitter on transient
// failures. Shareable across worker threads.
class Client {
 public:
  Client(std::unique_ptr<Transport> transport, ResponseCache& cache, Clock& clock = system_clock())
      : transport_(std::move(transport)), cache_(&cache), clock_(&clock), jitter_rng_(0x7e57b0ff) {}

  Transport& transport() { return *transport_; }

  std::string complete(const std::string& prompt, const ModelConfig& config, int sample_index) {
    config.validate();
    const CacheKey key =
        CacheKey::for_prompt(config.model_name, prompt, config.temperature, sample_index);
    if (auto hit = cache_->lookup(key)) return *hit;

    std::string attempt_log;
    for (int attempt = 0;; ++attempt) {
      if (transport_->is_remote()) limiter_for(config.requests_per_minute).acquire();
      const TransportReply reply = transport_->send(prompt, config, sample_index);
      if (reply.status == TransportStatus::ok) {
        cache_->insert(key, reply.text);
        return reply.text;
      }

      attempt_log += "\n  attempt " + std::to_string(attempt + 1) + ": " +
                     transport_status_name(reply.status) +
                     (reply.detail.empty() ? "" : " (" + reply.detail + ")");
      if (reply.status == TransportStatus::auth_error)
        throw Error(Errc::config, "authentication failed for model '" + config.model_name +
                                      "': " + reply.detail);
      if (reply.status == TransportStatus::fixture_miss)
        throw Error(Errc::fixture_miss, reply.detail);
      if (!is_retryable(reply.status) || attempt >= config.max_retries)
        throw Error(Errc::transport, "completion failed for model '" + config.model_name +
                                         "' after " + std::to_string(attempt + 1) + " attempt(s):" +
                                         attempt_log);
      clock_->sleep_us(backoff_us(attempt));
    }
  }

  // Maps complete over the jobs with at most max_in_flight requests
  // outstanding. Results land in input order; per-job failures are returned
  // positionally instead of aborting the batch.
  std::vector<CompletionOutcome> complete_many(
      const std::vector<std::pair<std::string, int>>& jobs, const ModelConfig& config,
      int max_in_flight) {
    if (max_in_flight < 1) throw Error(Errc::contract, "max_in_flight must be >= 1");
    std::vector<CompletionOutcome> results(jobs.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        try {
          results[i] = CompletionOutcome::success(complete(jobs[i].first, config, jobs[i].second));
        } catch (const Error& e) {
          results[i] = CompletionOutcome::failure(e.code(), e.what());
        }
      }
    };
    const size_t n_threads = std::min(static_cast<size_t>(max_in_flight), jobs.size());
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(n_threads);
      for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    return results;
  }

 private:
  static constexpr std::int64_t kBackoffBaseUs = 1'000'000;
  static constexpr std::int64_t kBackoffCapUs = 60'000'000;

  RateLimiter& limiter_for(int rpm) {
    std::lock_guard<std::mutex> lock(limiter_mu_);
    if (!limiter_ || limiter_rpm_ != rpm) {
      limiter_ = std::make_unique<RateLimiter>(rpm, *clock_);
      limiter_rpm_ = rpm;
    }
    return *limiter_;
  }

  // Full jitter: uniform in [0, min(cap, base * 2^attempt)].
  std::int64_t backoff_us(int attempt) {
    std::int64_t ceiling = kBackoffCapUs;
    if (attempt < 6) ceiling = std::min(kBackoffCapUs, kBackoffBaseUs << attempt);
    std::lock_guard<std::mutex> lock(jitter_mu_);
    return static_cast<std::int64_t>(jitter_rng_() % static_cast<std::uint64_t>(ceiling + 1));
  }

  std::unique_ptr<Transport> transport_;
  ResponseCache* cache_;
  Clock* clock_;
  std::mutex limiter_mu_;
  std::unique_ptr<RateLimiter> limiter_;
  int limiter_rpm_ = 0;
  std::mutex jitter_mu_;
  std::mt19937_64 jitter_rng_;
};

}  // namespace tutoreval
