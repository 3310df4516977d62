#pragma once

#include <cstdint>
#include <deque>
#include <mutex>

#include "tutoreval/llm/clock.hpp"
#include "tutoreval/types.hpp"

namespace tutoreval {

// Budget of requests_per_minute start slots; a consumed slot frees 60 seconds
// after its request started. Guarantees that any 60-second window holds at
// most requests_per_minute request starts, while still letting a cold client
// burst up to the full budget.
class RateLimiter {
 public:
  RateLimiter(int requests_per_minute, Clock& clock)
      : rpm_(requests_per_minute), clock_(&clock) {
    if (requests_per_minute < 1)
      throw Error(Errc::config, "requests_per_minute must be positive");
  }

  // Blocks (via the clock) until a start slot is available, then claims it.
  void acquire() {
    for (;;) {
      std::int64_t wait_us = 0;
      {
        std::lock_guard<std::mutex> lock(mu_);
        const std::int64_t now = clock_->now_us();
        while (!starts_.empty() && starts_.front() <= now - kWindowUs) starts_.pop_front();
        if (static_cast<int>(starts_.size()) < rpm_) {
          starts_.push_back(now);
          return;
        }
        wait_us = starts_.front() + kWindowUs - now;
      }
      clock_->sleep_us(wait_us > 0 ? wait_us : 1);
    }
  }

 private:
  static constexpr std::int64_t kWindowUs = 60'000'000;
  std::mutex mu_;
  std::deque<std::int64_t> starts_;
  int rpm_;
  Clock* clock_;
};

}  // namespace tutoreval
