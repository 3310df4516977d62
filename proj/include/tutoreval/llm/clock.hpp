#pragma once

#include <chrono>
#include <cstdint>
#include <thread>

namespace tutoreval {

// Injectable time source so retry backoff and rate limiting are testable
// against a simulated clock.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_us() = 0;
  virtual void sleep_us(std::int64_t duration_us) = 0;
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_us() override {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
  void sleep_us(std::int64_t duration_us) override {
    if (duration_us > 0) std::this_thread::sleep_for(std::chrono::microseconds(duration_us));
  }
};

inline SystemClock& system_clock() {
  static SystemClock clock;
  return clock;
}

}  // namespace tutoreval
