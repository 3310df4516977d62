#pragma once

// Shared test scaffolding: temp dirs, a manual clock, scriptable transports,
// an independent bootstrap oracle, and a subprocess runner for the CLI.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tutoreval/llm/clock.hpp"
#include "tutoreval/llm/transport.hpp"
#include "tutoreval/types.hpp"

namespace tutoreval::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "tutoreval-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

// Time moves only when someone sleeps (or the test advances it by hand).
class ManualClock final : public Clock {
 public:
  std::int64_t now_us() override {
    std::lock_guard<std::mutex> lock(mu_);
    return now_;
  }
  void sleep_us(std::int64_t duration_us) override {
    std::lock_guard<std::mutex> lock(mu_);
    if (duration_us > 0) now_ += duration_us;
    sleeps_.push_back(duration_us);
  }
  void advance_us(std::int64_t duration_us) {
    std::lock_guard<std::mutex> lock(mu_);
    now_ += duration_us;
  }
  std::vector<std::int64_t> sleeps() const {
    std::lock_guard<std::mutex> lock(mu_);
    return sleeps_;
  }

 private:
  mutable std::mutex mu_;
  std::int64_t now_ = 0;
  std::vector<std::int64_t> sleeps_;
};

// Counts sends on the way through to an inner transport. The counter is
// shared so a test can keep reading it after the pipeline, which owns the
// transport it was handed, has destroyed the transport itself.
class CountingTransport final : public Transport {
 public:
  explicit CountingTransport(std::unique_ptr<Transport> inner, bool remote = false)
      : inner_(std::move(inner)), count_(std::make_shared<std::atomic<int>>(0)), remote_(remote) {}

  TransportReply send(const std::string& prompt, const ModelConfig& config,
                      int sample_index) override {
    ++*count_;
    return inner_->send(prompt, config, sample_index);
  }
  bool is_remote() const override { return remote_; }
  int count() const { return count_->load(); }
  std::shared_ptr<const std::atomic<int>> counter() const { return count_; }

 private:
  std::unique_ptr<Transport> inner_;
  std::shared_ptr<std::atomic<int>> count_;
  bool remote_;
};

// Replies from a fixed script (repeating the final entry), whatever the prompt.
class ScriptedTransport final : public Transport {
 public:
  explicit ScriptedTransport(std::vector<TransportReply> script, bool remote = false)
      : script_(std::move(script)), remote_(remote) {}

  TransportReply send(const std::string&, const ModelConfig&, int) override {
    std::lock_guard<std::mutex> lock(mu_);
    const TransportReply& reply = script_[std::min(next_, script_.size() - 1)];
    ++next_;
    return reply;
  }
  bool is_remote() const override { return remote_; }
  size_t calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return next_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<TransportReply> script_;
  size_t next_ = 0;
  bool remote_;
};

// Computes each reply from the request; handy for prompt-dependent behavior.
class FnTransport final : public Transport {
 public:
  using Fn = std::function<TransportReply(const std::string&, const ModelConfig&, int)>;
  explicit FnTransport(Fn fn, bool remote = false) : fn_(std::move(fn)), remote_(remote) {}
  TransportReply send(const std::string& prompt, const ModelConfig& config,
                      int sample_index) override {
    return fn_(prompt, config, sample_index);
  }
  bool is_remote() const override { return remote_; }

 private:
  Fn fn_;
  bool remote_;
};

// One canned response per sample index, whatever the prompt.
class PerSampleTransport final : public Transport {
 public:
  explicit PerSampleTransport(std::vector<std::string> texts) : texts_(std::move(texts)) {}
  TransportReply send(const std::string&, const ModelConfig&, int sample_index) override {
    return TransportReply::success(texts_.at(static_cast<size_t>(sample_index)));
  }
  bool is_remote() const override { return false; }

 private:
  std::vector<std::string> texts_;
};

// Delegates until a send budget is spent, then fails every call — stands in
// for a process dying partway through a run.
class DieAfterTransport final : public Transport {
 public:
  DieAfterTransport(std::unique_ptr<Transport> inner, int budget)
      : inner_(std::move(inner)), budget_(budget) {}

  TransportReply send(const std::string& prompt, const ModelConfig& config,
                      int sample_index) override {
    if (used_.fetch_add(1) >= budget_)
      return TransportReply::failure(TransportStatus::network_error, "simulated crash");
    return inner_->send(prompt, config, sample_index);
  }
  bool is_remote() const override { return false; }

 private:
  std::unique_ptr<Transport> inner_;
  std::atomic<int> used_{0};
  int budget_;
};

// Independent percentile-bootstrap oracle. Different generator (counter-mode
// splitmix64 with multiply-shift bounded mapping), different percentile
// arithmetic — shares nothing with the production resampler beyond the
// definition it checks.
inline std::pair<double, double> oracle_bootstrap_bounds(std::span<const int> correct,
                                                         int n_resamples, double level,
                                                         std::uint64_t seed) {
  const size_t n = correct.size();
  std::vector<double> means(static_cast<size_t>(n_resamples));
  std::uint64_t counter = 0;
  for (auto& mean : means) {
    int sum = 0;
    for (size_t i = 0; i < n; ++i) {
      const std::uint64_t word = splitmix64(seed ^ 0x0b5e55ed5a1ad5ULL ^ counter++);
      const size_t idx = static_cast<size_t>(
          (static_cast<unsigned __int128>(word) * static_cast<unsigned __int128>(n)) >> 64);
      sum += correct[idx];
    }
    mean = static_cast<double>(sum) / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  auto rank = [&](double p) {
    double r = std::ceil(p * static_cast<double>(means.size()));
    if (r < 1.0) r = 1.0;
    if (r > static_cast<double>(means.size())) r = static_cast<double>(means.size());
    return static_cast<size_t>(r) - 1;
  };
  return {means[rank((1.0 - level) / 2.0)], means[rank((1.0 + level) / 2.0)]};
}

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

// Runs a shell command, capturing combined output and the exit code.
inline CliResult run_command(const std::string& command) {
  CliResult result;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed for: " + command);
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, got);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

inline CliResult run_cli(const std::string& args) {
  return run_command(std::string(TUTOREVAL_CLI_PATH) + " " + args);
}

}  // namespace tutoreval::testing
