#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tutoreval/corpus.hpp"
#include "tutoreval/types.hpp"

namespace tutoreval {

// Seeded generator used everywhere randomness matters. mt19937_64 is fully
// specified by the standard and the bounded mapping below is our own, so a
// fixed seed reproduces bit-identical results on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Unbiased integer in [0, n) via rejection below the largest multiple of n.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw Error(Errc::contract, "uniform_index: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  bool coin() { return (next() & 1u) != 0; }

 private:
  std::mt19937_64 gen_;
};

// Substream seed for a named statistic, stable across platforms and
// independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view stream_name) {
  return splitmix64(base_seed ^ fnv1a64(stream_name));
}

struct AgreementResult {
  double percent_agreement = 0.0;  // matches / n_items
  double kappa = 0.0;
  int n_items = 0;
};

namespace detail {

inline void require_binary_pair(std::span<const int> a, std::span<const int> b,
                                const char* op_name) {
  if (a.empty() || b.empty())
    throw Error(Errc::contract, std::string(op_name) + ": label vectors must be nonempty");
  if (a.size() != b.size())
    throw Error(Errc::contract, std::string(op_name) + ": label vectors differ in length (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                    ")");
  for (auto v : a)
    if (v != 1 && v != -1)
      throw Error(Errc::contract, std::string(op_name) + ": labels must be +1 or -1");
  for (auto v : b)
    if (v != 1 && v != -1)
      throw Error(Errc::contract, std::string(op_name) + ": labels must be +1 or -1");
}

}  // namespace detail

inline double percent_agreement(std::span<const int> a, std::span<const int> b) {
  detail::require_binary_pair(a, b, "percent_agreement");
  size_t matches = 0;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] == b[i]) ++matches;
  return static_cast<double>(matches) / static_cast<double>(a.size());
}

// Two-rater, two-category kappa: (p_o - p_e) / (1 - p_e), expected agreement
// from the product of marginal label frequencies.
inline double cohen_kappa(std::span<const int> a, std::span<const int> b) {
  detail::require_binary_pair(a, b, "cohen_kappa");
  const auto n = static_cast<double>(a.size());
  double a_yes = 0, b_yes = 0, joint_yes = 0, joint_no = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    a_yes += a[i] == 1;
    b_yes += b[i] == 1;
    joint_yes += a[i] == 1 && b[i] == 1;
    joint_no += a[i] == -1 && b[i] == -1;
  }
  const double p_o = (joint_yes + joint_no) / n;
  const double p_e = (a_yes / n) * (b_yes / n) + ((n - a_yes) / n) * ((n - b_yes) / n);
  if (p_e >= 1.0) {
    if (p_o == 1.0) return 1.0;
    throw Error(Errc::contract, "cohen_kappa: degenerate marginals (expected agreement is 1)");
  }
  return (p_o - p_e) / (1.0 - p_e);
}

inline AgreementResult agreement(std::span<const int> a, std::span<const int> b) {
  return AgreementResult{percent_agreement(a, b), cohen_kappa(a, b), static_cast<int>(a.size())};
}

struct BootstrapCi {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  int n_resamples = 0;
  double level = 0.95;
  std::uint64_t seed = 0;

  friend bool operator==(const BootstrapCi&, const BootstrapCi&) = default;
};

namespace detail {

// Nearest-rank percentile: smallest 1-based rank >= p * N. The small guard
// keeps float noise in p * N from bumping an exact integer rank up by one.
inline size_t nearest_rank_index(double p, size_t n) {
  double r = std::ceil(p * static_cast<double>(n) - 1e-6);
  if (r < 1.0) r = 1.0;
  if (r > static_cast<double>(n)) r = static_cast<double>(n);
  return static_cast<size_t>(r) - 1;
}

}  // namespace detail

// Percentile bootstrap over a 0/1 correctness vector: resample with
// replacement n_resamples times, take empirical percentiles of the resample
// means. Deterministic for a fixed seed.
inline BootstrapCi bootstrap_ci(std::span<const int> correct, int n_resamples, double level,
                                std::uint64_t seed) {
  if (correct.empty()) throw Error(Errc::contract, "bootstrap_ci: empty correctness vector");
  if (n_resamples < 1) throw Error(Errc::contract, "bootstrap_ci: n_resamples must be >= 1");
  if (!(level > 0.0 && level < 1.0))
    throw Error(Errc::contract, "bootstrap_ci: level must lie in (0, 1)");
  for (auto v : correct)
    if (v != 0 && v != 1)
      throw Error(Errc::contract, "bootstrap_ci: correctness entries must be 0 or 1");

  const size_t n = correct.size();
  std::uint64_t total = 0;
  for (auto v : correct) total += static_cast<std::uint64_t>(v);

  Rng rng(seed);
  std::vector<std::uint32_t> sums(static_cast<size_t>(n_resamples));
  for (auto& s : sums) {
    std::uint32_t acc = 0;
    for (size_t i = 0; i < n; ++i) acc += static_cast<std::uint32_t>(correct[rng.uniform_index(n)]);
    s = acc;
  }
  std::sort(sums.begin(), sums.end());

  BootstrapCi ci;
  ci.point = static_cast<double>(total) / static_cast<double>(n);
  ci.lower = static_cast<double>(sums[detail::nearest_rank_index((1.0 - level) / 2.0, sums.size())]) /
             static_cast<double>(n);
  ci.upper = static_cast<double>(sums[detail::nearest_rank_index((1.0 + level) / 2.0, sums.size())]) /
             static_cast<double>(n);
  ci.n_resamples = n_resamples;
  ci.level = level;
  ci.seed = seed;
  return ci;
}

// Simulated at-chance predictor: uniform random filter verdict per transcript
// and, when that filter lands on yes, a uniform random evaluation verdict.
// Each trial is scored with the same rules as a real model run (a chance
// filter miss makes the evaluation entry wrong); the returned interval holds
// percentiles of the per-trial accuracies.
inline BootstrapCi chance_baseline(const LabelSet& labels, std::string_view skill, Stage kind,
                                   int n_trials, std::uint64_t seed, double level = 0.95) {
  if (n_trials < 1) throw Error(Errc::contract, "chance_baseline: n_trials must be >= 1");
  struct Item {
    bool filter_yes;
    bool eval_yes;
  };
  std::vector<Item> items;  // entries iterate in transcript-id order
  for (const auto& [tid, skill_labels] : labels.entries) {
    (void)tid;
    for (const auto& l : skill_labels) {
      if (l.skill_id != skill) continue;
      items.push_back(Item{l.filter == Trilabel::yes,
                           l.filter == Trilabel::yes && l.evaluation == Trilabel::yes});
    }
  }
  if (items.empty())
    throw Error(Errc::contract, "chance_baseline: no labels for skill '" + std::string(skill) + "'");
  if (kind == Stage::evaluation) {
    std::erase_if(items, [](const Item& it) { return !it.filter_yes; });
    if (items.empty())
      throw Error(Errc::contract, "chance_baseline: empty conditioning set for evaluation of '" +
                                      std::string(skill) + "'");
  }

  Rng rng(seed);
  const size_t n = items.size();
  std::vector<std::uint32_t> counts(static_cast<size_t>(n_trials));
  std::uint64_t total = 0;
  for (auto& count : counts) {
    std::uint32_t c = 0;
    for (const auto& item : items) {
      const bool guess_filter_yes = rng.coin();
      if (kind == Stage::filter) {
        c += guess_filter_yes == item.filter_yes;
      } else if (guess_filter_yes) {
        c += rng.coin() == item.eval_yes;
      }
    }
    count = c;
    total += c;
  }
  std::sort(counts.begin(), counts.end());

  BootstrapCi ci;
  ci.point = static_cast<double>(total) / (static_cast<double>(n_trials) * static_cast<double>(n));
  ci.lower = static_cast<double>(counts[detail::nearest_rank_index((1.0 - level) / 2.0, counts.size())]) /
             static_cast<double>(n);
  ci.upper = static_cast<double>(counts[detail::nearest_rank_index((1.0 + level) / 2.0, counts.size())]) /
             static_cast<double>(n);
  ci.n_resamples = n_trials;
  ci.level = level;
  ci.seed = seed;
  return ci;
}

}  // namespace tutoreval
