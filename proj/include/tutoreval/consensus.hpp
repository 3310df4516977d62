#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tutoreval/llm/client.hpp"
#include "tutoreval/prompting.hpp"
#include "tutoreval/types.hpp"

namespace tutoreval {

// Self-consistency settings. Odd sample counts keep ties impossible while
// every sample parses.
struct ConsensusConfig {
  ConsensusConfig(int n_samples = 5, double temperature = 0.7, double min_valid_fraction = 0.6)
      : n_samples(n_samples), temperature(temperature), min_valid_fraction(min_valid_fraction) {
    if (n_samples < 1 || n_samples % 2 == 0)
      throw Error(Errc::config, "n_samples must be an odd positive integer");
    if (!(temperature > 0.0)) throw Error(Errc::config, "consensus temperature must be > 0");
    if (!(min_valid_fraction > 0.0 && min_valid_fraction <= 1.0))
      throw Error(Errc::config, "min_valid_fraction must lie in (0, 1]");
  }

  int n_samples;
  double temperature;
  double min_valid_fraction;
};

// Strict majority over parsed labels; nullopt on a tie (reachable only after
// unparseable samples were discarded).
inline std::optional<Trilabel> majority_label(const std::vector<Trilabel>& labels) {
  int yes = 0, no = 0;
  for (Trilabel l : labels) {
    if (l == Trilabel::yes) ++yes;
    else if (l == Trilabel::no) ++no;
    else throw Error(Errc::contract, "majority_label: labels must be yes or no");
  }
  if (yes == no) return std::nullopt;
  return yes > no ? Trilabel::yes : Trilabel::no;
}

// Samples the prompt n_samples times at the consensus temperature and takes
// the majority of the parsed labels. Unparseable samples are discarded (a
// formatting failure says nothing about the transcript); min_valid_fraction
// bounds how much discarding is tolerated. The surfaced rationale belongs to
// the first sample that agrees with the majority.
inline Verdict self_consistent_verdict(Client& client, const std::string& prompt,
                                       const ModelConfig& model, const ConsensusConfig& cfg) {
  ModelConfig sampling = model;
  sampling.temperature = cfg.temperature;

  Verdict verdict;
  std::vector<std::optional<ParsedVerdict>> parsed;
  parsed.reserve(cfg.n_samples);
  for (int i = 0; i < cfg.n_samples; ++i) {
    verdict.samples.push_back(client.complete(prompt, sampling, i));
    parsed.push_back(try_parse_verdict(verdict.samples.back()));
  }

  std::vector<Trilabel> labels;
  for (const auto& p : parsed)
    if (p) labels.push_back(p->label);

  if (static_cast<double>(labels.size()) <
      cfg.min_valid_fraction * static_cast<double>(cfg.n_samples))
    throw Error(Errc::consensus_failure,
                "only " + std::to_string(labels.size()) + " of " + std::to_string(cfg.n_samples) +
                    " samples parsed (min_valid_fraction " +
                    std::to_string(cfg.min_valid_fraction) + ")");
  auto majority = majority_label(labels);
  if (!majority)
    throw Error(Errc::consensus_failure, "parsed labels tied " + std::to_string(labels.size() / 2) +
                                             "-" + std::to_string(labels.size() / 2) +
                                             " after discarding unparseable samples");
  verdict.label = *majority;
  for (const auto& p : parsed) {
    if (p && p->label == *majority) {
      verdict.rationale = p->rationale;
      break;
    }
  }
  return verdict;
}

}  // namespace tutoreval
