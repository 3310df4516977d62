#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "tutoreval/consensus.hpp"
#include "tutoreval/corpus.hpp"
#include "tutoreval/llm/client.hpp"
#include "tutoreval/prompting.hpp"
#include "tutoreval/scoring.hpp"

namespace tutoreval {

struct RunFailure {
  std::string model_name;
  std::string skill_id;
  std::string transcript_id;
  Stage stage = Stage::filter;
  std::string error_code;
  std::string message;
};

struct RunOutput {
  std::vector<RunRecord> records;    // sorted by (model, skill, transcript)
  std::vector<RunFailure> failures;  // transcripts that could not be classified
};

// Environment handed to the pipeline: the response cache shared across
// models, the clock, a transport factory per model, and the fan-out width.
struct PipelineEnv {
  ResponseCache& cache;
  std::function<std::unique_ptr<Transport>(const ModelConfig&)> transport_factory;
  Clock& clock = system_clock();
  int workers = 4;
};

// Classifies one transcript with the two-stage chain: a filter verdict by
// majority vote, then either the evaluation verdict or an NA evaluation when
// the filter said no (the evaluation prompt is skipped, no calls issued).
// `stage_out`, when given, reports how far the chain got before an exception.
inline RunRecord classify_transcript(Client& client, const SkillSpec& skill,
                                     const ModelConfig& model, const ConsensusConfig& consensus,
                                     const Transcript& transcript, Stage* stage_out = nullptr) {
  RunRecord record;
  record.model_name = model.model_name;
  record.skill_id = skill.skill_id;
  record.transcript_id = transcript.id;

  if (stage_out) *stage_out = Stage::filter;
  const std::string filter_prompt = render_prompt(skill, Stage::filter, transcript);
  record.filter_verdict = self_consistent_verdict(client, filter_prompt, model, consensus);

  if (chain_stage_gate(record.filter_verdict.label) == ChainAction::run_evaluation) {
    if (stage_out) *stage_out = Stage::evaluation;
    const std::string eval_prompt = render_prompt(skill, Stage::evaluation, transcript);
    record.evaluation_verdict = self_consistent_verdict(client, eval_prompt, model, consensus);
  } else {
    record.evaluation_verdict = Verdict::not_applicable();
  }
  validate_record(record);
  return record;
}

// Runs every (model, skill, transcript) combination. Transcripts fan out
// across a bounded worker pool per model; individual failures are collected
// and the run continues. Output is sorted, so record bytes do not depend on
// worker interleaving.
inline RunOutput run_pipeline(const Corpus& corpus, const std::vector<SkillSpec>& skills,
                              const std::vector<ModelConfig>& models,
                              const ConsensusConfig& consensus, const PipelineEnv& env,
                              const std::function<void(const RunRecord&)>& on_record = {}) {
  if (env.workers < 1) throw Error(Errc::config, "workers must be >= 1");
  RunOutput output;
  std::mutex out_mu;

  for (const ModelConfig& model : models) {
    model.validate();
    Client client(env.transport_factory(model), env.cache, env.clock);

    struct Task {
      const SkillSpec* skill;
      const Transcript* transcript;
    };
    std::vector<Task> tasks;
    for (const auto& skill : skills)
      for (const auto& transcript : corpus.transcripts) tasks.push_back({&skill, &transcript});

    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        const Task& task = tasks[i];
        Stage stage = Stage::filter;
        try {
          RunRecord record =
              classify_transcript(client, *task.skill, model, consensus, *task.transcript, &stage);
          std::lock_guard<std::mutex> lock(out_mu);
          if (on_record) on_record(record);
          output.records.push_back(std::move(record));
        } catch (const Error& e) {
          std::lock_guard<std::mutex> lock(out_mu);
          output.failures.push_back(RunFailure{model.model_name, task.skill->skill_id,
                                               task.transcript->id, stage, errc_name(e.code()),
                                               e.what()});
        }
      }
    };

    const size_t n_threads = std::min(static_cast<size_t>(env.workers), tasks.size());
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(n_threads);
      for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
  }

  sort_records(output.records);
  std::sort(output.failures.begin(), output.failures.end(),
            [](const RunFailure& a, const RunFailure& b) {
              return std::tie(a.model_name, a.skill_id, a.transcript_id) <
                     std::tie(b.model_name, b.skill_id, b.transcript_id);
            });
  return output;
}

// Decorator that tees every successful completion into a fixture map keyed by
// prompt digest. Drive a run through it with a cold in-memory cache to turn
// live responses into mock fixtures.
class RecordingTransport final : public Transport {
 public:
  explicit RecordingTransport(std::unique_ptr<Transport> inner) : inner_(std::move(inner)) {}

  TransportReply send(const std::string& prompt, const ModelConfig& config,
                      int sample_index) override {
    TransportReply reply = inner_->send(prompt, config, sample_index);
    if (reply.status == TransportStatus::ok) {
      const std::string digest = sha256_hex(prompt);
      std::lock_guard<std::mutex> lock(mu_);
      auto& candidates = fixtures_[digest];
      if (std::find(candidates.begin(), candidates.end(), reply.text) == candidates.end())
        candidates.push_back(reply.text);
    }
    return reply;
  }

  bool is_remote() const override { return inner_->is_remote(); }

  FixtureMap fixtures() const {
    std::lock_guard<std::mutex> lock(mu_);
    return fixtures_;
  }

 private:
  std::unique_ptr<Transport> inner_;
  mutable std::mutex mu_;
  FixtureMap fixtures_;
};

}  // namespace tutoreval
