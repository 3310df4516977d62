// tutoreval: classify tutor moves in tutoring transcripts with a two-stage
// LLM prompt chain, score the verdicts against human labels, and report
// bootstrap accuracy intervals.

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tutoreval/tutoreval.hpp"

namespace te = tutoreval;
namespace fs = std::filesystem;

namespace {

// "provider:name" or a bare name; bare names infer the wire dialect.
te::ModelConfig parse_model_flag(const std::string& raw) {
  std::string provider, name = raw;
  if (auto colon = raw.find(':'); colon != std::string::npos) {
    provider = raw.substr(0, colon);
    name = raw.substr(colon + 1);
  }
  if (name.empty()) throw te::Error(te::Errc::config, "empty model name in '" + raw + "'");
  if (provider.empty()) {
    if (name == "mock" || name.starts_with("mock-"))
      provider = "mock";
    else if (name.starts_with("gemini") || name.starts_with("learnlm"))
      provider = "gemini";
    else
      provider = "openai";
  }
  te::ModelConfig cfg;
  cfg.provider = te::provider_from_string(provider);
  cfg.model_name = name;
  return cfg;
}

te::Corpus load_corpus_or_die(const std::string& dir, bool print_errors) {
  te::LoadResult loaded = te::load_corpus(dir);
  if (print_errors)
    for (const auto& e : loaded.errors) std::cerr << "error: " << e.path << ": " << e.message << "\n";
  return std::move(loaded.corpus);
}

std::vector<te::SkillSpec> resolve_skills(const std::string& manifest,
                                          const std::vector<std::string>& only) {
  std::vector<te::SkillSpec> skills =
      manifest.empty() ? te::default_skills() : te::load_skills(manifest);
  if (only.empty()) return skills;
  std::vector<te::SkillSpec> picked;
  for (const auto& id : only) {
    bool found = false;
    for (const auto& s : skills)
      if (s.skill_id == id) {
        picked.push_back(s);
        found = true;
      }
    if (!found) throw te::Error(te::Errc::config, "unknown skill '" + id + "'");
  }
  return picked;
}

std::string utc_stamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw te::Error(te::Errc::config, "cannot write " + path.string());
  out << text;
}

// Options shared by `run` and `record-fixtures`.
struct RunFlags {
  std::string corpus;
  std::string skills_manifest;
  std::vector<std::string> models;
  std::vector<std::string> only_skills;
  int samples = 5;
  double temperature = 0.7;
  double min_valid_fraction = 0.6;
  int workers = 4;
  int rpm = 60;
  int max_retries = 5;
  int max_output_tokens = 1024;
  std::string mock_fixtures;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--corpus", f.corpus, "transcript directory")->required();
  cmd->add_option("--skills", f.skills_manifest, "skill manifest JSON (default: built-in skills)");
  cmd->add_option("--model", f.models, "model as provider:name or bare name (repeatable)")
      ->required();
  cmd->add_option("--skill", f.only_skills, "restrict to these skill ids (repeatable)");
  cmd->add_option("--samples", f.samples, "self-consistency samples per verdict (odd)");
  cmd->add_option("--temperature", f.temperature, "sampling temperature for consensus");
  cmd->add_option("--min-valid-fraction", f.min_valid_fraction,
                  "minimum fraction of parseable samples per verdict");
  cmd->add_option("--workers", f.workers, "transcript fan-out width");
  cmd->add_option("--rpm", f.rpm, "request-rate ceiling per model (requests/minute)");
  cmd->add_option("--max-retries", f.max_retries, "retry budget per request");
  cmd->add_option("--max-output-tokens", f.max_output_tokens, "completion length cap");
  cmd->add_option("--mock-fixtures", f.mock_fixtures, "fixture file for the mock provider");
}

struct Prepared {
  te::Corpus corpus;
  std::vector<te::SkillSpec> skills;
  std::vector<te::ModelConfig> models;
  te::ConsensusConfig consensus;
};

Prepared prepare(const RunFlags& f) {
  Prepared p{load_corpus_or_die(f.corpus, true),
             resolve_skills(f.skills_manifest, f.only_skills),
             {},
             te::ConsensusConfig(f.samples, f.temperature, f.min_valid_fraction)};
  if (p.corpus.transcripts.empty())
    throw te::Error(te::Errc::config, "corpus directory has no transcripts: " + f.corpus);
  for (const auto& raw : f.models) {
    te::ModelConfig m = parse_model_flag(raw);
    m.requests_per_minute = f.rpm;
    m.max_retries = f.max_retries;
    m.max_output_tokens = f.max_output_tokens;
    m.validate();
    p.models.push_back(std::move(m));
  }
  return p;
}

int cmd_ingest(const std::string& corpus_dir, std::uint64_t min_bytes, std::uint64_t max_bytes) {
  te::LoadResult loaded = te::load_corpus(corpus_dir);
  for (const auto& e : loaded.errors) std::cout << "error: " << e.path << ": " << e.message << "\n";
  const te::Corpus kept = te::filter_by_size(loaded.corpus, min_bytes, max_bytes);
  std::cout << "kept " << kept.size() << ", dropped " << (loaded.corpus.size() - kept.size())
            << "\n";
  return 0;
}

int cmd_run(const RunFlags& flags, const std::string& cache_flag, const std::string& out_dir) {
  Prepared p = prepare(flags);
  fs::create_directories(out_dir);

  const fs::path cache_path = cache_flag.empty() ? fs::path(out_dir) / "cache.ndjson"
                                                 : fs::path(cache_flag);
  te::ResponseCache cache(cache_path);

  const fs::path records_path = fs::path(out_dir) / "records.ndjson";
  std::ofstream live(records_path, std::ios::binary | std::ios::trunc);
  if (!live) throw te::Error(te::Errc::config, "cannot write " + records_path.string());

  te::PipelineEnv env{cache,
                      [&](const te::ModelConfig& m) { return te::make_transport(m, flags.mock_fixtures); },
                      te::system_clock(), flags.workers};
  te::RunOutput result =
      te::run_pipeline(p.corpus, p.skills, p.models, p.consensus, env,
                       [&](const te::RunRecord& r) {
                         live << te::record_to_json(r).dump() << "\n";
                         live.flush();
                       });
  live.close();
  te::write_records(records_path, result.records);  // same records, sorted

  std::cout << "wrote " << result.records.size() << " records to " << records_path.string()
            << "\n";
  if (!result.failures.empty()) {
    const fs::path failures_path = fs::path(out_dir) / "failures.ndjson";
    std::ofstream fail(failures_path, std::ios::binary | std::ios::trunc);
    for (const auto& f : result.failures) {
      nlohmann::json j{{"model", f.model_name},       {"skill", f.skill_id},
                       {"transcript", f.transcript_id}, {"stage", te::stage_name(f.stage)},
                       {"error", f.error_code},         {"message", f.message}};
      fail << j.dump() << "\n";
    }
    std::cout << result.failures.size() << " transcript(s) failed; details in "
              << failures_path.string() << "\n";
    return 1;
  }
  return 0;
}

int cmd_report(const std::string& corpus_dir, const std::string& records_path,
               const std::string& labels_path, const te::StatsConfig& stats,
               const std::string& out_dir) {
  const te::Corpus corpus = load_corpus_or_die(corpus_dir, true);
  const te::LabelSet labels = te::import_labels(labels_path, corpus);
  const std::vector<te::RunRecord> records = te::read_records(records_path);

  const te::AccuracyReport report = te::build_report(records, labels, stats);

  const std::string digest = te::sha256_hex(
      "records=" + records_path + "\nlabels=" + labels_path + "\nresamples=" +
      std::to_string(stats.n_resamples) + "\nlevel=" + te::detail::full_precision(stats.level) +
      "\nseed=" + std::to_string(stats.seed) + "\nchance_trials=" +
      std::to_string(stats.chance_trials));
  const fs::path run_dir = fs::path(out_dir) / (utc_stamp() + "-" + digest.substr(0, 8));
  fs::create_directories(run_dir);

  const std::string markdown = te::render(report, te::ReportFormat::markdown);
  write_text_file(run_dir / "report.md", markdown);
  write_text_file(run_dir / "report.csv", te::render(report, te::ReportFormat::csv));
  write_text_file(run_dir / "report.json", te::render(report, te::ReportFormat::json));

  std::cout << markdown << "written: " << run_dir.string() << "\n";
  return 0;
}

int cmd_agreement(const std::string& corpus_dir, const std::string& a_path,
                  const std::string& b_path, const std::string& skill, te::Stage kind) {
  const te::Corpus corpus = load_corpus_or_die(corpus_dir, true);
  const te::LabelSet a = te::import_labels(a_path, corpus);
  const te::LabelSet b = te::import_labels(b_path, corpus);

  std::set<std::string> a_tids, b_tids;
  for (const auto& [tid, labels] : a.entries)
    for (const auto& l : labels)
      if (l.skill_id == skill) a_tids.insert(tid);
  for (const auto& [tid, labels] : b.entries)
    for (const auto& l : labels)
      if (l.skill_id == skill) b_tids.insert(tid);
  if (a_tids.empty() || b_tids.empty())
    throw te::Error(te::Errc::contract, "no labels for skill '" + skill + "' in one of the files");
  if (a_tids != b_tids)
    throw te::Error(te::Errc::contract,
                    "label files cover different transcripts for skill '" + skill + "' (" +
                        std::to_string(a_tids.size()) + " vs " + std::to_string(b_tids.size()) +
                        " ids, differing sets)");

  std::vector<int> va, vb;
  for (const auto& tid : a_tids) {
    const te::SkillLabel* la = a.find(tid, skill);
    const te::SkillLabel* lb = b.find(tid, skill);
    if (kind == te::Stage::filter) {
      va.push_back(te::label_to_int(la->filter));
      vb.push_back(te::label_to_int(lb->filter));
    } else if (la->filter == te::Trilabel::yes && lb->filter == te::Trilabel::yes) {
      // The human-human rule: evaluation agreement is computed only where
      // both raters said the filter condition was met.
      va.push_back(te::label_to_int(la->evaluation));
      vb.push_back(te::label_to_int(lb->evaluation));
    }
  }
  if (va.empty())
    throw te::Error(te::Errc::contract,
                    "no transcript has filter = yes from both raters for skill '" + skill + "'");

  const te::AgreementResult res = te::agreement(va, vb);
  char kappa_buf[32];
  std::snprintf(kappa_buf, sizeof(kappa_buf), "%.4f", res.kappa);
  std::cout << "skill: " << skill << "\nkind: " << te::stage_name(kind)
            << "\nitems: " << res.n_items << "\npercent agreement: "
            << te::detail::display_percent(res.percent_agreement) << "% ("
            << te::detail::full_precision(res.percent_agreement) << ")\ncohen kappa: " << kappa_buf
            << "\n";
  return 0;
}

// Forwards to a transport somebody else owns. The pipeline destroys the
// transports it is handed, so anything we need to read after the run (the
// recorder below) must live out here and only be lent to it.
class BorrowedTransport final : public te::Transport {
 public:
  explicit BorrowedTransport(te::Transport& inner) : inner_(inner) {}
  te::TransportReply send(const std::string& prompt, const te::ModelConfig& config,
                          int sample_index) override {
    return inner_.send(prompt, config, sample_index);
  }
  bool is_remote() const override { return inner_.is_remote(); }

 private:
  te::Transport& inner_;
};

int cmd_record_fixtures(const RunFlags& flags, const std::string& out_path) {
  Prepared p = prepare(flags);
  if (p.models.size() != 1)
    throw te::Error(te::Errc::config, "record-fixtures takes exactly one --model");

  te::ResponseCache scratch;  // memory-only: every response must come off the wire
  te::RecordingTransport recorder(te::make_transport(p.models[0], flags.mock_fixtures));
  te::PipelineEnv env{scratch,
                      [&](const te::ModelConfig&) -> std::unique_ptr<te::Transport> {
                        return std::make_unique<BorrowedTransport>(recorder);
                      },
                      te::system_clock(), flags.workers};
  te::RunOutput result = te::run_pipeline(p.corpus, p.skills, p.models, p.consensus, env);

  const te::FixtureMap captured = recorder.fixtures();
  te::write_fixtures(out_path, captured);
  std::cout << "recorded " << captured.size() << " prompt fixtures to " << out_path << "\n";
  if (!result.failures.empty()) {
    std::cout << result.failures.size() << " transcript(s) failed during capture\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tutor-move classification pipeline"};
  app.require_subcommand(1);
  // One config file for the whole tool; keys live in a section named after
  // the subcommand ([run], [report], ...). Command-line flags win.
  app.set_config("--config", "", "read options from a config file");
  int rc = 0;

  // ingest
  std::string ingest_corpus;
  std::uint64_t min_bytes = te::kDefaultMinBytes, max_bytes = te::kDefaultMaxBytes;
  auto* ingest = app.add_subcommand("ingest", "load a corpus and preview the size filter");
  ingest->add_option("--corpus", ingest_corpus, "transcript directory")->required();
  ingest->add_option("--min-bytes", min_bytes, "minimum transcript size (bytes)");
  ingest->add_option("--max-bytes", max_bytes, "maximum transcript size (bytes)");
  ingest->callback([&] { rc = cmd_ingest(ingest_corpus, min_bytes, max_bytes); });

  // run
  RunFlags run_flags;
  std::string run_cache, run_out = "runs";
  auto* run = app.add_subcommand("run", "classify every (model, skill, transcript)");
  add_run_flags(run, run_flags);
  run->add_option("--cache", run_cache, "response cache file (default: <out>/cache.ndjson)");
  run->add_option("--out", run_out, "output directory");
  run->callback([&] { rc = cmd_run(run_flags, run_cache, run_out); });

  // report
  std::string rep_corpus, rep_records, rep_labels, rep_out = "runs";
  te::StatsConfig stats;
  auto* report = app.add_subcommand("report", "score records against labels and render tables");
  report->add_option("--corpus", rep_corpus, "transcript directory")->required();
  report->add_option("--records", rep_records, "records file from a run")->required();
  report->add_option("--labels", rep_labels, "human label CSV")->required();
  report->add_option("--resamples", stats.n_resamples, "bootstrap resamples");
  report->add_option("--level", stats.level, "confidence level");
  report->add_option("--seed", stats.seed, "statistics seed");
  report->add_option("--chance-trials", stats.chance_trials, "simulated at-chance trials");
  report->add_option("--out", rep_out, "output directory");
  report->callback([&] { rc = cmd_report(rep_corpus, rep_records, rep_labels, stats, rep_out); });

  // agreement
  std::string agr_corpus, agr_a, agr_b, agr_skill, agr_kind = "filter";
  auto* agreement = app.add_subcommand("agreement", "inter-rater agreement between two label files");
  agreement->add_option("--corpus", agr_corpus, "transcript directory")->required();
  agreement->add_option("--labels-a", agr_a, "first rater's label CSV")->required();
  agreement->add_option("--labels-b", agr_b, "second rater's label CSV")->required();
  agreement->add_option("--skill", agr_skill, "skill id")->required();
  agreement->add_option("--kind", agr_kind, "filter or evaluation")
      ->check(CLI::IsMember({"filter", "evaluation"}));
  agreement->callback([&] {
    rc = cmd_agreement(agr_corpus, agr_a, agr_b, agr_skill,
                       agr_kind == "filter" ? te::Stage::filter : te::Stage::evaluation);
  });

  // record-fixtures
  RunFlags rec_flags;
  std::string rec_out;
  auto* record = app.add_subcommand("record-fixtures", "capture live responses as mock fixtures");
  add_run_flags(record, rec_flags);
  record->add_option("--out", rec_out, "fixture JSON to write")->required();
  record->callback([&] { rc = cmd_record_fixtures(rec_flags, rec_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const te::Error& e) {
    std::cerr << "error (" << te::errc_name(e.code()) << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
