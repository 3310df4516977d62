#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutoreval/corpus.hpp"
#include "tutoreval/prompting.hpp"
#include "tutoreval/types.hpp"

namespace tutoreval {

struct RunRecord {
  std::string model_name;
  std::string skill_id;
  std::string transcript_id;
  Verdict filter_verdict;
  Verdict evaluation_verdict;
};

// Invariant from the chain rule: the evaluation is NA exactly when the filter
// answered no.
inline void validate_record(const RunRecord& r) {
  if (r.filter_verdict.label == Trilabel::not_applicable)
    throw Error(Errc::contract, "record " + r.transcript_id + ": filter verdict must be yes or no");
  const bool filter_no = r.filter_verdict.label == Trilabel::no;
  const bool eval_na = r.evaluation_verdict.label == Trilabel::not_applicable;
  if (filter_no != eval_na)
    throw Error(Errc::contract, "record " + r.transcript_id +
                                    ": evaluation must be NA exactly when the filter verdict is no");
}

struct ScoreCell {
  int points = 0;  // 0, 1, or 2
};

// Per-transcript agreement points: 2 when the chain agrees end to end (a
// joint filter-no also earns 2, the evaluation being skipped by design),
// 1 when only the filter matches, 0 when the filters disagree.
inline ScoreCell score_transcript(const SkillLabel& human, const RunRecord& record) {
  if (human.skill_id != record.skill_id)
    throw Error(Errc::contract, "score_transcript: skill mismatch (" + human.skill_id + " vs " +
                                    record.skill_id + ")");
  validate_record(record);
  if (human.filter == Trilabel::not_applicable)
    throw Error(Errc::contract, "score_transcript: human filter label must be yes or no");
  if ((human.filter == Trilabel::no) != (human.evaluation == Trilabel::not_applicable))
    throw Error(Errc::contract, "score_transcript: human label violates the skip rule");

  if (human.filter != record.filter_verdict.label) return ScoreCell{0};
  if (human.filter == Trilabel::no) return ScoreCell{2};
  return ScoreCell{human.evaluation == record.evaluation_verdict.label ? 2 : 1};
}

inline int total_score(const std::vector<ScoreCell>& cells) {
  int sum = 0;
  for (const auto& c : cells) sum += c.points;
  return sum;
}

// Binary correctness entries for one (model, skill) record set.
//   filter:     one entry per record, 1 when filter labels match.
//   evaluation: one entry per record whose HUMAN filter is yes, 1 when the
//               evaluation labels match; a model that filtered no (so its
//               evaluation is NA) scores 0 on that entry.
// Records are ordered by transcript id so the vector layout is deterministic.
inline std::vector<int> correctness_vector(const LabelSet& human_labels,
                                           const std::vector<RunRecord>& records, Stage prompt_kind,
                                           std::string_view skill) {
  std::vector<const RunRecord*> selected;
  for (const auto& r : records)
    if (r.skill_id == skill) selected.push_back(&r);
  std::sort(selected.begin(), selected.end(),
            [](const RunRecord* a, const RunRecord* b) { return a->transcript_id < b->transcript_id; });

  std::set<std::string> seen;
  std::string model_name;
  std::vector<int> out;
  for (const RunRecord* r : selected) {
    if (model_name.empty()) model_name = r->model_name;
    if (r->model_name != model_name)
      throw Error(Errc::contract, "correctness_vector: records mix models ('" + model_name +
                                      "' and '" + r->model_name + "')");
    if (!seen.insert(r->transcript_id).second)
      throw Error(Errc::contract,
                  "correctness_vector: duplicate record for transcript " + r->transcript_id);
    validate_record(*r);
    const SkillLabel* human = human_labels.find(r->transcript_id, skill);
    if (human == nullptr)
      throw Error(Errc::contract, "correctness_vector: missing human label for transcript " +
                                      r->transcript_id + ", skill " + std::string(skill));
    if (prompt_kind == Stage::filter) {
      out.push_back(human->filter == r->filter_verdict.label ? 1 : 0);
    } else if (human->filter == Trilabel::yes) {
      out.push_back(human->evaluation == r->evaluation_verdict.label ? 1 : 0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Record persistence (newline-delimited JSON)
// ---------------------------------------------------------------------------

inline nlohmann::json verdict_to_json(const Verdict& v) {
  nlohmann::json j;
  j["label"] = label_to_string(v.label);
  if (v.rationale) j["rationale"] = *v.rationale;
  if (!v.samples.empty()) j["samples"] = v.samples;
  return j;
}

inline Verdict verdict_from_json(const nlohmann::json& j) {
  Verdict v;
  v.label = label_from_string(j.at("label").get<std::string>());
  if (j.contains("rationale")) v.rationale = j["rationale"].get<std::string>();
  if (j.contains("samples")) v.samples = j["samples"].get<std::vector<std::string>>();
  return v;
}

inline nlohmann::json record_to_json(const RunRecord& r) {
  nlohmann::json j;
  j["model"] = r.model_name;
  j["skill"] = r.skill_id;
  j["transcript"] = r.transcript_id;
  j["filter"] = verdict_to_json(r.filter_verdict);
  j["evaluation"] = verdict_to_json(r.evaluation_verdict);
  return j;
}

inline RunRecord record_from_json(const nlohmann::json& j) {
  RunRecord r;
  r.model_name = j.at("model").get<std::string>();
  r.skill_id = j.at("skill").get<std::string>();
  r.transcript_id = j.at("transcript").get<std::string>();
  r.filter_verdict = verdict_from_json(j.at("filter"));
  r.evaluation_verdict = verdict_from_json(j.at("evaluation"));
  validate_record(r);
  return r;
}

inline void sort_records(std::vector<RunRecord>& records) {
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.model_name, a.skill_id, a.transcript_id) <
           std::tie(b.model_name, b.skill_id, b.transcript_id);
  });
}

inline void write_records(const std::filesystem::path& path, std::vector<RunRecord> records) {
  sort_records(records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::config, "cannot write records file: " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

inline std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::config, "cannot open records file: " + path.string());
  std::vector<RunRecord> records;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    try {
      records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::contract,
                  "bad record at " + path.string() + ":" + std::to_string(row) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace tutoreval
