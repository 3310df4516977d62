#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutoreval/scoring.hpp"
#include "tutoreval/stats.hpp"

namespace tutoreval {

// Name the simulated uniform-guessing baseline appears under in reports.
inline constexpr const char* kChanceModelName = "at-chance";

struct StatsConfig {
  int n_resamples = 10'000;
  double level = 0.95;
  std::uint64_t seed = 42;
  int chance_trials = 10'000;

  void validate() const {
    if (n_resamples < 1) throw Error(Errc::config, "n_resamples must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw Error(Errc::config, "level must lie in (0, 1)");
    if (chance_trials < 1) throw Error(Errc::config, "chance_trials must be >= 1");
  }

  friend bool operator==(const StatsConfig&, const StatsConfig&) = default;
};

struct ReportRow {
  std::string model_name;
  std::string skill_id;
  BootstrapCi filter_ci;
  BootstrapCi evaluation_ci;
  // Agreement points over the scored transcripts; max_points = 2 x their
  // count. Chance rows carry 0/0 — the baseline guesses, it is not scored.
  int total_points = 0;
  int max_points = 0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct AccuracyReport {
  StatsConfig stats;
  std::vector<ReportRow> rows;         // one per (model, skill), sorted
  std::vector<ReportRow> chance_rows;  // one per skill

  friend bool operator==(const AccuracyReport&, const AccuracyReport&) = default;
};

// Builds the full accuracy report: per (model, skill) a bootstrap CI for the
// filter and evaluation correctness vectors plus the agreement-point total,
// and per skill a simulated at-chance row. Every bootstrap draws from its own
// seed substream, so rows do not depend on each other or on assembly order.
inline AccuracyReport build_report(const std::vector<RunRecord>& records, const LabelSet& labels,
                                   const StatsConfig& stats) {
  stats.validate();
  if (records.empty()) throw Error(Errc::contract, "build_report: no records");

  std::map<std::pair<std::string, std::string>, std::vector<RunRecord>> groups;
  for (const auto& r : records) groups[{r.model_name, r.skill_id}].push_back(r);

  AccuracyReport report;
  report.stats = stats;
  std::set<std::string> skills;

  for (const auto& [key, group] : groups) {
    const auto& [model, skill] = key;
    skills.insert(skill);

    // Every transcript labeled for this skill must have a record.
    std::set<std::string> covered;
    for (const auto& r : group) covered.insert(r.transcript_id);
    std::vector<std::string> missing;
    for (const auto& [tid, skill_labels] : labels.entries)
      for (const auto& l : skill_labels)
        if (l.skill_id == skill && !covered.count(tid)) missing.push_back(tid);
    if (!missing.empty()) {
      std::string ids;
      for (const auto& tid : missing) ids += (ids.empty() ? "" : ", ") + tid;
      throw Error(Errc::contract, "build_report: no record from model '" + model +
                                      "' for labeled transcript(s) of skill '" + skill +
                                      "': " + ids);
    }

    ReportRow row;
    row.model_name = model;
    row.skill_id = skill;
    const auto fv = correctness_vector(labels, group, Stage::filter, skill);
    const auto ev = correctness_vector(labels, group, Stage::evaluation, skill);
    row.filter_ci = bootstrap_ci(fv, stats.n_resamples, stats.level,
                                 derive_seed(stats.seed, model + "/" + skill + "/filter"));
    row.evaluation_ci = bootstrap_ci(ev, stats.n_resamples, stats.level,
                                     derive_seed(stats.seed, model + "/" + skill + "/evaluation"));
    for (const auto& r : group) {
      const SkillLabel* human = labels.find(r.transcript_id, skill);
      row.total_points += score_transcript(*human, r).points;
    }
    row.max_points = 2 * static_cast<int>(group.size());
    report.rows.push_back(std::move(row));
  }

  for (const auto& skill : skills) {
    ReportRow row;
    row.model_name = kChanceModelName;
    row.skill_id = skill;
    row.filter_ci = chance_baseline(labels, skill, Stage::filter, stats.chance_trials,
                                    derive_seed(stats.seed, "chance/" + skill + "/filter"),
                                    stats.level);
    row.evaluation_ci = chance_baseline(labels, skill, Stage::evaluation, stats.chance_trials,
                                        derive_seed(stats.seed, "chance/" + skill + "/evaluation"),
                                        stats.level);
    report.chance_rows.push_back(std::move(row));
  }
  return report;
}

enum class ReportFormat { markdown, csv, json };

namespace detail {

// Integer percent for display, half-up.
inline int display_percent(double x) { return static_cast<int>(std::floor(x * 100.0 + 0.5)); }

// Shortest decimal string that parses back to the same double.
inline std::string full_precision(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, end);
}

inline std::string ci_cell(const BootstrapCi& ci) {
  return std::to_string(display_percent(ci.point)) + ", (" +
         std::to_string(display_percent(ci.lower)) + ", " +
         std::to_string(display_percent(ci.upper)) + ")";
}

inline nlohmann::json ci_to_json(const BootstrapCi& ci) {
  return nlohmann::json{{"point", ci.point},     {"lower", ci.lower},
                        {"upper", ci.upper},     {"n_resamples", ci.n_resamples},
                        {"level", ci.level},     {"seed", ci.seed}};
}

inline BootstrapCi ci_from_json(const nlohmann::json& j) {
  BootstrapCi ci;
  ci.point = j.at("point").get<double>();
  ci.lower = j.at("lower").get<double>();
  ci.upper = j.at("upper").get<double>();
  ci.n_resamples = j.at("n_resamples").get<int>();
  ci.level = j.at("level").get<double>();
  ci.seed = j.at("seed").get<std::uint64_t>();
  return ci;
}

inline nlohmann::json row_to_json(const ReportRow& row) {
  return nlohmann::json{{"model", row.model_name},
                        {"skill", row.skill_id},
                        {"filter", ci_to_json(row.filter_ci)},
                        {"evaluation", ci_to_json(row.evaluation_ci)},
                        {"total_points", row.total_points},
                        {"max_points", row.max_points}};
}

inline ReportRow row_from_json(const nlohmann::json& j) {
  ReportRow row;
  row.model_name = j.at("model").get<std::string>();
  row.skill_id = j.at("skill").get<std::string>();
  row.filter_ci = ci_from_json(j.at("filter"));
  row.evaluation_ci = ci_from_json(j.at("evaluation"));
  row.total_points = j.at("total_points").get<int>();
  row.max_points = j.at("max_points").get<int>();
  return row;
}

inline std::string render_markdown(const AccuracyReport& report) {
  // Columns: per skill a filter cell, an evaluation cell, and a points cell.
  std::set<std::string> skills;
  for (const auto& row : report.rows) skills.insert(row.skill_id);
  for (const auto& row : report.chance_rows) skills.insert(row.skill_id);

  std::map<std::pair<std::string, std::string>, const ReportRow*> by_key;
  std::vector<std::string> model_order;
  auto note = [&](const ReportRow& row) {
    if (by_key.emplace(std::make_pair(row.model_name, row.skill_id), &row).second &&
        std::find(model_order.begin(), model_order.end(), row.model_name) == model_order.end())
      model_order.push_back(row.model_name);
  };
  for (const auto& row : report.rows) note(row);
  for (const auto& row : report.chance_rows) note(row);

  std::ostringstream out;
  out << "| Model |";
  for (const auto& skill : skills)
    out << ' ' << skill << " filter | " << skill << " evaluation | " << skill << " points |";
  out << "\n|---|";
  for (size_t i = 0; i < skills.size(); ++i) out << "---|---|---|";
  out << '\n';
  for (const auto& model : model_order) {
    out << "| " << model << " |";
    for (const auto& skill : skills) {
      auto it = by_key.find({model, skill});
      if (it == by_key.end()) {
        out << " — | — | — |";
        continue;
      }
      const ReportRow& row = *it->second;
      out << ' ' << ci_cell(row.filter_ci) << " | " << ci_cell(row.evaluation_ci) << " | ";
      if (row.max_points > 0)
        out << row.total_points << '/' << row.max_points << " |";
      else
        out << "— |";
    }
    out << '\n';
  }
  return std::move(out).str();
}

inline void render_csv_row(std::ostringstream& out, const ReportRow& row, const char* kind) {
  out << row.model_name << ',' << row.skill_id << ',' << kind;
  for (const BootstrapCi* ci : {&row.filter_ci, &row.evaluation_ci})
    out << ',' << full_precision(ci->point) << ',' << full_precision(ci->lower) << ','
        << full_precision(ci->upper);
  out << ',' << row.total_points << ',' << row.max_points << '\n';
}

inline std::string render_csv(const AccuracyReport& report) {
  std::ostringstream out;
  out << "model,skill,kind,filter_point,filter_lower,filter_upper,"
         "evaluation_point,evaluation_lower,evaluation_upper,total_points,max_points\n";
  for (const auto& row : report.rows) render_csv_row(out, row, "model");
  for (const auto& row : report.chance_rows) render_csv_row(out, row, "chance");
  return std::move(out).str();
}

inline std::string render_json(const AccuracyReport& report) {
  nlohmann::json j;
  j["stats"] = {{"n_resamples", report.stats.n_resamples},
                {"level", report.stats.level},
                {"seed", report.stats.seed},
                {"chance_trials", report.stats.chance_trials}};
  j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows) j["rows"].push_back(row_to_json(row));
  j["chance_rows"] = nlohmann::json::array();
  for (const auto& row : report.chance_rows) j["chance_rows"].push_back(row_to_json(row));
  return j.dump(2) + "\n";
}

}  // namespace detail

inline std::string render(const AccuracyReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::markdown:
      return detail::render_markdown(report);
    case ReportFormat::csv:
      return detail::render_csv(report);
    case ReportFormat::json:
      return detail::render_json(report);
  }
  throw Error(Errc::contract, "render: unknown format");
}

// Inverse of render(JSON): parse_report(render(r, JSON)) == r.
inline AccuracyReport parse_report(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::contract, std::string("parse_report: ") + e.what());
  }
  try {
    AccuracyReport report;
    report.stats.n_resamples = j.at("stats").at("n_resamples").get<int>();
    report.stats.level = j.at("stats").at("level").get<double>();
    report.stats.seed = j.at("stats").at("seed").get<std::uint64_t>();
    report.stats.chance_trials = j.at("stats").at("chance_trials").get<int>();
    for (const auto& row : j.at("rows")) report.rows.push_back(detail::row_from_json(row));
    for (const auto& row : j.at("chance_rows"))
      report.chance_rows.push_back(detail::row_from_json(row));
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::contract, std::string("parse_report: ") + e.what());
  }
}

}  // namespace tutoreval
