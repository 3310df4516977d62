#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutoreval/corpus.hpp"
#include "tutoreval/types.hpp"

namespace tutoreval {

inline constexpr std::string_view kTranscriptPlaceholder = "{{TRANSCRIPT}}";

// Appended to every rendered prompt so responses carry a machine-parseable
// final line.
inline constexpr std::string_view kAnswerLineInstruction =
    "End your reply with a final line of exactly `ANSWER: YES` or `ANSWER: NO`.";

// Appended to evaluation prompts for skills that perform better with an
// explicit reasoning step.
inline constexpr std::string_view kRationaleInstruction =
    "Before the final line, explain your reasoning in one short paragraph.";

struct SkillSpec {
  std::string skill_id;
  std::string filter_template;      // must contain the placeholder exactly once
  std::string evaluation_template;  // must contain the placeholder exactly once
  bool force_rationale_on_eval = true;
};

struct Verdict {
  Trilabel label = Trilabel::not_applicable;
  std::optional<std::string> rationale;
  std::vector<std::string> samples;  // raw responses behind the label

  static Verdict not_applicable() { return Verdict{}; }
};

namespace detail {

inline size_t count_occurrences(std::string_view text, std::string_view needle) {
  size_t n = 0, pos = 0;
  while ((pos = text.find(needle, pos)) != std::string_view::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

}  // namespace detail

// Substitutes the transcript into the stage's template and appends the
// answer-line instruction (plus the rationale block for evaluation prompts of
// skills that request it). Pure: identical inputs render identical bytes.
inline std::string render_prompt(const SkillSpec& spec, Stage stage, const Transcript& transcript) {
  const std::string& tmpl = stage == Stage::filter ? spec.filter_template : spec.evaluation_template;
  size_t n = detail::count_occurrences(tmpl, kTranscriptPlaceholder);
  if (n != 1)
    throw Error(Errc::config, "skill '" + spec.skill_id + "' " + stage_name(stage) +
                                  " template must contain exactly one " +
                                  std::string(kTranscriptPlaceholder) + " placeholder (found " +
                                  std::to_string(n) + ")");
  std::string out = tmpl;
  out.replace(out.find(kTranscriptPlaceholder), kTranscriptPlaceholder.size(), transcript.text);
  while (!out.empty() && out.back() == '\n') out.pop_back();
  if (stage == Stage::evaluation && spec.force_rationale_on_eval) {
    out += "\n\n";
    out += kRationaleInstruction;
  }
  out += "\n\n";
  out += kAnswerLineInstruction;
  out += '\n';
  return out;
}

struct ParsedVerdict {
  Trilabel label = Trilabel::no;  // yes or no
  std::optional<std::string> rationale;
};

namespace detail {

// Case-insensitive search for the last "ANSWER:" anchor followed by YES/NO.
// Returns position of the anchor and the label, or npos.
inline size_t find_last_answer(std::string_view text, Trilabel& label_out) {
  const std::string lower = to_lower(text);
  size_t best = std::string_view::npos;
  size_t pos = 0;
  while ((pos = lower.find("answer:", pos)) != std::string::npos) {
    size_t p = pos + 7;
    while (p < lower.size() && (lower[p] == ' ' || lower[p] == '\t')) ++p;
    auto word_ends_at = [&](size_t end) {
      return end >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end]));
    };
    if (lower.compare(p, 3, "yes") == 0 && word_ends_at(p + 3)) {
      best = pos;
      label_out = Trilabel::yes;
    } else if (lower.compare(p, 2, "no") == 0 && word_ends_at(p + 2)) {
      best = pos;
      label_out = Trilabel::no;
    }
    pos += 7;
  }
  return best;
}

}  // namespace detail

// Scans for the last `ANSWER: YES` / `ANSWER: NO` line (case-insensitive).
// Rationale is everything before that line, trimmed; absent when empty.
inline std::optional<ParsedVerdict> try_parse_verdict(std::string_view response_text) {
  Trilabel label = Trilabel::no;
  size_t anchor = detail::find_last_answer(response_text, label);
  if (anchor == std::string_view::npos) return std::nullopt;
  size_t line_start = response_text.rfind('\n', anchor);
  line_start = line_start == std::string_view::npos ? 0 : line_start;
  ParsedVerdict v;
  v.label = label;
  std::string_view before = trim(response_text.substr(0, line_start));
  if (!before.empty()) v.rationale = std::string(before);
  return v;
}

inline ParsedVerdict parse_verdict(std::string_view response_text) {
  auto v = try_parse_verdict(response_text);
  if (!v)
    throw Error(Errc::unparseable,
                "no answer line found in response: " + std::string(response_text));
  return *v;
}

enum class ChainAction { run_evaluation, skip };

// The evaluation stage runs only after a yes on the filter stage.
inline ChainAction chain_stage_gate(Trilabel filter_label) {
  switch (filter_label) {
    case Trilabel::yes: return ChainAction::run_evaluation;
    case Trilabel::no: return ChainAction::skip;
    case Trilabel::not_applicable: break;
  }
  throw Error(Errc::contract, "chain_stage_gate requires a yes or no filter label");
}

// ---------------------------------------------------------------------------
// Built-in skills
// ---------------------------------------------------------------------------

inline constexpr std::string_view kPraiseFilterTemplate =
    "You are reviewing the transcript of a remote math tutoring session between a\n"
    "tutor and a middle-school student. The transcript carries no speaker tags;\n"
    "infer who is tutoring from context.\n"
    "\n"
    "Question: does the tutor praise the student at any point in the session?\n"
    "Count any positive affirmation directed at the student (for example \"great\n"
    "work\", \"awesome\", \"perfect\", \"nice job\") as praise, regardless of how\n"
    "good the praise is.\n"
    "\n"
    "Transcript:\n"
    "{{TRANSCRIPT}}\n"
    "\n"
    "Give a brief reason for your decision.\n";

inline constexpr std::string_view kPraiseEvalTemplate =
    "You are reviewing the transcript of a remote math tutoring session in which\n"
    "the tutor praises the student. The transcript carries no speaker tags; infer\n"
    "who is tutoring from context.\n"
    "\n"
    "Question: is at least one instance of the tutor's praise directed at the\n"
    "student's effort or learning process rather than at the outcome or at the\n"
    "student as a person? Praise of effort or process (\"great work\", \"I like\n"
    "how you kept trying\") counts as yes. Praise of results (\"perfect\", \"you\n"
    "got it right\") or of the person (\"you're so smart\") does not. One\n"
    "qualifying instance is enough, no matter how much other praise occurs.\n"
    "\n"
    "Transcript:\n"
    "{{TRANSCRIPT}}\n";

inline constexpr std::string_view kErrorsFilterTemplate =
    "You are reviewing the transcript of a remote math tutoring session between a\n"
    "tutor and a middle-school student. The transcript carries no speaker tags;\n"
    "infer who is tutoring from context.\n"
    "\n"
    "Question: does the tutor recognize a math error made by the student during\n"
    "the session? Judge from the tutor's reactions in the dialogue (corrections,\n"
    "hints, \"not quite\", \"check that step\") rather than by re-deriving the\n"
    "math yourself. Answer yes only if a student error is acknowledged somewhere\n"
    "in the conversation.\n"
    "\n"
    "Transcript:\n"
    "{{TRANSCRIPT}}\n"
    "\n"
    "Give a brief reason for your decision.\n";

inline constexpr std::string_view kErrorsEvalTemplate =
    "You are reviewing the transcript of a remote math tutoring session in which\n"
    "a student makes a math error and the tutor reacts to it. The transcript\n"
    "carries no speaker tags; infer who is tutoring from context.\n"
    "\n"
    "Question: does the tutor respond to at least one student error by guiding\n"
    "the student to find the mistake themselves (prompting, questioning, hinting)\n"
    "instead of directly pointing the error out? Guidance that follows the\n"
    "student or the math software having already flagged the mistake still counts\n"
    "as yes. A direct correction (\"no, that's wrong, it should be 6\") counts as\n"
    "no.\n"
    "\n"
    "Transcript:\n"
    "{{TRANSCRIPT}}\n";

inline bool default_force_rationale(std::string_view skill_id) {
  // Short bare answers work better when grading reactions to math errors.
  return skill_id != "errors";
}

inline std::vector<SkillSpec> default_skills() {
  return {
      SkillSpec{"praise", std::string(kPraiseFilterTemplate), std::string(kPraiseEvalTemplate),
                true},
      SkillSpec{"errors", std::string(kErrorsFilterTemplate), std::string(kErrorsEvalTemplate),
                false},
  };
}

// ---------------------------------------------------------------------------
// Skill manifest
// ---------------------------------------------------------------------------
// JSON file listing skills and their template files:
//   {"skills": [{"id": "praise",
//                "filter_template": "praise_filter.txt",
//                "evaluation_template": "praise_eval.txt",
//                "force_rationale_on_eval": true}, ...]}
// Template paths are resolved relative to the manifest's directory.

namespace detail {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::config, "cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

}  // namespace detail

inline std::vector<SkillSpec> load_skills(const std::filesystem::path& manifest_path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config, "bad skill manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("skills") || !doc["skills"].is_array())
    throw Error(Errc::config,
                "skill manifest must be an object with a 'skills' array: " + manifest_path.string());

  const auto base = manifest_path.parent_path();
  std::vector<SkillSpec> specs;
  for (const auto& entry : doc["skills"]) {
    if (!entry.is_object() || !entry.contains("id"))
      throw Error(Errc::config, "each manifest skill needs an 'id': " + manifest_path.string());
    SkillSpec spec;
    spec.skill_id = entry["id"].get<std::string>();
    if (!entry.contains("filter_template") || !entry.contains("evaluation_template"))
      throw Error(Errc::config, "skill '" + spec.skill_id +
                                    "' needs filter_template and evaluation_template paths");
    spec.filter_template =
        detail::read_text_file(base / entry["filter_template"].get<std::string>());
    spec.evaluation_template =
        detail::read_text_file(base / entry["evaluation_template"].get<std::string>());
    spec.force_rationale_on_eval = entry.value("force_rationale_on_eval",
                                               default_force_rationale(spec.skill_id));
    for (const std::string& tmpl : {spec.filter_template, spec.evaluation_template}) {
      if (detail::count_occurrences(tmpl, kTranscriptPlaceholder) != 1)
        throw Error(Errc::config, "skill '" + spec.skill_id + "' template must contain exactly one " +
                                      std::string(kTranscriptPlaceholder) + " placeholder");
    }
    specs.push_back(std::move(spec));
  }
  if (specs.empty())
    throw Error(Errc::config, "skill manifest lists no skills: " + manifest_path.string());
  return specs;
}

}  // namespace tutoreval
