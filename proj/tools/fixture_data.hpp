#pragma once

// Deterministic demo dataset: a 50-transcript tutoring corpus, human labels,
// a second rater for the agreement commands, and canned responses that replay
// a GPT-4-shaped run through the mock provider. Everything is a pure function
// of the transcript index, so the dataset (and every number downstream of it)
// is identical on every machine.
//
// The built-in shape, chosen so the replayed run lands on interesting values:
//   praise:  human filter yes on 1..27; model filter matches everywhere except
//            a false positive on 50 (49/50); model evaluation matches 24 of
//            the 27 human-filter-yes transcripts (misses 25..27).
//   errors:  human filter yes on all 50; model filter yes on 1..42 (42/50);
//            model evaluation matches 38 of those 42 (misses 39..42).
//   raters:  praise filter 23 yes vs 23 yes with 22 joint-yes -> 96%
//            agreement, kappa 0.9195.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tutoreval/corpus.hpp"
#include "tutoreval/llm/cache.hpp"
#include "tutoreval/llm/transport.hpp"
#include "tutoreval/prompting.hpp"

namespace tutoreval::demo {

inline constexpr const char* kModelName = "gpt-4";
inline constexpr int kTranscriptCount = 50;

struct Plan {
  bool praise_human_filter;
  bool praise_human_eval;  // meaningful only when praise_human_filter
  bool praise_model_filter;
  bool praise_model_eval;  // meaningful only when praise_model_filter
  bool errors_human_eval;  // errors filter is yes on every transcript
  bool errors_model_filter;
  bool errors_model_eval;  // meaningful only when errors_model_filter
};

inline Plan plan_for(int i) {  // i in 1..kTranscriptCount
  Plan p;
  p.praise_human_filter = i <= 27;
  p.praise_human_eval = i <= 18;
  p.praise_model_filter = i <= 27 || i == 50;
  p.praise_model_eval = i <= 18 || (i >= 25 && i <= 27);  // 25..27 disagree with human
  p.errors_human_eval = i <= 30;
  p.errors_model_filter = i <= 42;
  p.errors_model_eval = i <= 30 || (i >= 39 && i <= 42);  // 39..42 disagree with human
  return p;
}

inline std::string transcript_id(int i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "t%02d", i);
  return buf;
}

namespace detail {

inline std::string_view pick(std::uint64_t& state, const std::vector<std::string_view>& pool) {
  state = splitmix64(state);
  return pool[state % pool.size()];
}

}  // namespace detail

// Untagged alternating dialogue, padded to 2.2-3.4KB so the whole corpus sits
// inside the default ingest size window. Filler lines carry no praise and no
// error acknowledgement; those appear only where the plan calls for them.
inline std::string transcript_text(int i) {
  const Plan p = plan_for(i);
  std::uint64_t state = splitmix64(0x7ab5cede00d1ceULL + static_cast<std::uint64_t>(i));

  static const std::vector<std::string_view> openers = {
      "hi! ready to work on some math today?",
      "hello, thanks for logging in. which assignment are we on?",
      "hey, how was school today? let's look at your homework.",
  };
  static const std::vector<std::string_view> student_lines = {
      "i think we have to find x first.",
      "so i multiply both sides by four?",
      "can we do the word problem next? i got stuck on it.",
      "wait, let me write that down.",
      "i always mix up the order of operations.",
      "so the denominator stays the same when i add them?",
      "hold on, my tablet froze for a second.",
      "i got 36 for the area. does the unit matter here?",
  };
  static const std::vector<std::string_view> tutor_lines = {
      "let's read the problem together before we touch the numbers.",
      "take your time, there is no rush.",
      "what does the problem ask us to find?",
      "ok, write that step down so we can both look at it.",
      "now substitute that back into the original equation.",
      "let's check the units before we move on.",
      "which rule applies when the bases are the same?",
      "draw a quick sketch of it, that usually helps.",
  };

  std::ostringstream out;
  out << detail::pick(state, openers) << '\n';

  // Every transcript contains a student mistake that the tutor acknowledges.
  static const std::vector<std::string_view> error_lines = {
      "so x equals 8, because 24 divided by 3 is 8... and i had 4x = 24.",
      "i added the exponents and got x to the fifth.",
      "i got 15 by adding 7 and 9.",
      "the slope is 2 over 6, so i wrote 3.",
  };
  static const std::vector<std::string_view> guided_fixes = {
      "hmm, check that step again. what do you get when you divide both sides by 4?",
      "walk me through how you combined those terms. does the rule you used apply here?",
      "the software flagged that one. can you spot which step went sideways?",
      "interesting, try plugging your answer back in. does the equation still balance?",
  };
  static const std::vector<std::string_view> direct_fixes = {
      "not quite. it should be 6, because 24 divided by 4 is 6.",
      "that's incorrect. you multiply the exponents here, so it's x to the sixth.",
      "no, 7 plus 9 is 16, not 15. the mistake is in the addition.",
      "that's wrong. 2 over 6 reduces to 1 over 3, not 3.",
  };

  auto dialogue_pair = [&] {
    out << detail::pick(state, student_lines) << '\n' << detail::pick(state, tutor_lines) << '\n';
  };

  dialogue_pair();
  dialogue_pair();
  out << detail::pick(state, error_lines) << '\n';
  out << detail::pick(state, p.errors_human_eval ? guided_fixes : direct_fixes) << '\n';
  dialogue_pair();

  if (p.praise_human_filter) {
    static const std::vector<std::string_view> process_praise = {
        "i really like how you kept trying different approaches until one worked.",
        "great work sticking with that problem. your process got cleaner each pass.",
        "nice job checking your own steps there, that habit will carry you far.",
    };
    static const std::vector<std::string_view> outcome_praise = {
        "perfect, you got it!",
        "you're so smart, that was fast.",
        "awesome, that's the right answer.",
    };
    out << detail::pick(state, p.praise_human_eval ? process_praise : outcome_praise) << '\n';
  }

  const size_t target = 2200 + ((static_cast<size_t>(i) * 137) % 1200);
  while (out.tellp() >= 0 && static_cast<size_t>(out.tellp()) < target) dialogue_pair();
  out << "ok, that's our time for today. see you next session.\n";
  return std::move(out).str();
}

inline Corpus build_corpus() {
  Corpus corpus;
  for (int i = 1; i <= kTranscriptCount; ++i) {
    Transcript t;
    t.id = transcript_id(i);
    t.text = transcript_text(i);
    t.size_bytes = t.text.size();
    corpus.transcripts.push_back(std::move(t));
  }
  return corpus;
}

inline LabelSet build_labels() {
  LabelSet labels;
  labels.rater_id = "labels";
  for (int i = 1; i <= kTranscriptCount; ++i) {
    const Plan p = plan_for(i);
    auto& entry = labels.entries[transcript_id(i)];
    entry.push_back(make_skill_label(
        "errors", Trilabel::yes, p.errors_human_eval ? Trilabel::yes : Trilabel::no));
    entry.push_back(make_skill_label(
        "praise", p.praise_human_filter ? Trilabel::yes : Trilabel::no,
        !p.praise_human_filter ? Trilabel::not_applicable
                               : (p.praise_human_eval ? Trilabel::yes : Trilabel::no)));
  }
  return labels;
}

// Two human raters coding the praise prompts: 23 yes each, 22 jointly,
// agreeing on 48 of 50 transcripts.
inline LabelSet build_rater(bool second) {
  LabelSet labels;
  labels.rater_id = second ? "rater_b" : "rater_a";
  for (int i = 1; i <= kTranscriptCount; ++i) {
    const bool filter_yes = second ? (i <= 22 || i == 24) : i <= 23;
    const bool eval_yes = i <= 12;
    labels.entries[transcript_id(i)].push_back(make_skill_label(
        "praise", filter_yes ? Trilabel::yes : Trilabel::no,
        !filter_yes ? Trilabel::not_applicable : (eval_yes ? Trilabel::yes : Trilabel::no)));
  }
  return labels;
}

namespace detail {

inline std::vector<std::string> candidate_responses(std::string_view skill, Stage stage,
                                                    bool yes, int i) {
  const std::string tag = transcript_id(i);
  std::string reason;
  if (skill == "praise" && stage == Stage::filter) {
    reason = yes ? "The tutor offers positive affirmations to the student in " + tag + "."
                 : "I find no positive affirmation directed at the student in " + tag + ".";
  } else if (skill == "praise") {
    reason = yes ? "At least one praise instance targets the student's effort and process."
                 : "Every praise instance targets the result or the student, not the effort.";
  } else if (stage == Stage::filter) {
    reason = yes ? "The tutor reacts to a student mistake (a correction or a hint) in " + tag + "."
                 : "I see no point where the tutor acknowledges a student error in " + tag + ".";
  } else {
    reason = yes ? "The tutor prompts the student to find the mistake rather than naming it."
                 : "The tutor points the error out directly instead of guiding the student.";
  }
  const std::string answer = yes ? "ANSWER: YES" : "ANSWER: NO";
  return {
      reason + "\n" + answer,
      "Looking at the dialogue as a whole: " + reason + "\n\n" + answer + "\n",
  };
}

}  // namespace detail

// Canned responses for every prompt the replayed run issues: both filter
// stages on all transcripts, evaluation stages only where the plan's model
// filter answered yes (the chain skips the rest).
inline FixtureMap build_fixtures() {
  FixtureMap fixtures;
  const Corpus corpus = build_corpus();
  for (const SkillSpec& spec : default_skills()) {
    for (int i = 1; i <= kTranscriptCount; ++i) {
      const Plan p = plan_for(i);
      const Transcript& t = corpus.transcripts[static_cast<size_t>(i - 1)];
      const bool praise = spec.skill_id == "praise";
      const bool model_filter = praise ? p.praise_model_filter : p.errors_model_filter;
      fixtures[sha256_hex(render_prompt(spec, Stage::filter, t))] =
          detail::candidate_responses(spec.skill_id, Stage::filter, model_filter, i);
      if (model_filter) {
        const bool model_eval = praise ? p.praise_model_eval : p.errors_model_eval;
        fixtures[sha256_hex(render_prompt(spec, Stage::evaluation, t))] =
            detail::candidate_responses(spec.skill_id, Stage::evaluation, model_eval, i);
      }
    }
  }
  return fixtures;
}

// Writes the dataset under dir: corpus/<id>.txt, labels.csv, rater_a.csv,
// rater_b.csv, fixtures.json.
inline void write_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "corpus");
  for (const Transcript& t : build_corpus().transcripts) {
    std::ofstream out(dir / "corpus" / (t.id + ".txt"), std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::config, "cannot write transcript " + t.id);
    out << t.text;
  }
  auto write_text = [&](const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::config, "cannot write " + path.string());
    out << text;
  };
  write_text(dir / "labels.csv", export_labels(build_labels()));
  write_text(dir / "rater_a.csv", export_labels(build_rater(false)));
  write_text(dir / "rater_b.csv", export_labels(build_rater(true)));
  write_fixtures(dir / "fixtures.json", build_fixtures());
}

}  // namespace tutoreval::demo
