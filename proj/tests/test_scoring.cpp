#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "support.hpp"
#include "tutoreval/scoring.hpp"

using namespace tutoreval;
using namespace tutoreval::testing;

namespace {

Verdict verdict(Trilabel label) {
  Verdict v;
  v.label = label;
  return v;
}

RunRecord record(std::string transcript, Trilabel filter, Trilabel evaluation,
                 std::string model = "m", std::string skill = "praise") {
  RunRecord r;
  r.model_name = std::move(model);
  r.skill_id = std::move(skill);
  r.transcript_id = std::move(transcript);
  r.filter_verdict = verdict(filter);
  r.evaluation_verdict = verdict(evaluation);
  return r;
}

SkillLabel human(Trilabel filter, Trilabel evaluation, std::string skill = "praise") {
  return make_skill_label(std::move(skill), filter, evaluation);
}

}  // namespace

TEST_CASE("score_transcript over every label combination") {
  const auto Y = Trilabel::yes, N = Trilabel::no, NA = Trilabel::not_applicable;

  // Filters disagree: 0 points, whatever the evaluations say.
  CHECK(score_transcript(human(Y, Y), record("t", N, NA)).points == 0);
  CHECK(score_transcript(human(Y, N), record("t", N, NA)).points == 0);
  CHECK(score_transcript(human(N, NA), record("t", Y, Y)).points == 0);
  CHECK(score_transcript(human(N, NA), record("t", Y, N)).points == 0);

  // Both filters no: full marks, the evaluation was skipped by design.
  CHECK(score_transcript(human(N, NA), record("t", N, NA)).points == 2);

  // Both filters yes: evaluation agreement decides between 2 and 1.
  CHECK(score_transcript(human(Y, Y), record("t", Y, Y)).points == 2);
  CHECK(score_transcript(human(Y, N), record("t", Y, N)).points == 2);
  CHECK(score_transcript(human(Y, Y), record("t", Y, N)).points == 1);
  CHECK(score_transcript(human(Y, N), record("t", Y, Y)).points == 1);
}

TEST_CASE("score_transcript rejects malformed inputs") {
  const auto Y = Trilabel::yes, N = Trilabel::no, NA = Trilabel::not_applicable;

  CHECK_THROWS_AS(score_transcript(human(Y, Y, "errors"), record("t", Y, Y)), Error);
  // Records violating the chain invariant never score.
  CHECK_THROWS_AS(score_transcript(human(Y, Y), record("t", Y, NA)), Error);
  CHECK_THROWS_AS(score_transcript(human(Y, Y), record("t", N, Y)), Error);
  CHECK_THROWS_AS(score_transcript(human(Y, Y), record("t", NA, NA)), Error);
  // Hand-built human labels that dodge make_skill_label are still checked.
  SkillLabel bad{"praise", Trilabel::yes, Trilabel::not_applicable};
  CHECK_THROWS_AS(score_transcript(bad, record("t", Y, Y)), Error);
}

TEST_CASE("a perfect 50-transcript run totals 100") {
  std::vector<ScoreCell> cells(50, ScoreCell{2});
  CHECK(total_score(cells) == 100);
  cells[0].points = 1;
  cells[1].points = 0;
  CHECK(total_score(cells) == 97);
  CHECK(total_score({}) == 0);
}

namespace {

// Three transcripts: human filter yes/yes/no; model matches t1, filter-misses
// t2 (human yes, model no), true-negatives t3.
struct SmallFixture {
  LabelSet labels;
  std::vector<RunRecord> records;

  SmallFixture() {
    labels.rater_id = "h";
    labels.entries["t1"].push_back(human(Trilabel::yes, Trilabel::yes));
    labels.entries["t2"].push_back(human(Trilabel::yes, Trilabel::no));
    labels.entries["t3"].push_back(human(Trilabel::no, Trilabel::not_applicable));
    // Inserted out of order on purpose; the vector must come back sorted.
    records.push_back(record("t3", Trilabel::no, Trilabel::not_applicable));
    records.push_back(record("t1", Trilabel::yes, Trilabel::yes));
    records.push_back(record("t2", Trilabel::no, Trilabel::not_applicable));
  }
};

}  // namespace

TEST_CASE("correctness_vector for the filter stage") {
  SmallFixture f;
  // t1 match, t2 miss, t3 match — one entry per record, id order.
  CHECK(correctness_vector(f.labels, f.records, Stage::filter, "praise") ==
        std::vector<int>{1, 0, 1});
}

TEST_CASE("correctness_vector for the evaluation stage has a fixed denominator") {
  SmallFixture f;
  // Human filter yes on t1 and t2 only. The model's filter miss on t2 counts
  // as a wrong evaluation rather than shrinking the vector.
  CHECK(correctness_vector(f.labels, f.records, Stage::evaluation, "praise") ==
        std::vector<int>{1, 0});

  // If the model had filtered yes and matched the evaluation, it scores 1.
  f.records[2] = record("t2", Trilabel::yes, Trilabel::no);
  CHECK(correctness_vector(f.labels, f.records, Stage::evaluation, "praise") ==
        std::vector<int>{1, 1});
  // Filter agreement with a wrong evaluation still scores 0 on this vector.
  f.records[2] = record("t2", Trilabel::yes, Trilabel::yes);
  CHECK(correctness_vector(f.labels, f.records, Stage::evaluation, "praise") ==
        std::vector<int>{1, 0});
}

TEST_CASE("correctness_vector accuracy ties out with transcript points") {
  SmallFixture f;
  auto filter = correctness_vector(f.labels, f.records, Stage::filter, "praise");
  // Every positive-point transcript is exactly a filter match.
  int positives = 0;
  for (const auto& r : f.records) {
    const SkillLabel* h = f.labels.find(r.transcript_id, "praise");
    REQUIRE(h != nullptr);
    positives += score_transcript(*h, r).points > 0;
  }
  int matches = 0;
  for (int v : filter) matches += v;
  CHECK(positives == matches);
}

TEST_CASE("correctness_vector contract violations") {
  SmallFixture f;

  auto mixed = f.records;
  mixed.push_back(record("t9", Trilabel::no, Trilabel::not_applicable, "other-model"));
  CHECK_THROWS_AS(correctness_vector(f.labels, mixed, Stage::filter, "praise"), Error);

  auto dup = f.records;
  dup.push_back(record("t1", Trilabel::yes, Trilabel::yes));
  CHECK_THROWS_AS(correctness_vector(f.labels, dup, Stage::filter, "praise"), Error);

  auto unlabeled = f.records;
  unlabeled.push_back(record("t4", Trilabel::no, Trilabel::not_applicable));
  CHECK_THROWS_AS(correctness_vector(f.labels, unlabeled, Stage::filter, "praise"), Error);

  // Records for other skills are ignored, not an error.
  auto other = f.records;
  other.push_back(record("t1", Trilabel::yes, Trilabel::yes, "m", "errors"));
  CHECK(correctness_vector(f.labels, other, Stage::filter, "praise") ==
        std::vector<int>{1, 0, 1});
  CHECK(correctness_vector(f.labels, {}, Stage::filter, "praise").empty());
}

TEST_CASE("records round-trip through ndjson") {
  RunRecord r = record("t1", Trilabel::yes, Trilabel::yes);
  r.filter_verdict.rationale = "saw praise";
  r.filter_verdict.samples = {"ANSWER: YES", "yes...\nANSWER: YES"};
  r.evaluation_verdict.samples = {"ANSWER: YES"};

  RunRecord back = record_from_json(record_to_json(r));
  CHECK(back.model_name == r.model_name);
  CHECK(back.skill_id == r.skill_id);
  CHECK(back.transcript_id == r.transcript_id);
  CHECK(back.filter_verdict.label == r.filter_verdict.label);
  CHECK(back.filter_verdict.rationale == r.filter_verdict.rationale);
  CHECK(back.filter_verdict.samples == r.filter_verdict.samples);
  CHECK(back.evaluation_verdict.label == r.evaluation_verdict.label);
  CHECK_FALSE(back.evaluation_verdict.rationale.has_value());

  TempDir dir;
  std::vector<RunRecord> records = {record("t2", Trilabel::no, Trilabel::not_applicable), r};
  write_records(dir / "records.ndjson", records);
  auto loaded = read_records(dir / "records.ndjson");
  REQUIRE(loaded.size() == 2);
  // write_records sorts by (model, skill, transcript).
  CHECK(loaded[0].transcript_id == "t1");
  CHECK(loaded[1].transcript_id == "t2");

  // Writing what was read back produces identical bytes.
  write_records(dir / "again.ndjson", loaded);
  CHECK(read_file(dir / "again.ndjson") == read_file(dir / "records.ndjson"));
}

TEST_CASE("read_records pinpoints a bad line") {
  TempDir dir;
  write_file(dir / "records.ndjson",
             record_to_json(record("t1", Trilabel::no, Trilabel::not_applicable)).dump() +
                 "\n{broken\n");
  try {
    read_records(dir / "records.ndjson");
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::contract);
    CHECK(std::string(e.what()).find("records.ndjson:2") != std::string::npos);
  }
  CHECK_THROWS_AS(read_records(dir / "missing.ndjson"), Error);
}

TEST_CASE("records violating the chain invariant are rejected on read") {
  TempDir dir;
  nlohmann::json j = record_to_json(record("t1", Trilabel::yes, Trilabel::yes));
  j["evaluation"]["label"] = "NA";  // filter yes + evaluation NA
  write_file(dir / "records.ndjson", j.dump() + "\n");
  CHECK_THROWS_AS(read_records(dir / "records.ndjson"), Error);
}
