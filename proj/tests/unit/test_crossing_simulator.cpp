#include <fstream>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "pedsim/crossing_simulator.hpp"
#include "pedsim/errors.hpp"

using namespace pedsim;
namespace fs = std::filesystem;

namespace {

struct Catalog {
  fixtures::TempDir dir{"sim"};
  ClipManifest manifest;
  Catalog() {
    write_placeholder_clip_tree(dir.path(), 3);
    manifest = load_manifest(dir.path());
  }
};

const Catalog& catalog() {
  static Catalog c;
  return c;
}

std::string reply(Action a, int c = 3, int t = 3) { return format_decision_reply({a, "because", c, t}); }

}  // namespace

TEST_CASE("recorded trial reproduces the summary and statuses byte for byte") {
  const auto persona = fixtures::golden_persona();
  ScriptedOracle oracle(fixtures::golden_replies());
  const auto log = run_trial(persona, parse_condition("no-ehmi_stop"), oracle, catalog().manifest);
  CHECK(log.summary_lines() == fixtures::golden_summary());
  const auto statuses = fixtures::golden_statuses();
  REQUIRE(log.records.size() == statuses.size());
  for (std::size_t i = 0; i < statuses.size(); ++i) CHECK(log.records[i].status == statuses[i]);
  CHECK_FALSE(log.crossed);
  CHECK_FALSE(log.crossing_time.has_value());
  CHECK(log.records[3].clip == "no-ehmi_stop/split/pos3_time3.mp4");
  CHECK(oracle.decisions_served() == 9);
}

TEST_CASE("apply_action moves, clamps and enforces its contract") {
  SimState s;
  s = apply_action(s, Action::backward);
  CHECK(s.position == 0);
  CHECK(s.time_step == 1);
  s = apply_action(s, Action::forward);
  s = apply_action(s, Action::forward);
  CHECK(s.position == 2);
  s = apply_action(s, Action::backward);
  CHECK(s.position == 1);
  CHECK(s.history.size() == 4);
  CHECK(s.history.back().status == render_status(1));

  SimState road{kRoadPosition, 3, {}};
  CHECK_THROWS_AS(apply_action(road, Action::stop), ContractViolation);
  SimState late{2, kLastTimeStep + 1, {}};
  CHECK_THROWS_AS(apply_action(late, Action::stop), ContractViolation);
}

TEST_CASE("random action sequences keep the state machine invariants") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    SimState s;
    while (s.time_step <= kLastTimeStep && s.position < kRoadPosition) {
      const auto a = static_cast<Action>(rng() % 3);
      const auto next = apply_action(s, a);
      const auto& r = next.history.back();
      CHECK(r.position_after >= 0);
      CHECK(r.position_after <= kRoadPosition);
      CHECK(std::abs(r.position_after - r.position_before) <= 1);
      CHECK(r.time_step == s.time_step);
      s = next;
    }
    const auto ct = crossing_time(s.history);
    CHECK(ct.has_value() == (s.position == kRoadPosition));
    if (ct) CHECK(*ct == s.time_step);
  }
}

TEST_CASE("always forward crosses at five seconds") {
  const auto persona = fixtures::golden_persona();
  OracleConfig c;
  c.mock_policy = "always_forward";
  MockOracle oracle(c);
  for (const auto& cond : enumerate_conditions()) {
    const auto log = run_trial(persona, cond, oracle, catalog().manifest, {}, 1, 1);
    CHECK(log.crossed);
    CHECK(log.crossing_time == 5);
    CHECK(log.records.size() == 5);
    CHECK(log.records.back().status == "o-o-o-o-o-|*ROAD");
    CHECK(log.trial_dir == "1_" + dir_name(cond));
  }
}

TEST_CASE("unparseable replies are retried, then the trial fails") {
  const auto persona = fixtures::golden_persona();
  std::vector<TranscriptEntry> seen;
  TrialPolicy policy;
  policy.max_parse_retries = 2;
  policy.transcript = [&](const TranscriptEntry& e) { seen.push_back(e); };

  ScriptedOracle recovering({"garbage", reply(Action::forward), reply(Action::forward), reply(Action::forward),
                             reply(Action::forward), reply(Action::forward)});
  const auto log = run_trial(persona, parse_condition("eye_pass"), recovering, catalog().manifest, policy);
  CHECK(log.crossing_time == 5);
  REQUIRE(seen.size() == 6);
  CHECK_FALSE(seen[0].error.empty());
  CHECK(seen[1].attempt == 1);

  ScriptedOracle hopeless({"x", "y", "z"});
  CHECK_THROWS_AS(run_trial(persona, parse_condition("eye_pass"), hopeless, catalog().manifest, policy), TrialError);
}

TEST_CASE("memory document and post-trial ratings") {
  const auto persona = fixtures::golden_persona();
  ScriptedOracle oracle(fixtures::golden_replies(), {"Confidence: 5/5 - sure", "Trust: 2/5 - unsure"});
  const auto log = run_trial(persona, parse_condition("no-ehmi_stop"), oracle, catalog().manifest, {}, 0, 3);
  const auto memory = assemble_memory(log, &catalog().manifest);
  CHECK(memory.timeline.size() == 9);
  CHECK(memory.step_frames.size() == 9);
  CHECK(memory.combined_video == "3_no-ehmi_stop/all_agent_see.mp4");
  const auto text = memory.render();
  for (const auto& line : fixtures::golden_summary()) CHECK(text.find(line) != std::string::npos);

  const auto ratings = administer_post_trial(persona, memory, oracle);
  CHECK(ratings.q1_confidence == 5);
  CHECK(ratings.q1_reason == "sure");
  CHECK(ratings.q2_trust == 2);

  TrialLog empty;
  CHECK_THROWS_AS(assemble_memory(empty), TrialError);
}

TEST_CASE("post-study interview needs every condition") {
  const auto persona = fixtures::golden_persona();
  OracleConfig c;
  c.mock_policy = "cautious";
  MockOracle oracle(c);
  std::vector<MemoryDocument> memories;
  int ordinal = 1;
  for (const auto& cond : williams_square()[2]) {
    memories.push_back(assemble_memory(run_trial(persona, cond, oracle, catalog().manifest, {}, 0, ordinal++)));
  }
  const auto answers = administer_post_study(persona, memories, oracle);
  CHECK(answers.q1_similarity >= 1);
  CHECK(answers.q4_helpfulness <= 5);
  CHECK_FALSE(answers.q5_eye_meaning.empty());
  CHECK_FALSE(answers.q7_no_ehmi_strategy.empty());
  CHECK(interview_from_json(interview_to_json(answers)) == answers);

  memories.pop_back();
  CHECK_THROWS_AS(administer_post_study(persona, memories, oracle), PreconditionError);
  memories.push_back(memories.front());
  CHECK_THROWS_AS(administer_post_study(persona, memories, oracle), PreconditionError);
}

TEST_CASE("trial logs persist and load unchanged") {
  const auto persona = fixtures::golden_persona();
  ScriptedOracle oracle(fixtures::golden_replies());
  auto log = run_trial(persona, parse_condition("no-ehmi_stop"), oracle, catalog().manifest, {}, 42, 2);
  log.ratings = PostTrialRatings{4, "a", 3, "b"};
  CHECK(trial_log_from_json(trial_log_to_json(log)).records == log.records);

  fixtures::TempDir out("persist");
  PersistOptions opt;
  opt.manifest = &catalog().manifest;
  opt.transcript = {{"decision", 0, 0, "q", "r", {}}};
  const auto dir = persist_trial(log, out.path(), opt);
  CHECK(dir == out / "2_no-ehmi_stop");
  CHECK(fs::exists(dir / "transcript.jsonl"));
  CHECK(fs::exists(dir / "all_agent_see.txt"));
  CHECK(fs::exists(dir / "step_views/step3_pos3.mp4"));

  const auto back = load_trial_log(dir / "simulation_log.json");
  CHECK(back.records == log.records);
  CHECK(back.ratings == log.ratings);
  CHECK(back.seed == 42);
  CHECK(back.ordinal == 2);
  CHECK(back.crossed == log.crossed);
  CHECK(back.oracle == "scripted");
  CHECK(trial_log_to_json(back) == trial_log_to_json(log));
}

TEST_CASE("inconsistent logs are rejected unless checks are off") {
  const auto persona = fixtures::golden_persona();
  ScriptedOracle oracle(fixtures::golden_replies());
  const auto log = run_trial(persona, parse_condition("no-ehmi_stop"), oracle, catalog().manifest);
  auto tampered = log;
  tampered.records[4].position_after = 4;
  const auto bad = trial_log_to_json(tampered);
  CHECK_THROWS_AS(trial_log_from_json(bad), SchemaError);
  CHECK_NOTHROW(trial_log_from_json(bad, false));
  CHECK_THROWS_AS(trial_log_from_json("{}"), SchemaError);
  CHECK_THROWS_AS(trial_log_from_json("[]"), SchemaError);
}

TEST_CASE("replay detects divergence") {
  const auto persona = fixtures::golden_persona();
  OracleConfig c;
  c.mock_policy = "balanced";
  MockOracle oracle(c);
  const auto log = run_trial(persona, parse_condition("light_pass"), oracle, catalog().manifest, {}, 9, 4);
  CHECK(replay_trial(log, persona, oracle, catalog().manifest).identical);

  auto changed = log;
  changed.records[0].reason = "something else";
  const auto r = replay_trial(changed, persona, oracle, catalog().manifest);
  CHECK_FALSE(r.identical);
  CHECK(r.first_divergence == 0);
}
