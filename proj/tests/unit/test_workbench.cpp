#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "pedsim/cohort_stats.hpp"
#include "pedsim/crossing_simulator.hpp"
#include "pedsim/errors.hpp"
#include "pedsim/workbench.hpp"

using namespace pedsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> logs_under(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.path().filename() == "simulation_log.json") out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

struct Workspace {
  fixtures::TempDir dir{"workbench"};
  std::ostringstream out, err;
  CommandContext ctx;

  Workspace() {
    ctx.config.paths.output = dir / "out";
    ctx.config.paths.questionnaires = fixtures::data_path("questionnaires");
    ctx.config.seed = 7;
    ctx.config.n_perm = 100;
    ctx.config.jobs = 4;
    ctx.config.finalize();
    ctx.out = &out;
    ctx.err = &err;
  }
};

class DownOracle final : public Oracle {
 public:
  std::string decide(const DecisionQuery&) override { throw TransportError("connection refused"); }
  std::string ask(const SurveyQuery&) override { throw TransportError("connection refused"); }
  std::string craft_persona(std::string_view) override { throw TransportError("connection refused"); }
  std::string label() const override { return "down"; }
  double temperature() const override { return 0; }
};

class MumblingOracle final : public Oracle {
 public:
  std::string decide(const DecisionQuery&) override { return "hmm"; }
  std::string ask(const SurveyQuery&) override { return "hmm"; }
  std::string craft_persona(std::string_view) override { return "hmm"; }
  std::string label() const override { return "mumbling"; }
  double temperature() const override { return 0; }
};

}  // namespace

TEST_CASE("config files: nesting, relative paths, unknown keys") {
  fixtures::TempDir dir("config");
  const auto c = parse_run_config(
      R"({"paths": {"output": "run", "clips": "/data/clips"}, "oracle": {"backend": "mock", "mock_policy": "cautious"},
          "seed": 12, "jobs": 2, "n_perm": 300})",
      dir.path());
  CHECK(c.paths.output == dir / "run");
  CHECK(c.paths.clips == "/data/clips");
  CHECK(c.oracle.mock_policy == "cautious");
  CHECK(c.seed == 12u);
  CHECK(c.n_perm == 300);

  auto again = parse_run_config(run_config_to_json(c), dir.path());
  CHECK(run_config_to_json(again) == run_config_to_json(c));

  CHECK_THROWS_AS(parse_run_config(R"({"seeed": 1})", dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"oracle": {"modle": "x"}})", dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"jobs": "many"})", dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[1]", dir.path()), ConfigError);
  CHECK_THROWS_AS(load_run_config(fixtures::data_path("configs/unknown_key.json")), ConfigError);
}

TEST_CASE("finalize fills defaults and rejects bad values") {
  RunConfig c;
  c.paths.output = "rel_out";
  c.finalize();
  CHECK(c.paths.output.is_absolute());
  CHECK(c.paths.personas == c.paths.output / "personas");
  CHECK_THROWS_AS(c.require_seed(), ConfigError);
  c.jobs = 0;
  CHECK_THROWS_AS(c.finalize(), ConfigError);
  c.jobs = 1;
  c.oracle.backend = Backend::remote;
  CHECK_THROWS_AS(c.finalize(), ConfigError);
}

TEST_CASE("mock pipeline from questionnaires to report") {
  Workspace w;
  auto& ctx = w.ctx;
  REQUIRE(cmd_sim_scaffold(ctx, 1) == kExitOk);
  REQUIRE(cmd_persona_build(ctx) == kExitOk);
  CHECK(std::distance(fs::directory_iterator(ctx.config.paths.personas), fs::directory_iterator{}) == 20);
  const auto p01 = parse_persona_document(slurp(ctx.config.paths.personas / "test01.json"));
  CHECK(p01.name == "test01");
  CHECK(cmd_persona_build(ctx) == kExitOk);
  CHECK(w.out.str().find("kept: 20") != std::string::npos);

  REQUIRE(cmd_sim_run(ctx) == kExitOk);
  const auto trials = ctx.config.paths.output / "trials";
  const auto logs = logs_under(trials);
  CHECK(logs.size() == 120);
  for (const auto& [rel, text] : logs) CHECK_NOTHROW(trial_log_from_json(text));
  CHECK(fs::exists(trials / "test05" / "interview.json"));
  // Existing logs are kept on a rerun.
  REQUIRE(cmd_sim_run(ctx) == kExitOk);
  CHECK(logs_under(trials) == logs);

  const auto first = trials / logs.begin()->first;
  CHECK(cmd_sim_replay(ctx, first) == kExitOk);
  auto doc = nlohmann::ordered_json::parse(slurp(first));
  doc["records"][1]["position_after"] = doc["records"][1]["position_after"].get<int>() == 0 ? 1 : 0;
  std::ofstream(first) << doc.dump(2);
  w.out.str("");
  CHECK(cmd_sim_replay(ctx, first) == kExitReplayFailed);
  CHECK(w.out.str().find("replay FAILED at time step 1") != std::string::npos);
  std::ofstream(first) << logs.begin()->second;

  REQUIRE(cmd_human_synth(ctx, 20) == kExitOk);
  REQUIRE(cmd_ingest(ctx) == kExitOk);
  const auto cohort = cohort_from_json(slurp(ctx.config.paths.output / "cohort.json"));
  CHECK(cohort.ids(Group::human).size() == 20);
  CHECK(cohort.ids(Group::vlm).size() == 20);
  CHECK(cohort.observations.size() == 240);
  CHECK(cohort.participants.size() == 40);

  REQUIRE(cmd_compare(ctx) == kExitOk);
  CHECK(fs::exists(ctx.config.paths.output / "report" / "report.json"));
  CHECK(fs::exists(ctx.config.paths.output / "reference_constants.json"));
  CHECK(w.out.str().find("eHMI×AV×Group") != std::string::npos);

  CHECK(cmd_report(ctx, "csv,svg") == kExitOk);
  CHECK_THROWS_AS(cmd_report(ctx, "pdf"), ConfigError);
}

TEST_CASE("reruns with the same seed give identical logs") {
  Workspace a, b;
  for (auto* w : {&a, &b}) {
    w->ctx.config.paths.questionnaires = fixtures::data_path("questionnaires");
    REQUIRE(cmd_sim_scaffold(w->ctx, 1) == kExitOk);
    REQUIRE(cmd_persona_build(w->ctx) == kExitOk);
  }
  b.ctx.config.jobs = 1;
  REQUIRE(cmd_sim_run(a.ctx) == kExitOk);
  REQUIRE(cmd_sim_run(b.ctx) == kExitOk);
  CHECK(logs_under(a.ctx.config.paths.output / "trials") == logs_under(b.ctx.config.paths.output / "trials"));
}

TEST_CASE("failures map to partial and backend exit codes") {
  Workspace w;
  auto& ctx = w.ctx;
  REQUIRE(cmd_sim_scaffold(ctx, 1) == kExitOk);

  // A broken questionnaire next to a good one.
  const auto qdir = w.dir / "questionnaires";
  fs::create_directories(qdir);
  fs::copy_file(fixtures::data_path("questionnaires/test01.json"), qdir / "test01.json");
  std::ofstream(qdir / "broken.json") << R"({"participant_id": "x"})";
  ctx.config.paths.questionnaires = qdir;
  CHECK(cmd_persona_build(ctx) == kExitPartial);
  CHECK(w.err.str().find("broken.json") != std::string::npos);

  ctx.oracle = std::make_shared<MumblingOracle>();
  CHECK(cmd_sim_run(ctx) == kExitPartial);
  CHECK(logs_under(ctx.config.paths.output / "trials").empty());

  ctx.oracle = std::make_shared<DownOracle>();
  CHECK(cmd_sim_run(ctx) == kExitBackend);
  fs::remove(ctx.config.paths.personas / "test01.json");
  CHECK_THROWS_AS(cmd_persona_build(ctx), TransportError);

  ctx.config.seed.reset();
  CHECK_THROWS_AS(cmd_sim_run(ctx), ConfigError);
  CHECK_THROWS_AS(cmd_sim_scaffold(ctx, 0), ConfigError);
  CHECK_THROWS_AS(cmd_sim_replay(ctx, w.dir / "missing.json"), IoError);
}
