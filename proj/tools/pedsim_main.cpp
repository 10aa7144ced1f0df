#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pedsim/errors.hpp"
#include "pedsim/workbench.hpp"

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::optional<int> jobs;
  std::string out;
  std::optional<double> stop_threshold;
  std::optional<std::size_t> n_perm;
};

pedsim::RunConfig make_config(const GlobalOptions& g) {
  auto c = g.config.empty() ? pedsim::RunConfig{} : pedsim::load_run_config(g.config);
  if (g.seed) c.seed = g.seed;
  if (!g.backend.empty()) c.oracle.backend = pedsim::parse_backend(g.backend);
  if (g.jobs) c.jobs = *g.jobs;
  if (!g.out.empty()) c.paths.output = g.out;
  if (g.stop_threshold) c.stop_threshold = *g.stop_threshold;
  if (g.n_perm) c.n_perm = *g.n_perm;
  c.finalize();
  return c;
}

int report_error(const char* kind, const std::exception& e, int code) {
  std::cerr << "pedsim: " << kind << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian crossing simulation and cohort comparison workbench"};
  app.set_version_flag("--version", std::string(pedsim::kToolVersion));
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--backend", g.backend, "Oracle backend: remote or mock");
  app.add_option("--jobs", g.jobs, "Concurrent trials");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--stop-threshold", g.stop_threshold, "Speed (m/s) below which a tick counts as stopped");
  app.add_option("--n-perm", g.n_perm, "Permutations per effect");

  auto* persona = app.add_subcommand("persona", "Persona generation")->require_subcommand(1);
  auto* persona_build = persona->add_subcommand("build", "Generate personas from questionnaires");

  auto* sim = app.add_subcommand("sim", "Crossing simulation")->require_subcommand(1);
  auto* sim_run = sim->add_subcommand("run", "Run every persona through its six trials");
  auto* sim_replay = sim->add_subcommand("replay", "Check a recorded simulation log");
  std::string replay_log;
  sim_replay->add_option("log", replay_log, "simulation_log.json")->required();
  auto* sim_scaffold = sim->add_subcommand("scaffold", "Write a placeholder clip tree");
  int frames_per_clip = 3;
  sim_scaffold->add_option("--frames", frames_per_clip, "Frames per clip");

  auto* human = app.add_subcommand("human", "Human trajectory data")->require_subcommand(1);
  auto* human_synth = human->add_subcommand("synth", "Write synthetic annotation exports");
  int participants = 20;
  human_synth->add_option("--participants", participants, "Participants to synthesize");

  auto* ingest = app.add_subcommand("ingest", "Build the cohort dataset");
  auto* compare = app.add_subcommand("compare", "Run the group comparison and write the report");
  auto* report = app.add_subcommand("report", "Write selected report formats");
  std::string formats = "all";
  report->add_option("--format", formats, "Comma list of json, csv, svg or all");

  CLI11_PARSE(app, argc, argv);

  std::string command;
  if (persona_build->parsed()) command = "persona build";
  if (sim_run->parsed()) command = "sim run";
  if (sim_replay->parsed()) command = "sim replay";
  if (sim_scaffold->parsed()) command = "sim scaffold";
  if (human_synth->parsed()) command = "human synth";
  if (ingest->parsed()) command = "ingest";
  if (compare->parsed()) command = "compare";
  if (report->parsed()) command = "report";

  const auto started = pedsim::utc_timestamp();
  std::optional<pedsim::CommandContext> ctx;
  int code = pedsim::kExitRuntime;
  try {
    ctx.emplace();
    ctx->config = make_config(g);
    if (command == "persona build") code = pedsim::cmd_persona_build(*ctx);
    if (command == "sim run") code = pedsim::cmd_sim_run(*ctx);
    if (command == "sim replay") code = pedsim::cmd_sim_replay(*ctx, replay_log);
    if (command == "sim scaffold") code = pedsim::cmd_sim_scaffold(*ctx, frames_per_clip);
    if (command == "human synth") code = pedsim::cmd_human_synth(*ctx, participants);
    if (command == "ingest") code = pedsim::cmd_ingest(*ctx);
    if (command == "compare") code = pedsim::cmd_compare(*ctx);
    if (command == "report") code = pedsim::cmd_report(*ctx, formats);
  } catch (const pedsim::ConfigError& e) {
    code = report_error("configuration error", e, pedsim::kExitConfig);
  } catch (const pedsim::ManifestError& e) {
    code = report_error("clip manifest", e, pedsim::kExitConfig);
  } catch (const pedsim::ValidationError& e) {
    code = report_error("invalid value", e, pedsim::kExitConfig);
  } catch (const pedsim::TransportError& e) {
    code = report_error("backend failure", e, pedsim::kExitBackend);
  } catch (const pedsim::Error& e) {
    code = report_error("error", e, pedsim::kExitRuntime);
  } catch (const std::exception& e) {
    code = report_error("unexpected failure", e, pedsim::kExitRuntime);
  }

  if (ctx && !ctx->config.paths.output.empty() && ctx->config.paths.output.is_absolute()) {
    try {
      pedsim::write_run_meta(ctx->config, command, code, started);
    } catch (const std::exception& e) {
      std::cerr << "pedsim: cannot write run_meta.json: " << e.what() << "\n";
    }
  }
  return code;
}
