#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pedsim/oracle_gateway.hpp"
#include "pedsim/scenario_catalog.hpp"

namespace pedsim {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,
  kExitConfig = 2,
  kExitPartial = 3,
  kExitBackend = 4,
  kExitReplayFailed = 5,
};

struct RunPaths {
  std::filesystem::path questionnaires;
  std::filesystem::path personas;  // default <output>/personas
  std::filesystem::path clips;
  std::filesystem::path frames;    // default <output>/frames
  std::filesystem::path human;     // annotation exports
  std::filesystem::path output = "out";
};

struct RunConfig {
  RunPaths paths;
  OracleConfig oracle;
  GridSpec grid;
  std::optional<std::uint64_t> seed;
  int jobs = 4;
  double stop_threshold = 0.4;
  std::size_t n_perm = 5000;
  int max_parse_retries = 3;
  std::string concat_command;  // {list} {output}; empty = list file only
  bool transcripts = true;

  // Fills defaults derived from the output directory and makes every path
  // absolute. Throws ConfigError on invalid values.
  void finalize();
  std::uint64_t require_seed() const;
};

// Nested JSON config; relative paths resolve against the file's directory.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& file);
std::string run_config_to_json(const RunConfig& config);

// Writes <output>/run_meta.json for `command`.
void write_run_meta(const RunConfig& config, std::string_view command, int exit_code, const std::string& started_at);
std::string utc_timestamp();

struct CommandContext {
  RunConfig config;
  std::ostream* out = nullptr;  // progress and results
  std::ostream* err = nullptr;  // failures
  // Overrides the oracle built from config.oracle (tests).
  std::shared_ptr<Oracle> oracle;
};

int cmd_persona_build(CommandContext& ctx);
int cmd_sim_run(CommandContext& ctx);
int cmd_sim_replay(CommandContext& ctx, const std::filesystem::path& log_file);
int cmd_sim_scaffold(CommandContext& ctx, int frames_per_clip);
int cmd_human_synth(CommandContext& ctx, int participants);
int cmd_ingest(CommandContext& ctx);
int cmd_compare(CommandContext& ctx);
int cmd_report(CommandContext& ctx, const std::string& formats);

}  // namespace pedsim
