#include "pedsim/workbench.hpp"

#include <chrono>
#include <ctime>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "pedsim/errors.hpp"
#include "util.hpp"

namespace pedsim {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(fmt::format("unknown key \"{}\" in {}", key, where));
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& into) {
  if (const auto it = j.find(key); it != j.end() && !it->is_null()) into = it->get<T>();
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty()) return p;
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

}  // namespace

void RunConfig::finalize() {
  if (paths.output.empty()) throw ConfigError("output directory is required");
  paths.output = fs::absolute(paths.output).lexically_normal();
  if (paths.personas.empty()) paths.personas = paths.output / "personas";
  if (paths.frames.empty()) paths.frames = paths.output / "frames";
  for (auto* p : {&paths.questionnaires, &paths.personas, &paths.clips, &paths.frames, &paths.human}) {
    if (!p->empty()) *p = fs::absolute(*p).lexically_normal();
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!(stop_threshold >= 0)) throw ConfigError("stop_threshold must be >= 0");
  if (n_perm < 1) throw ConfigError("n_perm must be >= 1");
  if (max_parse_retries < 0) throw ConfigError("max_parse_retries must be >= 0");
  try {
    grid.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  oracle.validate();
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required for this command (--seed or \"seed\" in the config)");
  return *seed;
}

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
  RunConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j, {"paths", "oracle", "grid", "seed", "jobs", "stop_threshold", "n_perm", "max_parse_retries",
                       "concat_command", "transcripts"},
                   "config");
    if (const auto it = j.find("paths"); it != j.end()) {
      reject_unknown(*it, {"questionnaires", "personas", "clips", "frames", "human", "output"}, "paths");
      const auto path = [&](const char* key, fs::path& into) {
        if (it->contains(key)) into = resolve(base_dir, it->at(key).get<std::string>());
      };
      path("questionnaires", c.paths.questionnaires);
      path("personas", c.paths.personas);
      path("clips", c.paths.clips);
      path("frames", c.paths.frames);
      path("human", c.paths.human);
      path("output", c.paths.output);
    }
    if (const auto it = j.find("oracle"); it != j.end()) {
      const auto& o = *it;
      reject_unknown(o, {"backend", "endpoint", "model", "temperature", "max_frames", "credential_env", "timeout_s",
                         "retry_limit", "retry_backoff_s", "history_window", "mock_policy", "max_in_flight",
                         "requests_per_second", "frame_command"},
                     "oracle");
      if (o.contains("backend")) c.oracle.backend = parse_backend(o.at("backend").get<std::string>());
      read(o, "endpoint", c.oracle.endpoint);
      read(o, "model", c.oracle.model);
      read(o, "temperature", c.oracle.temperature);
      read(o, "max_frames", c.oracle.max_frames);
      read(o, "credential_env", c.oracle.credential_env);
      read(o, "timeout_s", c.oracle.timeout_s);
      read(o, "retry_limit", c.oracle.retry_limit);
      read(o, "retry_backoff_s", c.oracle.retry_backoff_s);
      read(o, "history_window", c.oracle.history_window);
      read(o, "mock_policy", c.oracle.mock_policy);
      read(o, "max_in_flight", c.oracle.max_in_flight);
      read(o, "requests_per_second", c.oracle.requests_per_second);
      read(o, "frame_command", c.oracle.frame_command);
    }
    if (const auto it = j.find("grid"); it != j.end()) {
      reject_unknown(*it, {"positions", "interval_m", "span_m", "approach_duration_s", "decision_period_s"}, "grid");
      read(*it, "positions", c.grid.positions);
      read(*it, "interval_m", c.grid.interval_m);
      read(*it, "span_m", c.grid.span_m);
      read(*it, "approach_duration_s", c.grid.approach_duration_s);
      read(*it, "decision_period_s", c.grid.decision_period_s);
    }
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    read(j, "jobs", c.jobs);
    read(j, "stop_threshold", c.stop_threshold);
    read(j, "n_perm", c.n_perm);
    read(j, "max_parse_retries", c.max_parse_retries);
    read(j, "concat_command", c.concat_command);
    read(j, "transcripts", c.transcripts);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!c.paths.output.is_absolute()) c.paths.output = resolve(base_dir, c.paths.output);
  return c;
}

RunConfig load_run_config(const fs::path& file) {
  if (!fs::exists(file)) throw ConfigError("config file not found: " + file.string());
  return parse_run_config(detail::read_file(file), fs::absolute(file).parent_path());
}

std::string run_config_to_json(const RunConfig& c) {
  ojson j;
  j["paths"] = {{"questionnaires", c.paths.questionnaires.string()}, {"personas", c.paths.personas.string()},
                {"clips", c.paths.clips.string()},                   {"frames", c.paths.frames.string()},
                {"human", c.paths.human.string()},                   {"output", c.paths.output.string()}};
  j["oracle"] = {{"backend", to_string(c.oracle.backend)},
                 {"endpoint", c.oracle.endpoint},
                 {"model", c.oracle.model},
                 {"temperature", c.oracle.temperature},
                 {"max_frames", c.oracle.max_frames},
                 {"credential_env", c.oracle.credential_env},
                 {"timeout_s", c.oracle.timeout_s},
                 {"retry_limit", c.oracle.retry_limit},
                 {"retry_backoff_s", c.oracle.retry_backoff_s},
                 {"history_window", c.oracle.history_window},
                 {"mock_policy", c.oracle.mock_policy},
                 {"max_in_flight", c.oracle.max_in_flight},
                 {"requests_per_second", c.oracle.requests_per_second},
                 {"frame_command", c.oracle.frame_command}};
  j["grid"] = {{"positions", c.grid.positions},
               {"interval_m", c.grid.interval_m},
               {"span_m", c.grid.span_m},
               {"approach_duration_s", c.grid.approach_duration_s},
               {"decision_period_s", c.grid.decision_period_s}};
  j["seed"] = c.seed ? ojson(*c.seed) : ojson(nullptr);
  j["jobs"] = c.jobs;
  j["stop_threshold"] = c.stop_threshold;
  j["n_perm"] = c.n_perm;
  j["max_parse_retries"] = c.max_parse_retries;
  j["concat_command"] = c.concat_command;
  j["transcripts"] = c.transcripts;
  return j.dump(2) + "\n";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_run_meta(const RunConfig& config, std::string_view command, int exit_code, const std::string& started_at) {
  ojson j;
  j["command"] = command;
  j["tool_version"] = kToolVersion;
  j["started_at"] = started_at;
  j["finished_at"] = utc_timestamp();
  j["exit_code"] = exit_code;
  j["seed"] = config.seed ? ojson(*config.seed) : ojson(nullptr);
  j["config"] = ojson::parse(run_config_to_json(config));
  fs::create_directories(config.paths.output);
  detail::write_file_atomic(config.paths.output / "run_meta.json", j.dump(2) + "\n");
}

}  // namespace pedsim
