#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"
#include "pedsim/analysis.hpp"
#include "pedsim/crossing_simulator.hpp"
#include "pedsim/errors.hpp"
#include "pedsim/trajectory_ingest.hpp"
#include "pedsim/workbench.hpp"
#include "util.hpp"

namespace pedsim {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::ostream& out(const CommandContext& ctx) { return ctx.out ? *ctx.out : std::cout; }
std::ostream& err(const CommandContext& ctx) { return ctx.err ? *ctx.err : std::cerr; }

std::shared_ptr<Oracle> oracle_for(const CommandContext& ctx) {
  if (ctx.oracle) return ctx.oracle;
  return std::shared_ptr<Oracle>(make_oracle(ctx.config.oracle));
}

fs::path clips_dir(const RunConfig& c) { return c.paths.clips.empty() ? c.paths.output / "clips" : c.paths.clips; }
fs::path human_dir(const RunConfig& c) { return c.paths.human.empty() ? c.paths.output / "human" : c.paths.human; }
fs::path trials_dir(const RunConfig& c) { return c.paths.output / "trials"; }

std::vector<fs::path> json_files(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Personas keyed by file stem, in id order.
std::vector<std::pair<std::string, PersonaProfile>> load_personas(const fs::path& dir) {
  std::vector<std::pair<std::string, PersonaProfile>> personas;
  for (const auto& f : json_files(dir)) {
    try {
      personas.emplace_back(f.stem().string(), parse_persona_document(detail::read_file(f)));
    } catch (const ParseError& e) {
      throw SchemaError(f.string() + ": " + e.what());
    }
  }
  return personas;
}

ClipManifest open_manifest(const RunConfig& c) {
  ManifestOptions options;
  options.grid = c.grid;
  options.frames_root = c.paths.frames;
  options.extractor = make_frame_extractor(c.oracle.frame_command);
  return load_manifest(clips_dir(c), options);
}

fs::path log_path(const RunConfig& c, const std::string& persona, const std::string& trial_dir) {
  return trials_dir(c) / persona / trial_dir / "simulation_log.json";
}

std::vector<std::string> split_formats(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text + ",") {
    if (ch == ',') {
      const auto t = std::string(detail::trim(cur));
      if (!t.empty()) parts.push_back(detail::to_lower(t));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return parts;
}

// ---- ingest ---------------------------------------------------------------

struct HumanRatings {
  std::map<std::pair<std::string, std::string>, std::map<std::string, int>> trials;  // (id, condition dir)
  std::map<std::string, std::map<std::string, int>> participants;
};

HumanRatings load_human_ratings(const fs::path& file) {
  HumanRatings r;
  if (!fs::exists(file)) return r;
  try {
    const auto j = nlohmann::json::parse(detail::read_file(file));
    for (const auto& t : j.value("trials", nlohmann::json::array())) {
      auto& m = r.trials[{t.at("id").get<std::string>(), dir_name(parse_condition(t.at("condition").get<std::string>()))}];
      for (const char* key : {"confidence", "trust"}) {
        if (t.contains(key)) m[key] = t.at(key).get<int>();
      }
    }
    for (const auto& p : j.value("participants", nlohmann::json::array())) {
      auto& m = r.participants[p.at("id").get<std::string>()];
      for (const char* key : {"similarity", "genuineness", "acceptance", "helpfulness"}) {
        if (p.contains(key)) m[key] = p.at(key).get<int>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(file.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw SchemaError(file.string() + ": " + e.what());
  }
  return r;
}

CohortDataset build_cohort(const CommandContext& ctx) {
  const auto& c = ctx.config;
  CohortDataset data;

  const auto hdir = human_dir(c);
  const auto ratings = load_human_ratings(hdir / "ratings.json");
  std::set<std::string> human_ids;
  for (const auto& f : json_files(hdir)) {
    if (f.filename() == "ratings.json") continue;
    const auto traj = load_annotation_export(f);
    const auto trace = discretize(traj, c.stop_threshold, c.grid);
    Observation o;
    o.group = Group::human;
    o.id = traj.participant;
    o.condition = traj.condition;
    o.crossing_time = traj.road_entry_time;
    o.trace = trace.entries;
    if (const auto it = ratings.trials.find({o.id, dir_name(o.condition)}); it != ratings.trials.end()) o.likert = it->second;
    human_ids.insert(o.id);
    data.observations.push_back(std::move(o));
  }
  for (const auto& [id, likert] : ratings.participants) {
    if (human_ids.count(id)) data.participants.push_back({Group::human, id, likert});
  }

  const auto tdir = trials_dir(c);
  if (fs::is_directory(tdir)) {
    std::vector<fs::path> persona_dirs;
    for (const auto& e : fs::directory_iterator(tdir)) {
      if (e.is_directory()) persona_dirs.push_back(e.path());
    }
    std::sort(persona_dirs.begin(), persona_dirs.end());
    for (const auto& pdir : persona_dirs) {
      std::vector<fs::path> logs;
      for (const auto& e : fs::directory_iterator(pdir)) {
        if (e.is_directory() && fs::exists(e.path() / "simulation_log.json")) logs.push_back(e.path() / "simulation_log.json");
      }
      std::sort(logs.begin(), logs.end());
      for (const auto& f : logs) {
        const auto log = load_trial_log(f);
        Observation o;
        o.group = Group::vlm;
        o.id = log.persona_id;
        o.condition = log.condition;
        if (log.crossing_time) o.crossing_time = *log.crossing_time;
        if (log.ratings) o.likert = {{"confidence", log.ratings->q1_confidence}, {"trust", log.ratings->q2_trust}};
        o.trace = trace_from_log(log).entries;
        data.observations.push_back(std::move(o));
      }
      if (const auto f = pdir / "interview.json"; fs::exists(f)) {
        const auto a = interview_from_json(detail::read_file(f));
        data.participants.push_back({Group::vlm,
                                     pdir.filename().string(),
                                     {{"similarity", a.q1_similarity},
                                      {"genuineness", a.q2_genuineness},
                                      {"acceptance", a.q3_acceptance},
                                      {"helpfulness", a.q4_helpfulness}}});
      }
    }
  }
  data.validate();
  return data;
}

AnalysisResults run_analysis(const CommandContext& ctx, const CohortDataset& data) {
  AnalysisOptions options;
  options.permutation.n_perm = ctx.config.n_perm;
  options.permutation.seed = ctx.config.require_seed();
  options.subset_seed = options.permutation.seed;
  auto results = analyze(data, options);
  for (const auto& n : results.notices) out(ctx) << "note: " << n << "\n";
  return results;
}

// ---- human synthesis -----------------------------------------------------

HumanTrajectory synthetic_trajectory(const std::string& id, const Condition& cond, double entry, std::mt19937_64& rng,
                                     const GridSpec& grid) {
  const double span = grid.interval_m * (grid.positions - 1);
  constexpr double kWalk = 1.4;  // m/s
  const double walk_time = span / kWalk;
  double wait = std::max(0.0, entry - walk_time);
  double speed = kWalk;
  if (wait == 0.0) speed = span / entry;
  std::uniform_real_distribution<double> where(0.0, span);
  const double wait_at = where(rng);

  HumanTrajectory t;
  t.participant = id;
  t.condition = cond;
  t.road_entry_time = entry;
  const double t_wait = wait_at / speed;
  const auto d_of = [&](double time) {
    if (time <= t_wait) return time * speed;
    if (time <= t_wait + wait) return wait_at;
    return std::min(span + grid.interval_m, wait_at + (time - t_wait - wait) * speed);
  };
  const double end = entry + grid.interval_m / speed;
  for (int i = 0;; ++i) {
    const double time = 0.1 * i;
    if (time > end + 1e-9) break;
    t.samples.push_back({time, d_of(time)});
  }
  const auto time_of = [&](double d) {
    if (d <= wait_at) return d / speed;
    return t_wait + wait + (d - wait_at) / speed;
  };
  for (int m = 0; m < 5; ++m) t.marker_times[m] = time_of(grid.marker_distance(m));
  return t;
}

}  // namespace

// ---- persona build ---------------------------------------------------------

int cmd_persona_build(CommandContext& ctx) {
  const auto& c = ctx.config;
  if (c.paths.questionnaires.empty()) throw ConfigError("paths.questionnaires is required for persona build");
  if (!fs::is_directory(c.paths.questionnaires)) {
    throw ConfigError("questionnaire directory not found: " + c.paths.questionnaires.string());
  }
  fs::create_directories(c.paths.personas);
  auto oracle = oracle_for(ctx);

  std::vector<std::string> failures;
  int built = 0, kept = 0;
  for (const auto& f : json_files(c.paths.questionnaires)) {
    QuestionnaireResponse q;
    try {
      q = parse_questionnaire(detail::read_file(f));
      validate_questionnaire(q);
    } catch (const Error& e) {
      failures.push_back(fmt::format("{}: {}", f.filename().string(), e.what()));
      continue;
    }
    const auto target = c.paths.personas / (q.participant_id + ".json");
    if (fs::exists(target)) {
      try {
        if (validate_persona(parse_persona_document(detail::read_file(target))).empty()) {
          ++kept;
          continue;
        }
      } catch (const ParseError&) {
      }
    }
    try {
      auto profile = generate_persona(*oracle, compose_persona_instruction(q));
      profile.name = q.participant_id;
      detail::write_file_atomic(target, serialize_persona(profile));
      ++built;
      out(ctx) << "persona " << q.participant_id << " -> " << target.string() << "\n";
    } catch (const GenerationError& e) {
      failures.push_back(fmt::format("{}: {}", q.participant_id, e.what()));
    }
  }
  out(ctx) << fmt::format("personas built: {}, kept: {}, failed: {}\n", built, kept, failures.size());
  for (const auto& f : failures) err(ctx) << "failed: " << f << "\n";
  return failures.empty() ? kExitOk : kExitPartial;
}

// ---- sim run ---------------------------------------------------------------

int cmd_sim_run(CommandContext& ctx) {
  const auto& c = ctx.config;
  const auto seed = c.require_seed();
  const auto personas = load_personas(c.paths.personas);
  if (personas.empty()) throw ConfigError("no personas found in " + c.paths.personas.string());
  const auto manifest = open_manifest(c);
  auto oracle = oracle_for(ctx);

  std::vector<std::string> ids;
  for (const auto& [id, _] : personas) ids.push_back(id);
  const auto plans = build_trial_orders(ids);

  struct Task {
    std::size_t persona;
    int ordinal;
    Condition condition;
  };
  std::vector<Task> tasks;
  int skipped = 0;
  for (std::size_t i = 0; i < personas.size(); ++i) {
    for (int k = 0; k < 6; ++k) {
      const auto& cond = plans[i].order[static_cast<std::size_t>(k)];
      if (fs::exists(log_path(c, ids[i], trial_dir_name(k + 1, cond)))) {
        ++skipped;
        continue;
      }
      tasks.push_back({i, k + 1, cond});
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex mu;
  std::vector<std::string> failures;
  std::string backend_error;
  int done = 0;

  const auto worker = [&] {
    for (;;) {
      if (abort) return;
      const auto idx = next++;
      if (idx >= tasks.size()) return;
      const auto& task = tasks[idx];
      const auto& [id, profile] = personas[task.persona];
      const auto dir = trial_dir_name(task.ordinal, task.condition);
      try {
        PersistOptions persist;
        persist.manifest = &manifest;
        persist.concat_command = c.concat_command;
        TrialPolicy policy;
        policy.max_parse_retries = c.max_parse_retries;
        policy.grid = c.grid;
        if (c.transcripts) policy.transcript = [&persist](const TranscriptEntry& e) { persist.transcript.push_back(e); };
        auto log = run_trial(profile, task.condition, *oracle, manifest, policy,
                             detail::fnv1a(id + "/" + dir_name(task.condition), seed), task.ordinal);
        log.persona_id = id;
        const auto memory = assemble_memory(log, &manifest);
        log.ratings = administer_post_trial(profile, memory, *oracle, c.max_parse_retries, policy.transcript);
        persist_trial(log, trials_dir(c) / id, persist);
        std::lock_guard lock(mu);
        ++done;
        out(ctx) << fmt::format("{} {}: {}\n", id, dir,
                                log.crossing_time ? fmt::format("crossed at {} s", *log.crossing_time) : "did not cross");
      } catch (const TransportError& e) {
        abort = true;
        std::lock_guard lock(mu);
        if (backend_error.empty()) backend_error = fmt::format("{} {}: {}", id, dir, e.what());
      } catch (const TrialError& e) {
        std::lock_guard lock(mu);
        failures.push_back(fmt::format("{} {}: {}", id, dir, e.what()));
      } catch (const FormatError& e) {
        std::lock_guard lock(mu);
        failures.push_back(fmt::format("{} {}: {}", id, dir, e.what()));
      }
    }
  };
  std::vector<std::thread> pool;
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(c.jobs), std::max<std::size_t>(tasks.size(), 1));
  for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (!backend_error.empty()) {
    err(ctx) << "backend failure, run stopped: " << backend_error << "\n";
    return kExitBackend;
  }

  int interviews = 0;
  for (std::size_t i = 0; i < personas.size(); ++i) {
    const auto& [id, profile] = personas[i];
    const auto target = trials_dir(c) / id / "interview.json";
    if (fs::exists(target)) continue;
    std::vector<MemoryDocument> memories;
    for (int k = 0; k < 6; ++k) {
      const auto f = log_path(c, id, trial_dir_name(k + 1, plans[i].order[static_cast<std::size_t>(k)]));
      if (!fs::exists(f)) break;
      memories.push_back(assemble_memory(load_trial_log(f), &manifest));
    }
    if (memories.size() != 6) continue;
    try {
      const auto answers = administer_post_study(profile, memories, *oracle, c.max_parse_retries);
      detail::write_file_atomic(target, interview_to_json(answers));
      ++interviews;
    } catch (const TransportError& e) {
      err(ctx) << "backend failure during interview: " << id << ": " << e.what() << "\n";
      return kExitBackend;
    } catch (const FormatError& e) {
      failures.push_back(fmt::format("{} interview: {}", id, e.what()));
    }
  }

  out(ctx) << fmt::format("trials run: {}, skipped (already complete): {}, failed: {}, interviews: {}\n", done, skipped,
                          failures.size(), interviews);
  for (const auto& f : failures) err(ctx) << "failed: " << f << "\n";
  return failures.empty() ? kExitOk : kExitPartial;
}

// ---- sim replay ------------------------------------------------------------

int cmd_sim_replay(CommandContext& ctx, const fs::path& log_file) {
  if (!fs::exists(log_file)) throw IoError("no such file: " + log_file.string());
  const auto text = detail::read_file(log_file);
  const auto log = trial_log_from_json(text, false);
  std::vector<std::string> recorded_summary;
  try {
    recorded_summary = nlohmann::json::parse(text).value("summary", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("simulation log: ") + e.what());
  }

  const auto diverge = [&](int step, const std::string& detail) {
    out(ctx) << fmt::format("replay FAILED at time step {}: {}\n", step, detail);
    return kExitReplayFailed;
  };
  if (log.records.empty()) return diverge(0, "log has no records");

  SimState state;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    if (state.position >= kRoadPosition || state.time_step > ctx.config.grid.last_time_step()) {
      return diverge(r.time_step, "record after the trial ended");
    }
    if (r.time_step != state.time_step) {
      return diverge(state.time_step, fmt::format("recorded time step {} expected {}", r.time_step, state.time_step));
    }
    if (r.position_before != state.position) {
      return diverge(r.time_step, fmt::format("position_before {} expected {}", r.position_before, state.position));
    }
    state = apply_action(state, r.action);
    if (r.position_after != state.position) {
      return diverge(r.time_step, fmt::format("position_after {} expected {}", r.position_after, state.position));
    }
    if (r.status != render_status(state.position)) {
      return diverge(r.time_step, fmt::format("status \"{}\" expected \"{}\"", r.status, render_status(state.position)));
    }
    if (i < recorded_summary.size() && recorded_summary[i] != summary_line(state.history.back())) {
      return diverge(r.time_step, fmt::format("summary line \"{}\" expected \"{}\"", recorded_summary[i],
                                              summary_line(state.history.back())));
    }
  }
  if (recorded_summary.size() != log.records.size()) {
    return diverge(log.records.back().time_step,
                   fmt::format("{} summary lines for {} records", recorded_summary.size(), log.records.size()));
  }
  if (state.position < kRoadPosition && state.time_step <= ctx.config.grid.last_time_step()) {
    return diverge(state.time_step, "log ends before the trial finished");
  }
  const auto ct = crossing_time(state.history);
  if (ct != log.crossing_time || log.crossed != ct.has_value()) {
    return diverge(log.records.back().time_step,
                   fmt::format("recorded crossing_time {} expected {}",
                               log.crossing_time ? std::to_string(*log.crossing_time) : "null",
                               ct ? std::to_string(*ct) : "null"));
  }
  out(ctx) << fmt::format("replay ok: {} steps, {}\n", log.records.size(),
                          ct ? fmt::format("crossing_time {}", *ct) : std::string("not crossed"));
  return kExitOk;
}

// ---- scaffolding -----------------------------------------------------------

int cmd_sim_scaffold(CommandContext& ctx, int frames_per_clip) {
  if (frames_per_clip < 1) throw ConfigError("frames per clip must be >= 1");
  const auto root = clips_dir(ctx.config);
  write_placeholder_clip_tree(root, frames_per_clip, ctx.config.grid);
  out(ctx) << "placeholder clip tree written to " << root.string() << "\n";
  return kExitOk;
}

int cmd_human_synth(CommandContext& ctx, int participants) {
  if (participants < 1) throw ConfigError("participants must be >= 1");
  const auto seed = ctx.config.require_seed();
  SyntheticSpec spec;
  spec.ids_per_group = participants;
  spec.human = {5.25, 0.72, {}};
  spec.vlm = spec.human;
  const auto cohort = synthetic_cohort(spec, seed);

  const auto dir = human_dir(ctx.config);
  fs::create_directories(dir);
  std::mt19937_64 rng(seed ^ 0x5bd1e995ull);
  std::uniform_int_distribution<int> likert(1, 5);
  ojson ratings;
  ratings["trials"] = ojson::array();
  ratings["participants"] = ojson::array();
  int written = 0;
  for (const auto& o : cohort.observations) {
    if (o.group != Group::human || !o.crossing_time) continue;
    const auto traj = synthetic_trajectory(o.id, o.condition, *o.crossing_time, rng, ctx.config.grid);
    detail::write_file_atomic(dir / fmt::format("{}_{}.json", o.id, dir_name(o.condition)), annotation_export_to_json(traj));
    ratings["trials"].push_back(
        {{"id", o.id}, {"condition", dir_name(o.condition)}, {"confidence", likert(rng)}, {"trust", likert(rng)}});
    ++written;
  }
  for (const auto& id : cohort.ids(Group::human)) {
    ratings["participants"].push_back({{"id", id},
                                       {"similarity", likert(rng)},
                                       {"genuineness", likert(rng)},
                                       {"acceptance", likert(rng)},
                                       {"helpfulness", likert(rng)}});
  }
  detail::write_file_atomic(dir / "ratings.json", ratings.dump(2) + "\n");
  out(ctx) << fmt::format("{} synthetic annotation exports written to {}\n", written, dir.string());
  return kExitOk;
}

// ---- analysis --------------------------------------------------------------

int cmd_ingest(CommandContext& ctx) {
  const auto data = build_cohort(ctx);
  const auto target = ctx.config.paths.output / "cohort.json";
  fs::create_directories(ctx.config.paths.output);
  detail::write_file_atomic(target, cohort_to_json(data));
  out(ctx) << fmt::format("cohort: {} human ids, {} vlm ids, {} observations -> {}\n", data.ids(Group::human).size(),
                          data.ids(Group::vlm).size(), data.observations.size(), target.string());
  return kExitOk;
}

int cmd_compare(CommandContext& ctx) {
  const auto data = build_cohort(ctx);
  const auto results = run_analysis(ctx, data);
  if (results.empty()) throw PreconditionError("no observations to compare");
  fs::create_directories(ctx.config.paths.output);
  detail::write_file_atomic(ctx.config.paths.output / "cohort.json", cohort_to_json(data));
  const auto files = emit_report(results, ctx.config.paths.output / "report");
  detail::write_file_atomic(ctx.config.paths.output / "reference_constants.json", reference_constants_json());
  if (results.effects) {
    for (const auto& e : results.effects->effects) {
      out(ctx) << fmt::format("{:<16} F({}, {}) = {:.3f}  p = {:.4f}\n", e.name, e.df_effect, e.df_error, e.f, e.p);
    }
  }
  for (const auto& s : results.slices) {
    out(ctx) << fmt::format("{:<14} U = {:.1f}  p = {:.4f} ({})\n", dir_name(s.condition), s.test.u, s.test.p,
                            to_string(s.test.mode));
  }
  out(ctx) << files.size() << " report files written to " << (ctx.config.paths.output / "report").string() << "\n";
  return kExitOk;
}

int cmd_report(CommandContext& ctx, const std::string& formats) {
  ReportFormats f{false, false, false};
  for (const auto& part : split_formats(formats)) {
    if (part == "json") {
      f.json = true;
    } else if (part == "csv") {
      f.csv = true;
    } else if (part == "svg") {
      f.svg = true;
    } else if (part == "all") {
      f = ReportFormats{};
    } else {
      throw ConfigError("unknown report format: " + part);
    }
  }
  if (!f.json && !f.csv && !f.svg) throw ConfigError("no report format selected");
  const auto data = build_cohort(ctx);
  const auto results = run_analysis(ctx, data);
  const auto files = emit_report(results, ctx.config.paths.output / "report", f);
  for (const auto& p : files) out(ctx) << p.string() << "\n";
  return kExitOk;
}

}  // namespace pedsim
