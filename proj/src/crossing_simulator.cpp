#include "pedsim/crossing_simulator.hpp"

#include <fmt/format.h>

#include "pedsim/errors.hpp"
#include "util.hpp"

namespace pedsim {

std::string trial_dir_name(int ordinal, const Condition& c) {
  if (ordinal <= 0) return dir_name(c);
  return fmt::format("{}_{}", ordinal, dir_name(c));
}

std::vector<std::string> TrialLog::summary_lines() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(summary_line(r));
  return out;
}

std::string MemoryDocument::render() const {
  std::string out = fmt::format("=== Trial {} ({}) ===\n", trial_dir, dir_name(condition));
  for (const auto& e : timeline) {
    out += fmt::format("\n--- Time Step {} ({}.0s) ---\n", e.time_step, e.time_step);
    out += fmt::format("Current position: {}\n", e.position_before);
    out += fmt::format("Status: {}\n", render_status(e.position_before));
    if (!e.clip.empty()) out += fmt::format("Video: {}\n", e.clip);
    out += fmt::format("Decision: {}\nReason: {}\nConfidence: {}/5\nTrust: {}/5\n", to_string(e.action),
                       e.reason, e.confidence, e.trust);
    out += fmt::format("New status: {}\n", e.status);
  }
  out += "\n=== All Position Status Summary ===\n";
  for (const auto& line : summary_lines) out += line + "\n";
  out += fmt::format("\nCombined video saved to: {}\n", combined_video);
  return out;
}

SimState apply_action(const SimState& state, const ParsedDecision& d, std::string clip) {
  if (state.position < 0 || state.position >= kRoadPosition) {
    throw ContractViolation(fmt::format("apply_action: agent at position {} cannot act", state.position));
  }
  if (state.time_step < 0 || state.time_step > kLastTimeStep) {
    throw ContractViolation(fmt::format("apply_action: time step {} outside 0..{}", state.time_step, kLastTimeStep));
  }
  SimState next = state;
  DecisionRecord r;
  r.time_step = state.time_step;
  r.position_before = state.position;
  r.action = d.action;
  r.reason = d.reason;
  r.confidence = d.confidence;
  r.trust = d.trust;
  switch (d.action) {
    case Action::forward: r.position_after = state.position + 1; break;
    case Action::stop: r.position_after = state.position; break;
    case Action::backward: r.position_after = std::max(state.position - 1, 0); break;
  }
  r.status = render_status(r.position_after);
  r.clip = std::move(clip);
  next.position = r.position_after;
  next.time_step = state.time_step + 1;
  next.history.push_back(std::move(r));
  return next;
}

SimState apply_action(const SimState& state, Action action) {
  return apply_action(state, ParsedDecision{action, {}, 3, 3});
}

std::optional<int> crossing_time(std::span<const DecisionRecord> records) {
  for (const auto& r : records) {
    if (r.position_before == kRoadPosition - 1 && r.action == Action::forward) return r.time_step + 1;
  }
  return std::nullopt;
}

std::optional<int> crossing_time(const TrialLog& log) { return crossing_time(log.records); }

namespace {

constexpr std::string_view kReminder =
    "Your previous reply could not be read ({}). Reply again using exactly the four labeled lines "
    "Decision:, Reason:, Confidence: <1-5>/5 and Trust: <1-5>/5.";

std::uint64_t step_seed(std::uint64_t seed, int time_step, int attempt) {
  return seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(time_step * 16 + attempt + 1));
}

}  // namespace

TrialLog run_trial(const PersonaProfile& profile, const Condition& condition, Oracle& oracle,
                   const ClipManifest& manifest, const TrialPolicy& policy, std::uint64_t seed, int ordinal) {
  policy.grid.validate();
  if (policy.max_parse_retries < 0) throw ConfigError("max_parse_retries must be >= 0");

  TrialLog log;
  log.persona_id = profile.name;
  log.condition = condition;
  log.ordinal = ordinal;
  log.trial_dir = trial_dir_name(ordinal, condition);
  log.seed = seed;
  log.temperature = oracle.temperature();
  log.oracle = oracle.label();

  SimState state;
  const int last = policy.grid.last_time_step();
  while (state.time_step <= last && state.position < kRoadPosition) {
    const auto& clip = resolve_clip(manifest, condition, state.position, state.time_step);
    DecisionQuery q;
    q.profile = &profile;
    q.condition = condition;
    q.position = state.position;
    q.time_step = state.time_step;
    q.status = render_status(state.position);
    q.frames = clip.frames;
    q.history = state.history;

    std::optional<ParsedDecision> parsed;
    std::string last_error;
    for (int attempt = 0; attempt <= policy.max_parse_retries && !parsed; ++attempt) {
      q.seed = step_seed(seed, state.time_step, attempt);
      q.format_reminder = attempt == 0 ? std::string() : fmt::format(fmt::runtime(kReminder), last_error);
      const auto reply = oracle.decide(q);
      TranscriptEntry entry{"decision", state.time_step, attempt, std::string(kDecisionQuestion), reply, {}};
      try {
        parsed = parse_decision_reply(reply);
      } catch (const FormatError& e) {
        last_error = e.what();
        entry.error = last_error;
      }
      if (policy.transcript) policy.transcript(entry);
    }
    if (!parsed) {
      throw TrialError(fmt::format("{} {}: reply at t={} unreadable after {} attempt(s): {}", profile.name,
                                   dir_name(condition), state.time_step, policy.max_parse_retries + 1,
                                   last_error));
    }
    state = apply_action(state, *parsed, clip.relative);
  }

  log.records = std::move(state.history);
  log.crossing_time = crossing_time(log.records);
  log.crossed = log.crossing_time.has_value();
  return log;
}

MemoryDocument assemble_memory(const TrialLog& log, const ClipManifest* manifest) {
  if (log.records.empty()) {
    throw TrialError(fmt::format("trial log {} {} has no records", log.persona_id, log.trial_dir));
  }
  MemoryDocument m;
  m.persona_id = log.persona_id;
  m.condition = log.condition;
  m.trial_dir = log.trial_dir;
  for (const auto& r : log.records) {
    m.timeline.push_back({r.time_step, r.position_before, r.position_after, r.status, r.action, r.reason,
                          r.confidence, r.trust, r.clip});
    if (manifest) {
      const auto it = manifest->entries.find({log.condition, r.position_before, r.time_step});
      if (it != manifest->entries.end() && !it->second.frames.empty()) {
        const auto& frames = it->second.frames;
        m.step_frames.push_back(frames[frames.size() / 2]);
      }
    }
  }
  m.summary_lines = log.summary_lines();
  m.combined_video = log.trial_dir + "/" + kCombinedVideoName;
  return m;
}

ReplayResult replay_trial(const TrialLog& recorded, const PersonaProfile& profile, Oracle& oracle,
                          const ClipManifest& manifest, const TrialPolicy& policy) {
  const auto fresh = run_trial(profile, recorded.condition, oracle, manifest, policy, recorded.seed, recorded.ordinal);
  ReplayResult out;
  const auto n = std::min(fresh.records.size(), recorded.records.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(fresh.records[i] == recorded.records[i])) {
      out.first_divergence = recorded.records[i].time_step;
      out.detail = fmt::format("t={}: recorded \"{}\", replayed \"{}\"", recorded.records[i].time_step,
                               summary_line(recorded.records[i]), summary_line(fresh.records[i]));
      return out;
    }
  }
  if (fresh.records.size() != recorded.records.size()) {
    out.first_divergence = static_cast<int>(n);
    out.detail = fmt::format("recorded {} steps, replayed {}", recorded.records.size(), fresh.records.size());
    return out;
  }
  if (fresh.crossed != recorded.crossed || fresh.crossing_time != recorded.crossing_time) {
    out.detail = "crossing outcome differs";
    return out;
  }
  out.identical = true;
  return out;
}

}  // namespace pedsim
