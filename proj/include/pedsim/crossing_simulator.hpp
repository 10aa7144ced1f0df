#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedsim/decision.hpp"
#include "pedsim/oracle_gateway.hpp"
#include "pedsim/persona_forge.hpp"
#include "pedsim/scenario_catalog.hpp"
#include "pedsim/trial.hpp"

namespace pedsim {

struct SimState {
  int position = 0;
  int time_step = 0;
  std::vector<DecisionRecord> history;
};

// Applies one decision at state.time_step and advances the clock.
// Backward clamps at 0. Throws ContractViolation once the agent is on the road
// or past the last decision point.
SimState apply_action(const SimState& state, const ParsedDecision& decision, std::string clip = {});
SimState apply_action(const SimState& state, Action action);

struct TranscriptEntry {
  std::string kind;  // "decision", "post_trial", "post_study"
  int time_step = -1;
  int attempt = 0;
  std::string question;
  std::string reply;
  std::string error;  // parse error that triggered a re-query, if any
};

using TranscriptSink = std::function<void(const TranscriptEntry&)>;

struct TrialPolicy {
  int max_parse_retries = 3;
  GridSpec grid{};
  TranscriptSink transcript;
};

// Runs t = 0..8, stopping as soon as the agent reaches the road. Oracle
// transport errors propagate; a reply that still fails to parse after the
// retries throws TrialError.
TrialLog run_trial(const PersonaProfile& profile, const Condition& condition, Oracle& oracle,
                   const ClipManifest& manifest, const TrialPolicy& policy = {}, std::uint64_t seed = 0,
                   int ordinal = 0);

// time_step + 1 of the forward step taken from position 4, if any.
std::optional<int> crossing_time(const TrialLog& log);
std::optional<int> crossing_time(std::span<const DecisionRecord> records);

// Throws TrialError when the log has no records. With a manifest, one
// representative frame per step is attached.
MemoryDocument assemble_memory(const TrialLog& log, const ClipManifest* manifest = nullptr);

// Q1 confidence and Q2 trust, each re-asked up to `max_retries` times on a
// malformed reply.
PostTrialRatings administer_post_trial(const PersonaProfile& profile, const MemoryDocument& memory,
                                       Oracle& oracle, int max_retries = 3,
                                       const TranscriptSink& transcript = {});

struct InterviewAnswers {
  int q1_similarity = 0;
  int q2_genuineness = 0;
  int q3_acceptance = 0;
  int q4_helpfulness = 0;
  std::string q5_eye_meaning;
  std::string q6_light_meaning;
  std::string q7_no_ehmi_strategy;

  bool operator==(const InterviewAnswers&) const = default;
};

// Needs one memory per condition, given in the persona's trial order.
// Throws PreconditionError otherwise.
InterviewAnswers administer_post_study(const PersonaProfile& profile,
                                       std::span<const MemoryDocument> memories, Oracle& oracle,
                                       int max_retries = 3, const TranscriptSink& transcript = {});

// ---- persistence --------------------------------------------------------

std::string trial_log_to_json(const TrialLog& log);
// Throws SchemaError on a malformed document. With `check` false only the
// shape is enforced, so inconsistent logs can still be inspected.
TrialLog trial_log_from_json(std::string_view text, bool check = true);

std::string interview_to_json(const InterviewAnswers& answers);
InterviewAnswers interview_from_json(std::string_view text);

struct PersistOptions {
  const ClipManifest* manifest = nullptr;  // source of the step clips
  // Concatenation command with {list} and {output}; empty leaves only the
  // concat list beside the expected all_agent_see.mp4 path.
  std::string concat_command;
  std::vector<TranscriptEntry> transcript;
};

// Writes <persona_dir>/<trial_dir>/simulation_log.json, step_views/ and the
// combined-video list. Returns the trial directory.
std::filesystem::path persist_trial(const TrialLog& log, const std::filesystem::path& persona_dir,
                                    const PersistOptions& options = {});

TrialLog load_trial_log(const std::filesystem::path& file);

struct ReplayResult {
  bool identical = false;
  std::optional<int> first_divergence;  // time step
  std::string detail;
};

// Re-runs the trial with the recorded seed and compares record by record.
ReplayResult replay_trial(const TrialLog& recorded, const PersonaProfile& profile, Oracle& oracle,
                          const ClipManifest& manifest, const TrialPolicy& policy = {});

}  // namespace pedsim
