#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pedsim/decision.hpp"
#include "pedsim/scenario_catalog.hpp"

namespace pedsim {

struct PostTrialRatings {
  int q1_confidence = 0;
  std::string q1_reason;
  int q2_trust = 0;
  std::string q2_reason;

  bool operator==(const PostTrialRatings&) const = default;
};

struct TrialLog {
  std::string persona_id;
  Condition condition;
  int ordinal = 0;          // 1-based position in the persona's trial plan; 0 if unplanned
  std::string trial_dir;    // "<ordinal>_<condition dir>"
  std::uint64_t seed = 0;
  double temperature = 0;
  std::string oracle;       // backend label, e.g. "mock:cautious"
  std::vector<DecisionRecord> records;
  bool crossed = false;
  std::optional<int> crossing_time;
  std::optional<PostTrialRatings> ratings;

  std::vector<std::string> summary_lines() const;
};

std::string trial_dir_name(int ordinal, const Condition& c);

struct MemoryEntry {
  int time_step = 0;
  int position_before = 0;
  int position_after = 0;
  std::string status;
  Action action = Action::stop;
  std::string reason;
  int confidence = 0;
  int trust = 0;
  std::string clip;
};

// What the persona "remembers" of one trial: the step timeline, the summary
// block and the combined-video reference.
struct MemoryDocument {
  std::string persona_id;
  Condition condition;
  std::string trial_dir;
  std::vector<MemoryEntry> timeline;
  std::vector<std::string> summary_lines;
  std::string combined_video;  // "<trial_dir>/all_agent_see.mp4"
  // One representative frame per step, absolute paths; may be empty.
  std::vector<std::filesystem::path> step_frames;

  std::string render() const;
};

inline constexpr const char* kCombinedVideoName = "all_agent_see.mp4";

}  // namespace pedsim
