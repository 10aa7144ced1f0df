#pragma once

#include <string>
#include <string_view>

namespace pedsim {

enum class Action { forward, stop, backward };

std::string_view to_string(Action a);
// Case-insensitive; throws FormatError for anything outside the 3-action set.
Action parse_action(std::string_view text);

// "o-*-o-o-o-|ROAD" for positions 0-4, "o-o-o-o-o-|*ROAD" once on the road.
// Throws ContractViolation outside 0..5.
std::string render_status(int position);

struct ParsedDecision {
  Action action = Action::stop;
  std::string reason;
  int confidence = 0;
  int trust = 0;
};

// Extracts the "Decision:", "Reason:", "Confidence: x/5" and "Trust: y/5"
// lines. Throws FormatError on a missing label or a rating outside 1..5.
ParsedDecision parse_decision_reply(std::string_view text);

// Inverse of parse_decision_reply (without the rating explanations).
std::string format_decision_reply(const ParsedDecision& d);

struct ParsedRating {
  int value = 0;
  std::string reason;
};

// Parses "4/5 - because ..." (optionally prefixed by a label such as
// "Confidence:"). Throws FormatError outside 1..5.
ParsedRating parse_rating_reply(std::string_view text);

struct DecisionRecord {
  int time_step = 0;
  int position_before = 0;
  Action action = Action::stop;
  std::string reason;
  int confidence = 0;
  int trust = 0;
  int position_after = 0;
  std::string status;  // rendered position_after
  std::string clip;    // clip shown at this step, relative to the manifest root

  bool operator==(const DecisionRecord&) const = default;
};

// "Time 3: o-o-o-*-o-|ROAD (moved from 3 to 3 - stop)"
std::string summary_line(const DecisionRecord& r);

}  // namespace pedsim
