#include <algorithm>
#include <mutex>

#include <fmt/format.h>

#include "pedsim/errors.hpp"
#include "pedsim/oracle_gateway.hpp"
#include "util.hpp"

namespace pedsim {

std::string_view to_string(Backend b) { return b == Backend::remote ? "remote" : "mock"; }

Backend parse_backend(std::string_view text) {
  const auto t = detail::to_lower(detail::trim(text));
  if (t == "remote") return Backend::remote;
  if (t == "mock") return Backend::mock;
  throw ConfigError("unknown backend \"" + std::string(text) + "\" (expected remote or mock)");
}

void OracleConfig::validate() const {
  if (temperature < 0) throw ConfigError("temperature must be >= 0");
  if (max_frames < 1) throw ConfigError("max_frames must be >= 1");
  if (retry_limit < 0) throw ConfigError("retry_limit must be >= 0");
  if (timeout_s <= 0) throw ConfigError("timeout must be positive");
  if (history_window < 0) throw ConfigError("history_window must be >= 0");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (backend == Backend::remote) {
    if (endpoint.empty()) throw ConfigError("remote backend requires an endpoint URL");
    if (credential_env.empty()) throw ConfigError("remote backend requires a credential variable name");
    if (model.empty()) throw ConfigError("remote backend requires a model name");
  } else {
    const auto ids = mock_policy_ids();
    if (std::find(ids.begin(), ids.end(), mock_policy) == ids.end())
      throw ConfigError("unknown mock policy \"" + mock_policy + "\"");
  }
}

std::string_view to_string(ChatTurn::Role r) {
  switch (r) {
    case ChatTurn::Role::system: return "system";
    case ChatTurn::Role::user: return "user";
    case ChatTurn::Role::assistant: return "assistant";
  }
  return "user";
}

std::string_view question_text(SurveyItem item) {
  switch (item) {
    case SurveyItem::post_trial_confidence: return "Rate how sure you were of the choices you made in this trial.";
    case SurveyItem::post_trial_trust: return "Rate how far you trusted the self-driving car in this trial.";
    case SurveyItem::similarity:
      return "Rate how close the study setting felt to an actual street.";
    case SurveyItem::genuineness:
      return "Rate how closely your actions in the study matched what you would really do.";
    case SurveyItem::acceptance:
      return "Having met the self-driving car, rate how willing you are to accept it.";
    case SurveyItem::helpfulness:
      return "Rate how useful the car's external display was for deciding what to do.";
    case SurveyItem::eye_meaning: return "What did the animated eyes on the car tell you?";
    case SurveyItem::light_meaning: return "What did the light strip on the car tell you?";
    case SurveyItem::no_ehmi_strategy:
      return "With no display on the car, what did you base your choices on?";
  }
  return "";
}

bool is_likert(SurveyItem item) {
  switch (item) {
    case SurveyItem::eye_meaning:
    case SurveyItem::light_meaning:
    case SurveyItem::no_ehmi_strategy: return false;
    default: return true;
  }
}

std::string persona_system_prompt(const PersonaProfile& p) {
  std::string out = fmt::format(
      "You are {}, a pedestrian taking part in a street-crossing study with an autonomous vehicle "
      "(AV).\n\n{}\n\nDecision criteria:\n",
      p.name, p.description);
  for (const auto& c : p.decision_criteria) out += "- " + c + "\n";
  out +=
      "\nYou start 3.2 m from the road edge. Five points are marked 0.8 m apart; the status line "
      "shows them left to right with '*' at your point, followed by the road edge (|ROAD). Every "
      "second you see video frames from your current point and choose one action: forward (move "
      "one point toward the road; forward from the last point puts you on the road), stop (stay), "
      "or backward (move one point away from the road). Stay in character.";
  return out;
}

namespace {

std::string decision_prompt(int time_step, int position, const std::string& status) {
  return fmt::format("Time step {} ({}.0s)\nCurrent position: {}\nStatus: {}\n{}", time_step,
                     time_step, position, status, kDecisionQuestion);
}

constexpr std::string_view kDecisionFormat =
    "Answer exactly in this format:\n"
    "Decision: forward|stop|backward\n"
    "Reason: <your reasoning>\n"
    "Confidence: <1-5>/5 - <short explanation>\n"
    "Trust: <1-5>/5 - <short explanation>";

}  // namespace

std::vector<ChatTurn> build_decision_turns(const OracleConfig& config, const DecisionQuery& q) {
  if (!q.profile) throw ContractViolation("decision query without persona");
  if (q.frames.empty()) throw ContractViolation("decision query without frames");
  std::vector<ChatTurn> turns;
  turns.push_back({ChatTurn::Role::system, persona_system_prompt(*q.profile), {}});

  std::size_t first = 0;
  if (config.history_window > 0 && q.history.size() > static_cast<std::size_t>(config.history_window))
    first = q.history.size() - static_cast<std::size_t>(config.history_window);
  for (std::size_t i = first; i < q.history.size(); ++i) {
    const auto& r = q.history[i];
    turns.push_back({ChatTurn::Role::user,
                     decision_prompt(r.time_step, r.position_before, render_status(r.position_before)),
                     {}});
    turns.push_back({ChatTurn::Role::assistant,
                     format_decision_reply({r.action, r.reason, r.confidence, r.trust}),
                     {}});
  }

  ChatTurn current{ChatTurn::Role::user, decision_prompt(q.time_step, q.position, q.status), {}};
  current.text += "\n" + std::string(kDecisionFormat);
  if (!q.format_reminder.empty()) current.text += "\n\n" + q.format_reminder;
  for (auto idx : subsample_indices(q.frames.size(), static_cast<std::size_t>(config.max_frames)))
    current.frames.push_back(q.frames[idx]);
  turns.push_back(std::move(current));
  return turns;
}

std::vector<ChatTurn> build_survey_turns(const SurveyQuery& q) {
  if (!q.profile) throw ContractViolation("survey query without persona");
  std::vector<ChatTurn> turns;
  turns.push_back({ChatTurn::Role::system, persona_system_prompt(*q.profile), {}});
  ChatTurn user{ChatTurn::Role::user, {}, {}};
  for (const auto* memory : q.memories) {
    user.text += memory->render() + "\n";
    user.frames.insert(user.frames.end(), memory->step_frames.begin(), memory->step_frames.end());
  }
  user.text += std::string(question_text(q.item)) + "\n";
  if (is_likert(q.item)) {
    user.text += "Answer on a 5-point scale in the form: <1-5>/5 - <your reasoning>";
  } else {
    user.text += "Answer in a few sentences, in your own words.";
  }
  if (!q.format_reminder.empty()) user.text += "\n\n" + q.format_reminder;
  turns.push_back(std::move(user));
  return turns;
}

std::unique_ptr<Oracle> make_oracle(const OracleConfig& config, std::shared_ptr<HttpTransport> transport) {
  config.validate();
  if (config.backend == Backend::mock) return std::make_unique<MockOracle>(config);
  if (!transport) transport = make_http_transport();
  return std::make_unique<RemoteOracle>(config, std::move(transport));
}

namespace {

std::string_view json_object_span(std::string_view reply) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return reply;
  return reply.substr(open, close - open + 1);
}

}  // namespace

PersonaProfile generate_persona(Oracle& oracle, std::string_view instruction) {
  std::string prompt(instruction);
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto reply = oracle.craft_persona(prompt);
    try {
      auto profile = parse_persona_document(json_object_span(reply));
      const auto report = validate_persona(profile);
      if (!report.empty()) throw StructureError("persona invalid: " + report.front().field + ": " + report.front().message);
      return profile;
    } catch (const ParseError& e) {
      last_error = e.what();
      prompt = std::string(instruction) + "\n\nYour previous reply could not be used (" + last_error +
               "). Reply with only the corrected JSON object.";
    }
  }
  throw GenerationError("persona generation failed after corrective re-query: " + last_error);
}

// ---- scripted -----------------------------------------------------------

struct ScriptedOracle::State {
  std::mutex mu;
  std::vector<std::string> decisions;
  std::vector<std::string> surveys;
  std::size_t next_decision = 0;
  std::size_t next_survey = 0;
};

ScriptedOracle::ScriptedOracle(std::vector<std::string> decision_replies,
                               std::vector<std::string> survey_replies)
    : state_(std::make_shared<State>()) {
  state_->decisions = std::move(decision_replies);
  state_->surveys = std::move(survey_replies);
}

std::string ScriptedOracle::decide(const DecisionQuery&) {
  std::lock_guard lock(state_->mu);
  if (state_->next_decision >= state_->decisions.size())
    throw TransportError("scripted oracle has no reply left");
  return state_->decisions[state_->next_decision++];
}

std::string ScriptedOracle::ask(const SurveyQuery& query) {
  std::lock_guard lock(state_->mu);
  if (state_->surveys.empty()) return is_likert(query.item) ? "3/5 - scripted" : "scripted answer";
  const auto& reply = state_->surveys[state_->next_survey % state_->surveys.size()];
  ++state_->next_survey;
  return reply;
}

std::string ScriptedOracle::craft_persona(std::string_view) { return mock_persona_fixture(); }

std::size_t ScriptedOracle::decisions_served() const {
  std::lock_guard lock(state_->mu);
  return state_->next_decision;
}

}  // namespace pedsim
