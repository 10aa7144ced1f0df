#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pedsim/errors.hpp"
#include "pedsim/oracle_gateway.hpp"
#include "util.hpp"

namespace pedsim {

ProximityPhase proximity_phase(int time_step) {
  if (time_step <= 2) return ProximityPhase::far;
  if (time_step <= 5) return ProximityPhase::approaching;
  if (time_step <= 7) return ProximityPhase::close;
  return ProximityPhase::arrived;
}

std::string_view to_string(ProximityPhase p) {
  switch (p) {
    case ProximityPhase::far: return "far";
    case ProximityPhase::approaching: return "approaching";
    case ProximityPhase::close: return "close";
    case ProximityPhase::arrived: return "arrived";
  }
  return "far";
}

const MockRule& MockPolicy::match(const Condition& c, int time_step) const {
  const auto phase = proximity_phase(time_step);
  for (const auto& rule : rules) {
    if (rule.ehmi && *rule.ehmi != c.ehmi) continue;
    if (rule.av && *rule.av != c.av) continue;
    if (rule.phase && *rule.phase != phase) continue;
    return rule;
  }
  throw ContractViolation("mock policy \"" + id + "\" has no catch-all rule");
}

namespace {

using P = ProximityPhase;
constexpr auto kStop = AvBehavior::stop;
constexpr auto kPass = AvBehavior::pass;

MockRule rule(std::optional<Ehmi> e, std::optional<AvBehavior> av, std::optional<P> phase, Action a,
              int conf, int trust, std::string reason) {
  return MockRule{e, av, phase, a, conf, trust, std::move(reason)};
}

MockPolicy assertive() {
  return {"assertive",
          {rule({}, {}, {}, Action::forward, 5, 4,
                "I keep a steady pace toward the road and trust the vehicle to handle me.")}};
}

MockPolicy always_stop() {
  return {"always_stop",
          {rule({}, {}, {}, Action::stop, 3, 2, "I stay where I am and keep watching the vehicle.")}};
}

MockPolicy cautious() {
  return {"cautious",
          {
              rule({}, {}, P::far, Action::forward, 4, 3,
                   "The vehicle is still far away, so I walk toward the curb while watching it."),
              rule({}, kPass, P::approaching, Action::stop, 4, 2,
                   "The vehicle keeps its speed as it approaches, so I wait."),
              rule({}, kPass, P::close, Action::stop, 5, 2,
                   "The vehicle is close and not slowing down; I will not step out."),
              rule({}, kPass, P::arrived, Action::forward, 4, 3,
                   "The vehicle has driven past, so I move on."),
              rule(Ehmi::none, kStop, P::approaching, Action::stop, 3, 2,
                   "There is no signal from the vehicle yet, so I wait to see whether it slows."),
              rule({}, kStop, P::approaching, Action::stop, 3, 3,
                   "I watch the display to understand what the vehicle intends before going on."),
              rule({}, kStop, {}, Action::forward, 4, 4,
                   "The vehicle has slowed and is yielding, so I proceed."),
              rule({}, {}, {}, Action::stop, 3, 3, "I am not sure yet, so I wait."),
          }};
}

MockPolicy balanced() {
  return {"balanced",
          {
              rule({}, {}, P::far, Action::forward, 4, 3,
                   "The vehicle is far enough away that I can keep walking."),
              rule(Ehmi::none, kStop, P::approaching, Action::stop, 3, 2,
                   "Without any display I cannot tell what the vehicle will do, so I pause."),
              rule({}, kStop, P::approaching, Action::forward, 4, 4,
                   "The display tells me the vehicle has noticed me, so I continue."),
              rule({}, kPass, P::approaching, Action::stop, 4, 2,
                   "The vehicle is not slowing down, so I wait at a safe distance."),
              rule({}, kPass, P::close, Action::stop, 5, 2,
                   "The vehicle is about to pass in front of me; I hold my position."),
              rule({}, kPass, P::arrived, Action::forward, 4, 3,
                   "The vehicle has passed and the road is clear."),
              rule({}, kStop, {}, Action::forward, 5, 4,
                   "The vehicle has stopped for me, so I cross."),
              rule({}, {}, {}, Action::stop, 3, 3, "I wait a moment longer."),
          }};
}

int mean_rating(const std::vector<const MemoryDocument*>& memories, int MemoryEntry::*field) {
  double sum = 0;
  int n = 0;
  for (const auto* m : memories) {
    for (const auto& e : m->timeline) {
      sum += e.*field;
      ++n;
    }
  }
  if (n == 0) return 3;
  return std::clamp(static_cast<int>(std::lround(sum / n)), 1, 5);
}

}  // namespace

std::vector<std::string> mock_policy_ids() {
  return {"assertive", "always_forward", "cautious", "balanced", "always_stop", "mixed"};
}

std::string resolve_mixed_policy(std::string_view persona_name) {
  static const std::array<std::string_view, 3> pool = {"assertive", "cautious", "balanced"};
  return std::string(pool[detail::fnv1a(persona_name) % pool.size()]);
}

MockPolicy mock_policy(std::string_view id) {
  if (id == "assertive" || id == "always_forward") {
    auto p = assertive();
    p.id = std::string(id);
    return p;
  }
  if (id == "cautious") return cautious();
  if (id == "balanced") return balanced();
  if (id == "always_stop") return always_stop();
  if (id == "mixed") throw ConfigError("\"mixed\" resolves per persona; use resolve_mixed_policy");
  throw ConfigError("unknown mock policy \"" + std::string(id) + "\"");
}

std::string mock_decision_reply(const MockPolicy& policy, const DecisionQuery& q) {
  const auto& r = policy.match(q.condition, q.time_step);
  return fmt::format(
      "Decision: {}\nReason: {}\nConfidence: {}/5 - vehicle {} at {}s.\nTrust: {}/5 - based on what the "
      "vehicle has shown so far.",
      to_string(r.action), r.reason, r.confidence, to_string(proximity_phase(q.time_step)), q.time_step,
      r.trust);
}

std::string mock_persona_fixture() {
  return R"({
  "name": "mock-persona",
  "description": "Age 30, gender undisclosed, resident of the city for four years, office worker with a university degree.\n\nOn the street: looks at the vehicle before moving, keeps a steady walking pace and waits whenever the vehicle's intent is unclear.",
  "decision_criteria": [
    "Impression of autonomous driving: Useful, though not yet proven on busy streets.",
    "Use case of autonomous driving: Airport transfers and late trips.",
    "Emotion of autonomous driving: Curious and a little wary.",
    "Concern of autonomous driving: Whether it notices a pedestrian who hesitates.",
    "Expectation of autonomous driving: A clear signal when it yields."
  ]
}
)";
}

MockOracle::MockOracle(OracleConfig config) : config_(std::move(config)) {
  config_.backend = Backend::mock;
  config_.validate();
}

MockPolicy MockOracle::policy_for(const PersonaProfile* profile) const {
  if (config_.mock_policy == "mixed") return mock_policy(resolve_mixed_policy(profile ? profile->name : ""));
  return mock_policy(config_.mock_policy);
}

std::string MockOracle::decide(const DecisionQuery& query) {
  if (query.frames.empty()) throw ContractViolation("decision query without frames");
  return mock_decision_reply(policy_for(query.profile), query);
}

std::string MockOracle::ask(const SurveyQuery& q) {
  const auto policy = policy_for(q.profile).id;
  switch (q.item) {
    case SurveyItem::post_trial_confidence: {
      const int v = mean_rating(q.memories, &MemoryEntry::confidence);
      return fmt::format("{}/5 - Looking back at my decisions in this trial, my confidence averaged {}.", v, v);
    }
    case SurveyItem::post_trial_trust: {
      const int v = mean_rating(q.memories, &MemoryEntry::trust);
      return fmt::format("{}/5 - The vehicle's behavior in this trial left my trust at about {}.", v, v);
    }
    case SurveyItem::similarity: return "4/5 - The setting and the vehicle felt close to a real street.";
    case SurveyItem::genuineness: return "5/5 - I decided the way I would on a real road.";
    case SurveyItem::acceptance: {
      const int v = mean_rating(q.memories, &MemoryEntry::trust);
      return fmt::format("{}/5 - My acceptance follows how much I trusted the vehicle overall.", v);
    }
    case SurveyItem::helpfulness:
      return policy == "assertive" ? "3/5 - I mostly relied on the vehicle's motion."
                                   : "4/5 - The displays made the vehicle's intent easier to read.";
    case SurveyItem::eye_meaning:
      return "The eyes show that the vehicle is aware of me and is looking at me.";
    case SurveyItem::light_meaning:
      return "The light strip works like a traffic signal: green means it is safe to cross.";
    case SurveyItem::no_ehmi_strategy:
      return "I watch the vehicle's speed and distance and wait until it clearly slows down.";
  }
  return "3/5 - no opinion";
}

std::string MockOracle::craft_persona(std::string_view) { return mock_persona_fixture(); }

std::string MockOracle::label() const { return "mock:" + config_.mock_policy; }

}  // namespace pedsim
