#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pedsim/decision.hpp"
#include "pedsim/persona_forge.hpp"
#include "pedsim/scenario_catalog.hpp"
#include "pedsim/trial.hpp"

namespace pedsim {

enum class Backend { remote, mock };

std::string_view to_string(Backend b);
Backend parse_backend(std::string_view text);

inline constexpr std::string_view kDefaultFrameCommand =
    "ffmpeg -loglevel error -y -i {input} {outdir}/%03d.jpg";

struct OracleConfig {
  Backend backend = Backend::mock;
  std::string endpoint;
  std::string model = "gpt-4.1";
  double temperature = 1.0;
  int max_frames = 24;
  std::string credential_env = "ORACLE_API_KEY";
  double timeout_s = 60.0;
  int retry_limit = 3;
  double retry_backoff_s = 1.0;
  int history_window = 0;  // prior decisions resent per query; 0 = all
  std::string mock_policy = "mixed";
  int max_in_flight = 4;
  double requests_per_second = 0.0;  // 0 = unlimited
  std::string frame_command = std::string(kDefaultFrameCommand);

  // Throws ConfigError.
  void validate() const;
};

struct ChatTurn {
  enum class Role { system, user, assistant };
  Role role = Role::user;
  std::string text;
  std::vector<std::filesystem::path> frames;
};

std::string_view to_string(ChatTurn::Role r);

struct DecisionQuery {
  const PersonaProfile* profile = nullptr;
  Condition condition;
  int position = 0;
  int time_step = 0;
  std::string status;
  std::vector<std::filesystem::path> frames;
  std::span<const DecisionRecord> history;
  std::uint64_t seed = 0;
  // Appended to the question when re-asking after an unparseable reply.
  std::string format_reminder;
};

enum class SurveyItem {
  post_trial_confidence,
  post_trial_trust,
  similarity,
  genuineness,
  acceptance,
  helpfulness,
  eye_meaning,
  light_meaning,
  no_ehmi_strategy,
};

std::string_view question_text(SurveyItem item);
bool is_likert(SurveyItem item);

struct SurveyQuery {
  const PersonaProfile* profile = nullptr;
  SurveyItem item = SurveyItem::post_trial_confidence;
  std::vector<const MemoryDocument*> memories;
  std::string format_reminder;
};

// Uniform decision oracle. Implementations are safe for concurrent calls.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::string decide(const DecisionQuery& query) = 0;
  virtual std::string ask(const SurveyQuery& query) = 0;
  // Raw reply to a persona-crafting instruction.
  virtual std::string craft_persona(std::string_view instruction) = 0;
  virtual std::string label() const = 0;
  virtual double temperature() const = 0;
};

// ---- mock backend -------------------------------------------------------

// Where the approaching vehicle is, derived from the elapsed second.
enum class ProximityPhase { far, approaching, close, arrived };
ProximityPhase proximity_phase(int time_step);
std::string_view to_string(ProximityPhase p);

struct MockRule {
  std::optional<Ehmi> ehmi;
  std::optional<AvBehavior> av;
  std::optional<ProximityPhase> phase;
  Action action = Action::stop;
  int confidence = 3;
  int trust = 3;
  std::string reason;
};

// First matching rule wins; every policy ends with a catch-all rule.
struct MockPolicy {
  std::string id;
  std::vector<MockRule> rules;

  const MockRule& match(const Condition& c, int time_step) const;
};

// Known ids: assertive (alias always_forward), cautious, balanced,
// always_stop, mixed. "mixed" resolves per persona to one of
// assertive/cautious/balanced by a stable hash of the persona name.
MockPolicy mock_policy(std::string_view id);
std::vector<std::string> mock_policy_ids();
std::string resolve_mixed_policy(std::string_view persona_name);

std::string mock_decision_reply(const MockPolicy& policy, const DecisionQuery& query);

// Persona document the mock backend returns for any crafting request.
std::string mock_persona_fixture();

class MockOracle final : public Oracle {
 public:
  explicit MockOracle(OracleConfig config);
  std::string decide(const DecisionQuery& query) override;
  std::string ask(const SurveyQuery& query) override;
  std::string craft_persona(std::string_view instruction) override;
  std::string label() const override;
  double temperature() const override { return config_.temperature; }

 private:
  MockPolicy policy_for(const PersonaProfile* profile) const;
  OracleConfig config_;
};

// Replays a fixed list of decision replies in order (golden traces, tests).
class ScriptedOracle final : public Oracle {
 public:
  explicit ScriptedOracle(std::vector<std::string> decision_replies,
                          std::vector<std::string> survey_replies = {});
  std::string decide(const DecisionQuery& query) override;
  std::string ask(const SurveyQuery& query) override;
  std::string craft_persona(std::string_view instruction) override;
  std::string label() const override { return "scripted"; }
  double temperature() const override { return 0.0; }
  std::size_t decisions_served() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

// ---- remote backend -----------------------------------------------------

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  double timeout_s = 60.0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  // Throws TransportError when no response was received.
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::shared_ptr<HttpTransport> make_http_transport();

// Chat-completions request body for the given turns (images inlined as
// base64 data URLs).
std::string build_chat_request(const OracleConfig& config, std::span<const ChatTurn> turns);
// Extracts choices[0].message.content; throws TransportError otherwise.
std::string parse_chat_response(std::string_view body);

// Conversation for one decision: persona as system context, prior decisions
// as alternating turns, then the current status + frames + question.
std::vector<ChatTurn> build_decision_turns(const OracleConfig& config, const DecisionQuery& query);
std::vector<ChatTurn> build_survey_turns(const SurveyQuery& query);
std::string persona_system_prompt(const PersonaProfile& profile);

inline constexpr std::string_view kDecisionQuestion = "What is your next plan?";

class RemoteOracle final : public Oracle {
 public:
  // Throws ConfigError when the credential variable is unset or empty.
  RemoteOracle(OracleConfig config, std::shared_ptr<HttpTransport> transport);
  ~RemoteOracle() override;
  std::string decide(const DecisionQuery& query) override;
  std::string ask(const SurveyQuery& query) override;
  std::string craft_persona(std::string_view instruction) override;
  std::string label() const override;
  double temperature() const override { return config_.temperature; }

 private:
  std::string exchange(std::span<const ChatTurn> turns);

  struct Throttle;
  OracleConfig config_;
  std::string credential_;
  std::shared_ptr<HttpTransport> transport_;
  std::unique_ptr<Throttle> throttle_;
};

std::unique_ptr<Oracle> make_oracle(const OracleConfig& config,
                                    std::shared_ptr<HttpTransport> transport = nullptr);

// Runs the crafting instruction, parses the reply; on a parse/structure
// failure re-asks once with the error appended. Throws GenerationError.
PersonaProfile generate_persona(Oracle& oracle, std::string_view instruction);

// ---- frames -------------------------------------------------------------

struct ExtractionResult {
  std::vector<std::filesystem::path> frames;
  bool extracted = false;  // false when an existing extraction was reused
};

// Runs `command_template` ({input} and {outdir} substituted, shell-quoted)
// unless `outdir` already holds the recorded frame count.
ExtractionResult extract_frames(const std::filesystem::path& clip, std::string_view command_template,
                                const std::optional<std::filesystem::path>& outdir = std::nullopt);

FrameExtractorFn make_frame_extractor(std::string command_template);

// Uniformly spaced indices into [0, n), at most `cap`, keeping the first and
// last index and temporal order.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap);

}  // namespace pedsim
