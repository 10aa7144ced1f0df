#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pedsim {

enum class Gender { male, female, other, undisclosed };

std::string_view to_string(Gender g);
Gender parse_gender(std::string_view text);

// The five open-ended experience questions, in questionnaire order.
enum class ExperienceKey { impression, use_case, emotion, concern, expectation };

inline constexpr std::array<ExperienceKey, 5> kExperienceKeys = {
    ExperienceKey::impression, ExperienceKey::use_case, ExperienceKey::emotion,
    ExperienceKey::concern, ExperienceKey::expectation};

// Schema key, e.g. "use_case".
std::string_view key_name(ExperienceKey key);
// Criteria label prefix, e.g. "Use case of autonomous driving:".
std::string_view criteria_label(ExperienceKey key);
std::string_view question_text(ExperienceKey key);

struct BigFive {
  double openness = 0;
  double conscientiousness = 0;
  double extraversion = 0;
  double agreeableness = 0;
  double neuroticism = 0;
};

struct QuestionnaireResponse {
  std::string participant_id;
  int age = 0;
  Gender gender = Gender::undisclosed;
  std::string nationality;
  int residence_duration_months = 0;
  std::string education;
  std::string occupation;
  BigFive big_five;
  // Free-form description of the instrument scale; metadata only.
  std::string big_five_scale;
  std::array<std::string, 5> experience;  // indexed by ExperienceKey

  const std::string& answer(ExperienceKey key) const {
    return experience[static_cast<std::size_t>(key)];
  }
};

struct ScenarioContext {
  std::string scenario_label = "street crossing";
};

struct PersonaProfile {
  std::string name;
  std::string description;
  std::vector<std::string> decision_criteria;

  bool operator==(const PersonaProfile&) const = default;
};

struct ValidationIssue {
  std::string field;
  std::string message;
};

using ValidationReport = std::vector<ValidationIssue>;

// Throws ValidationError naming the first offending field.
void validate_questionnaire(const QuestionnaireResponse& response);

QuestionnaireResponse parse_questionnaire(std::string_view json_text);
std::string serialize_questionnaire(const QuestionnaireResponse& response);

// Builds the persona-crafting request: the five instruction bullets followed by
// the participant's demographics, trait scores and experience answers.
std::string compose_persona_instruction(const QuestionnaireResponse& response,
                                        const ScenarioContext& ctx = {});

// Parses one persona document ({name, description, decision_criteria}).
// Missing component -> ParseError; wrong criteria count -> StructureError.
PersonaProfile parse_persona_document(std::string_view json_text);

// Parses a keyed collection such as {"test16": {...}, "test03": {...}}.
// Entries keep document order.
std::vector<std::pair<std::string, PersonaProfile>> parse_persona_collection(
    std::string_view json_text);

std::string serialize_persona(const PersonaProfile& profile);

ValidationReport validate_persona(const PersonaProfile& profile);

}  // namespace pedsim
