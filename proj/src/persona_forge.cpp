#include "pedsim/persona_forge.hpp"

#include <sstream>

#include "json.hpp"
#include "pedsim/errors.hpp"
#include "util.hpp"

namespace pedsim {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 5> kKeyNames = {"impression", "use_case", "emotion",
                                                       "concern", "expectation"};
constexpr std::array<std::string_view, 5> kLabels = {
    "Impression of autonomous driving:", "Use case of autonomous driving:",
    "Emotion of autonomous driving:", "Concern of autonomous driving:",
    "Expectation of autonomous driving:"};
constexpr std::array<std::string_view, 5> kQuestions = {
    "Describe your overall view of self-driving cars.",
    "Would you use a self-driving car in everyday life, and for what?",
    "How do you feel about riding in a self-driving car?",
    "What worries you about self-driving cars, if anything?",
    "What would you want self-driving cars to do better?"};
constexpr std::array<std::string_view, 5> kHeadings = {"Impression", "Use Case", "Emotion",
                                                       "Concern", "Expectation"};

struct TraitField {
  std::string_view name;
  double BigFive::*member;
};
constexpr std::array<TraitField, 5> kTraits = {{{"openness", &BigFive::openness},
                                                {"conscientiousness", &BigFive::conscientiousness},
                                                {"extraversion", &BigFive::extraversion},
                                                {"agreeableness", &BigFive::agreeableness},
                                                {"neuroticism", &BigFive::neuroticism}}};

std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

ordered_json parse_json(std::string_view text, std::string_view what) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

PersonaProfile profile_from_json(const ordered_json& doc) {
  if (!doc.is_object()) throw ParseError("persona document must be a JSON object");
  for (const char* key : {"name", "description", "decision_criteria"}) {
    if (!doc.contains(key)) throw ParseError(std::string("persona document missing \"") + key + "\"");
  }
  PersonaProfile p;
  if (!doc["name"].is_string()) throw ParseError("persona \"name\" must be a string");
  if (!doc["description"].is_string()) throw ParseError("persona \"description\" must be a string");
  if (!doc["decision_criteria"].is_array())
    throw StructureError("persona \"decision_criteria\" must be an array");
  p.name = doc["name"].get<std::string>();
  p.description = doc["description"].get<std::string>();
  for (const auto& item : doc["decision_criteria"]) {
    if (!item.is_string()) throw StructureError("decision_criteria entries must be strings");
    p.decision_criteria.push_back(item.get<std::string>());
  }
  if (p.decision_criteria.size() != kExperienceKeys.size()) {
    throw StructureError("decision_criteria must have exactly 5 entries, found " +
                         std::to_string(p.decision_criteria.size()));
  }
  return p;
}

}  // namespace

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::male: return "male";
    case Gender::female: return "female";
    case Gender::other: return "other";
    case Gender::undisclosed: return "undisclosed";
  }
  return "undisclosed";
}

Gender parse_gender(std::string_view text) {
  const auto t = detail::to_lower(detail::trim(text));
  if (t == "male") return Gender::male;
  if (t == "female") return Gender::female;
  if (t == "other") return Gender::other;
  if (t == "undisclosed" || t.empty()) return Gender::undisclosed;
  throw ValidationError("gender", "unknown gender value \"" + std::string(text) + "\"");
}

std::string_view key_name(ExperienceKey key) { return kKeyNames[static_cast<std::size_t>(key)]; }
std::string_view criteria_label(ExperienceKey key) { return kLabels[static_cast<std::size_t>(key)]; }
std::string_view question_text(ExperienceKey key) { return kQuestions[static_cast<std::size_t>(key)]; }

void validate_questionnaire(const QuestionnaireResponse& r) {
  if (detail::trim(r.participant_id).empty())
    throw ValidationError("participant_id", "participant_id must be non-empty");
  if (r.age <= 0) throw ValidationError("age", "age must be positive");
  if (r.residence_duration_months < 0)
    throw ValidationError("residence_duration_months", "residence duration must be >= 0");
  for (auto key : kExperienceKeys) {
    if (detail::trim(r.answer(key)).empty()) {
      throw ValidationError(std::string(key_name(key)),
                            "experience answer \"" + std::string(key_name(key)) + "\" is missing or empty");
    }
  }
}

QuestionnaireResponse parse_questionnaire(std::string_view json_text) {
  const auto doc = parse_json(json_text, "questionnaire");
  if (!doc.is_object()) throw SchemaError("questionnaire must be a JSON object");
  QuestionnaireResponse r;
  try {
    r.participant_id = doc.at("participant_id").get<std::string>();
    r.age = doc.at("age").get<int>();
    r.gender = parse_gender(doc.value("gender", std::string("undisclosed")));
    r.nationality = doc.value("nationality", std::string());
    r.residence_duration_months = doc.value("residence_duration_months", 0);
    r.education = doc.value("education", std::string());
    r.occupation = doc.value("occupation", std::string());
    r.big_five_scale = doc.value("big_five_scale", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("questionnaire field error: ") + e.what());
  }
  const auto traits = doc.value("big_five", ordered_json::object());
  for (const auto& t : kTraits) {
    if (!traits.contains(t.name) || !traits[std::string(t.name)].is_number()) {
      throw ValidationError("big_five." + std::string(t.name),
                            "Big Five score \"" + std::string(t.name) + "\" is missing");
    }
    r.big_five.*t.member = traits[std::string(t.name)].get<double>();
  }
  const auto exp = doc.value("experience", ordered_json::object());
  for (auto key : kExperienceKeys) {
    const std::string k(key_name(key));
    if (exp.contains(k) && exp[k].is_string()) r.experience[static_cast<std::size_t>(key)] = exp[k];
  }
  validate_questionnaire(r);
  return r;
}

std::string serialize_questionnaire(const QuestionnaireResponse& r) {
  ordered_json doc;
  doc["participant_id"] = r.participant_id;
  doc["age"] = r.age;
  doc["gender"] = to_string(r.gender);
  doc["nationality"] = r.nationality;
  doc["residence_duration_months"] = r.residence_duration_months;
  doc["education"] = r.education;
  doc["occupation"] = r.occupation;
  auto& traits = doc["big_five"] = ordered_json::object();
  for (const auto& t : kTraits) traits[std::string(t.name)] = r.big_five.*t.member;
  if (!r.big_five_scale.empty()) doc["big_five_scale"] = r.big_five_scale;
  auto& exp = doc["experience"] = ordered_json::object();
  for (auto key : kExperienceKeys) exp[std::string(key_name(key))] = r.answer(key);
  return doc.dump(2) + "\n";
}

std::string compose_persona_instruction(const QuestionnaireResponse& r, const ScenarioContext& ctx) {
  validate_questionnaire(r);
  if (detail::trim(ctx.scenario_label).empty())
    throw ValidationError("scenario_label", "scenario label must be non-empty");

  std::ostringstream out;
  out << "- Build one persona from the three parts below.\n"
      << "- Keep every demographic detail from Part 1 unchanged.\n"
      << "- From the traits (Part 2) and the free answers (Part 3), keep only what could shape how this person "
         "sees and reacts to self-driving cars \"in the context of "
      << ctx.scenario_label << "\".\n"
      << "- Work out how this person tends to make decisions in that setting.\n"
      << "- Return the persona as a JSON object with three parts: Name, Description, Decision Criteria.\n\n";

  out << "Part 1: Demographics\n"
      << "Age: " << r.age << "\n"
      << "Gender: " << to_string(r.gender) << "\n"
      << "Nationality: " << r.nationality << "\n"
      << "Residence duration: " << r.residence_duration_months << " months\n"
      << "Education: " << r.education << "\n"
      << "Occupation: " << r.occupation << "\n\n";

  out << "Part 2: Personality (Big Five";
  if (!r.big_five_scale.empty()) out << ", scale " << r.big_five_scale;
  out << ")\n";
  for (const auto& t : kTraits) {
    out << capitalize(t.name) << ": " << detail::format_number(r.big_five.*t.member) << "\n";
  }
  out << "\nPart 3: Experience\n";
  for (auto key : kExperienceKeys) {
    const auto i = static_cast<std::size_t>(key);
    out << kHeadings[i] << " - " << kQuestions[i] << "\n" << r.answer(key) << "\n";
  }

  out << "\nOutput format: a single JSON object with keys \"name\", \"description\" and "
         "\"decision_criteria\". Set \"name\" to \""
      << r.participant_id
      << "\". \"decision_criteria\" must list exactly five strings, in this order, starting with:";
  for (auto label : kLabels) out << " \"" << label << "\"";
  out << ".\n";
  return out.str();
}

PersonaProfile parse_persona_document(std::string_view json_text) {
  return profile_from_json(parse_json(json_text, "persona document"));
}

std::vector<std::pair<std::string, PersonaProfile>> parse_persona_collection(std::string_view json_text) {
  const auto doc = parse_json(json_text, "persona collection");
  if (!doc.is_object()) throw ParseError("persona collection must be a JSON object");
  std::vector<std::pair<std::string, PersonaProfile>> out;
  for (const auto& [key, value] : doc.items()) out.emplace_back(key, profile_from_json(value));
  return out;
}

std::string serialize_persona(const PersonaProfile& p) {
  ordered_json doc;
  doc["name"] = p.name;
  doc["description"] = p.description;
  doc["decision_criteria"] = p.decision_criteria;
  return doc.dump(2) + "\n";
}

ValidationReport validate_persona(const PersonaProfile& p) {
  ValidationReport report;
  if (detail::trim(p.name).empty()) report.push_back({"name", "name must be non-empty"});
  if (p.decision_criteria.size() != kExperienceKeys.size()) {
    report.push_back({"criteria count", "expected 5 decision criteria, found " +
                                            std::to_string(p.decision_criteria.size())});
  }
  std::array<int, 5> seen{};
  for (std::size_t i = 0; i < p.decision_criteria.size(); ++i) {
    const auto text = detail::trim(p.decision_criteria[i]);
    bool matched = false;
    for (std::size_t k = 0; k < kLabels.size(); ++k) {
      if (detail::starts_with_ci(text, kLabels[k])) {
        ++seen[k];
        matched = true;
        break;
      }
    }
    if (!matched) {
      report.push_back({"criteria label", "criterion " + std::to_string(i + 1) +
                                              " does not start with an experience label"});
    }
  }
  if (p.decision_criteria.size() == kExperienceKeys.size()) {
    for (std::size_t k = 0; k < kLabels.size(); ++k) {
      if (seen[k] > 1) {
        report.push_back({"criteria coverage", "label \"" + std::string(kLabels[k]) + "\" repeated"});
      }
    }
  }
  return report;
}

}  // namespace pedsim
