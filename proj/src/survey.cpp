#include <set>

#include <fmt/format.h>

#include "pedsim/crossing_simulator.hpp"
#include "pedsim/errors.hpp"
#include "util.hpp"

namespace pedsim {

namespace {

constexpr std::string_view kLikertReminder =
    "Your previous answer could not be read ({}). Answer again as <1-5>/5 - <reason>.";

std::string transcript_kind(SurveyItem item) {
  return item == SurveyItem::post_trial_confidence || item == SurveyItem::post_trial_trust ? "post_trial"
                                                                                              : "post_study";
}

ParsedRating ask_rating(const PersonaProfile& profile, SurveyItem item,
                        std::vector<const MemoryDocument*> memories, Oracle& oracle, int max_retries,
                        const TranscriptSink& transcript) {
  SurveyQuery q{&profile, item, std::move(memories), {}};
  std::string last_error;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    q.format_reminder = attempt == 0 ? std::string() : fmt::format(fmt::runtime(kLikertReminder), last_error);
    const auto reply = oracle.ask(q);
    TranscriptEntry entry{transcript_kind(item), -1, attempt, std::string(question_text(item)), reply, {}};
    try {
      auto rating = parse_rating_reply(reply);
      if (transcript) transcript(entry);
      return rating;
    } catch (const FormatError& e) {
      last_error = e.what();
      entry.error = last_error;
      if (transcript) transcript(entry);
    }
  }
  throw FormatError(fmt::format("\"{}\" unanswered after {} attempt(s): {}", question_text(item), max_retries + 1,
                                last_error));
}

std::string ask_text(const PersonaProfile& profile, SurveyItem item, std::vector<const MemoryDocument*> memories,
                     Oracle& oracle, int max_retries, const TranscriptSink& transcript) {
  SurveyQuery q{&profile, item, std::move(memories), {}};
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    q.format_reminder = attempt == 0 ? std::string() : "Your previous answer was empty. Please answer in words.";
    const auto reply = oracle.ask(q);
    const auto text = std::string(detail::trim(reply));
    if (transcript) {
      transcript({"post_study", -1, attempt, std::string(question_text(item)), reply,
                  text.empty() ? "empty answer" : ""});
    }
    if (!text.empty()) return text;
  }
  throw FormatError(fmt::format("\"{}\" unanswered after {} attempt(s)", question_text(item), max_retries + 1));
}

}  // namespace

PostTrialRatings administer_post_trial(const PersonaProfile& profile, const MemoryDocument& memory, Oracle& oracle,
                                       int max_retries, const TranscriptSink& transcript) {
  if (memory.timeline.empty()) throw PreconditionError("post-trial questions need an assembled memory");
  const auto q1 = ask_rating(profile, SurveyItem::post_trial_confidence, {&memory}, oracle, max_retries, transcript);
  const auto q2 = ask_rating(profile, SurveyItem::post_trial_trust, {&memory}, oracle, max_retries, transcript);
  return {q1.value, q1.reason, q2.value, q2.reason};
}

InterviewAnswers administer_post_study(const PersonaProfile& profile, std::span<const MemoryDocument> memories,
                                       Oracle& oracle, int max_retries, const TranscriptSink& transcript) {
  const auto conditions = enumerate_conditions();
  std::set<Condition> seen;
  for (const auto& m : memories) {
    if (m.timeline.empty()) throw PreconditionError("memory for " + m.trial_dir + " is empty");
    if (!seen.insert(m.condition).second) {
      throw PreconditionError("two memories for condition " + dir_name(m.condition));
    }
  }
  if (seen.size() != conditions.size()) {
    std::string missing;
    for (const auto& c : conditions) {
      if (!seen.count(c)) missing += (missing.empty() ? "" : ", ") + dir_name(c);
    }
    throw PreconditionError(fmt::format("post-study interview needs all {} trial memories; missing {}",
                                        conditions.size(), missing));
  }

  std::vector<const MemoryDocument*> all;
  for (const auto& m : memories) all.push_back(&m);

  InterviewAnswers a;
  a.q1_similarity = ask_rating(profile, SurveyItem::similarity, all, oracle, max_retries, transcript).value;
  a.q2_genuineness = ask_rating(profile, SurveyItem::genuineness, all, oracle, max_retries, transcript).value;
  a.q3_acceptance = ask_rating(profile, SurveyItem::acceptance, all, oracle, max_retries, transcript).value;
  a.q4_helpfulness = ask_rating(profile, SurveyItem::helpfulness, all, oracle, max_retries, transcript).value;
  a.q5_eye_meaning = ask_text(profile, SurveyItem::eye_meaning, all, oracle, max_retries, transcript);
  a.q6_light_meaning = ask_text(profile, SurveyItem::light_meaning, all, oracle, max_retries, transcript);
  a.q7_no_ehmi_strategy = ask_text(profile, SurveyItem::no_ehmi_strategy, all, oracle, max_retries, transcript);
  return a;
}

}  // namespace pedsim
