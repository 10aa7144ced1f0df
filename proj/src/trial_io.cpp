#include <cstdlib>

#include <fmt/format.h>

#include "json.hpp"
#include "pedsim/crossing_simulator.hpp"
#include "pedsim/errors.hpp"
#include "util.hpp"

namespace pedsim {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

ojson record_json(const DecisionRecord& r) {
  ojson j;
  j["time_step"] = r.time_step;
  j["position_before"] = r.position_before;
  j["action"] = to_string(r.action);
  j["reason"] = r.reason;
  j["confidence"] = r.confidence;
  j["trust"] = r.trust;
  j["position_after"] = r.position_after;
  j["status"] = r.status;
  j["clip"] = r.clip;
  return j;
}

DecisionRecord record_from(const nlohmann::json& j) {
  DecisionRecord r;
  r.time_step = j.at("time_step").get<int>();
  r.position_before = j.at("position_before").get<int>();
  r.action = parse_action(j.at("action").get<std::string>());
  r.reason = j.at("reason").get<std::string>();
  r.confidence = j.at("confidence").get<int>();
  r.trust = j.at("trust").get<int>();
  r.position_after = j.at("position_after").get<int>();
  r.status = j.at("status").get<std::string>();
  r.clip = j.value("clip", "");
  return r;
}

void check_log(const TrialLog& log) {
  if (log.records.empty()) throw SchemaError("trial log has no records");
  if (log.crossed != log.crossing_time.has_value()) throw SchemaError("crossed flag disagrees with crossing_time");
  int expected = 0;
  for (const auto& r : log.records) {
    if (r.time_step != expected++) throw SchemaError(fmt::format("record time steps not consecutive at {}", r.time_step));
    if (r.confidence < 1 || r.confidence > 5 || r.trust < 1 || r.trust > 5) {
      throw SchemaError(fmt::format("rating outside 1..5 at t={}", r.time_step));
    }
    if (r.position_before < 0 || r.position_before > 4 || r.position_after < 0 || r.position_after > 5 ||
        std::abs(r.position_after - r.position_before) > 1) {
      throw SchemaError(fmt::format("position jump at t={}", r.time_step));
    }
    if (r.status != render_status(r.position_after)) {
      throw SchemaError(fmt::format("status at t={} does not match position {}", r.time_step, r.position_after));
    }
  }
}

std::string substitute(std::string tmpl, std::string_view key, const std::string& value) {
  const std::string quoted = "'" + value + "'";
  for (auto pos = tmpl.find(key); pos != std::string::npos; pos = tmpl.find(key, pos + quoted.size())) {
    tmpl.replace(pos, key.size(), quoted);
  }
  return tmpl;
}

}  // namespace

std::string trial_log_to_json(const TrialLog& log) {
  ojson j;
  j["persona_id"] = log.persona_id;
  j["condition"] = dir_name(log.condition);
  j["ordinal"] = log.ordinal;
  j["trial_dir"] = log.trial_dir;
  j["seed"] = log.seed;
  j["temperature"] = log.temperature;
  j["oracle"] = log.oracle;
  auto& records = j["records"] = ojson::array();
  for (const auto& r : log.records) records.push_back(record_json(r));
  j["summary"] = log.summary_lines();
  j["crossed"] = log.crossed;
  j["crossing_time"] = log.crossing_time ? ojson(*log.crossing_time) : ojson(nullptr);
  if (log.ratings) {
    j["ratings"] = {{"q1_confidence", log.ratings->q1_confidence},
                    {"q1_reason", log.ratings->q1_reason},
                    {"q2_trust", log.ratings->q2_trust},
                    {"q2_reason", log.ratings->q2_reason}};
  } else {
    j["ratings"] = nullptr;
  }
  return j.dump(2) + "\n";
}

TrialLog trial_log_from_json(std::string_view text, bool check) {
  TrialLog log;
  try {
    const auto j = nlohmann::json::parse(text);
    log.persona_id = j.at("persona_id").get<std::string>();
    log.condition = parse_condition(j.at("condition").get<std::string>());
    log.ordinal = j.value("ordinal", 0);
    log.trial_dir = j.value("trial_dir", trial_dir_name(log.ordinal, log.condition));
    log.seed = j.value("seed", std::uint64_t{0});
    log.temperature = j.value("temperature", 0.0);
    log.oracle = j.value("oracle", "");
    for (const auto& r : j.at("records")) log.records.push_back(record_from(r));
    log.crossed = j.at("crossed").get<bool>();
    if (const auto& ct = j.at("crossing_time"); !ct.is_null()) log.crossing_time = ct.get<int>();
    if (const auto it = j.find("ratings"); it != j.end() && !it->is_null()) {
      log.ratings = PostTrialRatings{it->at("q1_confidence").get<int>(), it->at("q1_reason").get<std::string>(),
                                     it->at("q2_trust").get<int>(), it->at("q2_reason").get<std::string>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("simulation log: ") + e.what());
  } catch (const ValidationError& e) {
    throw SchemaError(std::string("simulation log: ") + e.what());
  }
  if (check) check_log(log);
  return log;
}

std::string interview_to_json(const InterviewAnswers& a) {
  ojson j;
  j["q1_similarity"] = a.q1_similarity;
  j["q2_genuineness"] = a.q2_genuineness;
  j["q3_acceptance"] = a.q3_acceptance;
  j["q4_helpfulness"] = a.q4_helpfulness;
  j["q5_eye_meaning"] = a.q5_eye_meaning;
  j["q6_light_meaning"] = a.q6_light_meaning;
  j["q7_no_ehmi_strategy"] = a.q7_no_ehmi_strategy;
  return j.dump(2) + "\n";
}

InterviewAnswers interview_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    InterviewAnswers a;
    a.q1_similarity = j.at("q1_similarity").get<int>();
    a.q2_genuineness = j.at("q2_genuineness").get<int>();
    a.q3_acceptance = j.at("q3_acceptance").get<int>();
    a.q4_helpfulness = j.at("q4_helpfulness").get<int>();
    a.q5_eye_meaning = j.at("q5_eye_meaning").get<std::string>();
    a.q6_light_meaning = j.at("q6_light_meaning").get<std::string>();
    a.q7_no_ehmi_strategy = j.at("q7_no_ehmi_strategy").get<std::string>();
    for (int v : {a.q1_similarity, a.q2_genuineness, a.q3_acceptance, a.q4_helpfulness}) {
      if (v < 1 || v > 5) throw SchemaError("interview rating outside 1..5");
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("interview: ") + e.what());
  }
}

fs::path persist_trial(const TrialLog& log, const fs::path& persona_dir, const PersistOptions& options) {
  const auto dir = persona_dir / log.trial_dir;
  const auto views = dir / "step_views";
  fs::create_directories(views);

  std::string concat_list;
  for (const auto& r : log.records) {
    if (!options.manifest) break;
    const auto it = options.manifest->entries.find({log.condition, r.position_before, r.time_step});
    if (it == options.manifest->entries.end()) continue;
    const auto name = fmt::format("step{}_pos{}{}", r.time_step, r.position_before, it->second.path.extension().string());
    std::error_code ec;
    fs::copy_file(it->second.path, views / name, fs::copy_options::overwrite_existing, ec);
    if (ec) throw IoError("cannot copy " + it->second.path.string() + ": " + ec.message());
    concat_list += fmt::format("file 'step_views/{}'\n", name);
  }
  if (!concat_list.empty()) {
    detail::write_file_atomic(dir / "all_agent_see.txt", concat_list);
    if (!options.concat_command.empty()) {
      auto cmd = substitute(options.concat_command, "{list}", (dir / "all_agent_see.txt").string());
      cmd = substitute(cmd, "{output}", (dir / kCombinedVideoName).string());
      if (std::system(cmd.c_str()) != 0) throw IoError("concatenation command failed: " + cmd);
    }
  }

  if (!options.transcript.empty()) {
    std::string lines;
    for (const auto& e : options.transcript) {
      ojson j;
      j["kind"] = e.kind;
      j["time_step"] = e.time_step;
      j["attempt"] = e.attempt;
      j["question"] = e.question;
      j["reply"] = e.reply;
      if (!e.error.empty()) j["error"] = e.error;
      lines += j.dump() + "\n";
    }
    detail::write_file_atomic(dir / "transcript.jsonl", lines);
  }

  // Written last so its presence marks a complete trial.
  detail::write_file_atomic(dir / "simulation_log.json", trial_log_to_json(log));
  return dir;
}

TrialLog load_trial_log(const fs::path& file) {
  if (!fs::exists(file)) throw IoError("no such file: " + file.string());
  return trial_log_from_json(detail::read_file(file));
}

}  // namespace pedsim
