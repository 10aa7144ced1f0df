#include "pedsim/trajectory_ingest.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "json.hpp"
#include "pedsim/errors.hpp"
#include "util.hpp"

namespace pedsim {

namespace {

void validate(const HumanTrajectory& t) {
  if (t.samples.empty()) throw SchemaError(t.participant + ": no samples");
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    const auto& s = t.samples[i];
    if (!std::isfinite(s.t) || !std::isfinite(s.d)) throw DataError(fmt::format("{}: non-finite sample {}", t.participant, i));
    if (s.d < 0) throw DataError(fmt::format("{}: negative distance at sample {}", t.participant, i));
    if (i > 0 && s.t <= t.samples[i - 1].t) {
      throw DataError(fmt::format("{}: sample times not increasing at index {} ({} after {})", t.participant, i, s.t,
                                  t.samples[i - 1].t));
    }
  }
  for (std::size_t i = 1; i < t.marker_times.size(); ++i) {
    if (t.marker_times[i] < t.marker_times[i - 1]) {
      throw DataError(fmt::format("{}: marker {} time precedes marker {}", t.participant, i + 1, i));
    }
  }
  if (!std::isfinite(t.road_entry_time) || t.road_entry_time < 0) {
    throw DataError(t.participant + ": invalid road_entry_time");
  }
}

}  // namespace

HumanTrajectory parse_annotation_export(std::string_view text) {
  HumanTrajectory t;
  try {
    const auto j = nlohmann::json::parse(text);
    t.participant = j.at("participant").get<std::string>();
    t.condition = parse_condition(j.at("condition").get<std::string>());
    const auto& markers = j.at("markers");
    if (!markers.is_array() || markers.size() != 5) {
      throw SchemaError(fmt::format("{}: expected 5 marker times, found {}", t.participant,
                                    markers.is_array() ? markers.size() : 0));
    }
    for (std::size_t i = 0; i < 5; ++i) t.marker_times[i] = markers[i].get<double>();
    t.road_entry_time = j.at("road_entry_time").get<double>();
    for (const auto& s : j.at("samples")) {
      if (!s.is_array() || s.size() != 2) throw SchemaError(t.participant + ": sample is not a [t, d] pair");
      t.samples.push_back({s[0].get<double>(), s[1].get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("annotation export: ") + e.what());
  } catch (const ValidationError& e) {
    throw SchemaError(std::string("annotation export: ") + e.what());
  }
  validate(t);
  return t;
}

HumanTrajectory load_annotation_export(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) throw IoError("no such file: " + file.string());
  try {
    return parse_annotation_export(detail::read_file(file));
  } catch (const ParseError& e) {
    throw SchemaError(file.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

std::string annotation_export_to_json(const HumanTrajectory& t) {
  nlohmann::ordered_json j;
  j["participant"] = t.participant;
  j["condition"] = dir_name(t.condition);
  j["markers"] = t.marker_times;
  j["road_entry_time"] = t.road_entry_time;
  auto& samples = j["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : t.samples) samples.push_back({s.t, s.d});
  return j.dump(2) + "\n";
}

double distance_at(const HumanTrajectory& traj, double t) {
  const auto& s = traj.samples;
  if (t <= s.front().t) return s.front().d;
  if (t >= s.back().t) return s.back().d;
  const auto it = std::lower_bound(s.begin(), s.end(), t, [](const TrajectorySample& a, double v) { return a.t < v; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (t - lo.t) / (hi.t - lo.t);
  return lo.d + w * (hi.d - lo.d);
}

GridTrace discretize(const HumanTrajectory& traj, double stop_threshold, const GridSpec& grid) {
  validate(traj);
  const int last_marker = grid.positions - 1;
  const auto target_at = [&](int tick) {
    if (tick >= traj.road_entry_time) return kRoadPosition;
    const double d = distance_at(traj, tick);
    return std::min(static_cast<int>(std::floor(d / grid.interval_m + 1e-9)), last_marker);
  };

  GridTrace out;
  out.owner = traj.participant;
  out.condition = traj.condition;
  out.crossing_time = static_cast<int>(std::ceil(traj.road_entry_time - 1e-9));

  int p = 0;
  for (int t = 0; t <= grid.last_time_step() && p < kRoadPosition; ++t) {
    const int next = target_at(t + 1);
    const double speed = (distance_at(traj, t + 1) - distance_at(traj, t)) / grid.decision_period_s;
    Action a = Action::stop;
    if (next > p && (next == kRoadPosition || speed >= stop_threshold)) {
      a = Action::forward;
    } else if (next < p) {
      a = Action::backward;
    }
    out.entries.push_back({t, p, a});
    if (a == Action::forward) ++p;
    if (a == Action::backward) --p;
  }
  return out;
}

GridTrace trace_from_log(const TrialLog& log) {
  GridTrace out;
  out.owner = log.persona_id;
  out.condition = log.condition;
  for (const auto& r : log.records) out.entries.push_back({r.time_step, r.position_before, r.action});
  out.crossing_time = log.crossing_time;
  return out;
}

std::optional<int> first_wait_position(const GridTrace& trace) {
  for (const auto& e : trace.entries) {
    if (e.action == Action::stop) return e.position;
  }
  return std::nullopt;
}

bool never_waited(const GridTrace& trace) { return !first_wait_position(trace).has_value(); }

int stop_count(const GridTrace& trace) {
  return static_cast<int>(std::count_if(trace.entries.begin(), trace.entries.end(),
                                        [](const GridEntry& e) { return e.action == Action::stop; }));
}

}  // namespace pedsim
