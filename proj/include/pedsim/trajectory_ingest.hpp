#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pedsim/decision.hpp"
#include "pedsim/scenario_catalog.hpp"
#include "pedsim/trial.hpp"

namespace pedsim {

struct TrajectorySample {
  double t = 0;  // seconds
  double d = 0;  // metres along the approach path
};

struct HumanTrajectory {
  std::string participant;
  Condition condition;
  std::vector<TrajectorySample> samples;
  std::array<double, 5> marker_times{};
  double road_entry_time = 0;
};

// Throws SchemaError on missing fields or fewer than five markers, DataError
// on time going backwards, negative distance or decreasing marker times.
HumanTrajectory parse_annotation_export(std::string_view json_text);
HumanTrajectory load_annotation_export(const std::filesystem::path& file);
std::string annotation_export_to_json(const HumanTrajectory& traj);

struct GridEntry {
  int time_step = 0;
  int position = 0;  // position at the start of the tick
  Action action = Action::stop;

  bool operator==(const GridEntry&) const = default;
};

struct GridTrace {
  std::string owner;
  Condition condition;
  std::vector<GridEntry> entries;
  std::optional<int> crossing_time;
};

inline constexpr double kDefaultStopThreshold = 0.4;  // m/s

// Piecewise-linear distance at time t, clamped to the first/last sample.
double distance_at(const HumanTrajectory& traj, double t);

// One entry per 1 s tick from t = 0, ending at t = 8 or once the trace
// reaches the road. crossing_time is ceil(road_entry_time) and is kept even
// when it falls past the last tick.
GridTrace discretize(const HumanTrajectory& traj, double stop_threshold = kDefaultStopThreshold,
                     const GridSpec& grid = {});

GridTrace trace_from_log(const TrialLog& log);

std::optional<int> first_wait_position(const GridTrace& trace);
bool never_waited(const GridTrace& trace);

// Number of stop actions before crossing.
int stop_count(const GridTrace& trace);

}  // namespace pedsim
