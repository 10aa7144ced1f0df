#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pedsim/cohort_stats.hpp"

namespace pedsim {

struct AnalysisOptions {
  PermutationOptions permutation{};
  std::vector<int> subset_sizes{5, 10};
  std::uint64_t subset_seed = 0;
  double level = 0.95;
};

// One Wilson-interval row of the discretized-trajectory comparison.
struct CountRow {
  std::string part;   // "first_wait", "decisions", "not_wait"
  Group group = Group::human;
  std::string label;  // position, action or condition
  std::size_t k = 0;
  std::size_t n = 0;
  IntervalEstimate ci;
};

struct LikertRow {
  std::string metric;
  Descriptive human;
  Descriptive vlm;
  std::string test;  // "ART Group effect" or "Mann-Whitney"
  double statistic = 0;
  double p = 1;
};

struct AnalysisResults {
  std::size_t observation_count = 0;
  bool has_human = false;
  bool has_vlm = false;
  std::vector<std::string> notices;

  std::map<Group, Descriptive> crossing;           // censored trials excluded
  std::map<Group, Descriptive> crossing_imputed;
  std::map<Group, std::vector<double>> crossing_values;
  std::map<Group, std::vector<KdePoint>> kde;
  std::optional<EffectsTable> effects;             // exclude convention
  std::optional<EffectsTable> effects_imputed;
  std::vector<SliceResult> slices;
  std::vector<SliceResult> slices_imputed;
  std::vector<SubsetResult> subsets;
  std::vector<CountRow> trajectory_counts;
  std::vector<LikertRow> likert;

  bool empty() const { return observation_count == 0; }
};

// Runs every analysis the data supports. Group comparisons are skipped with
// a notice when one group is missing.
AnalysisResults analyze(const CohortDataset& data, const AnalysisOptions& options);

struct ReportFormats {
  bool json = true;
  bool csv = true;
  bool svg = true;
};

// Writes report.json, five CSV tables and five SVG charts. Throws
// PreconditionError for empty results and IoError when `out_dir` cannot be
// written. Returns the written files in a fixed order.
std::vector<std::filesystem::path> emit_report(const AnalysisResults& results, const std::filesystem::path& out_dir,
                                               const ReportFormats& formats = {});

}  // namespace pedsim
