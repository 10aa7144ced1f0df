#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pedsim/scenario_catalog.hpp"
#include "pedsim/trajectory_ingest.hpp"

namespace pedsim {

// ---- descriptives -------------------------------------------------------

struct Descriptive {
  double mean = 0;
  double sd = 0;  // n-1 denominator; NaN when n < 2
  double median = 0;
  std::size_t n = 0;
  std::size_t n_censored = 0;
};

// Censored (absent) values are counted and left out of the moments.
Descriptive descriptive_summary(std::span<const std::optional<double>> values);
Descriptive descriptive_summary(std::span<const double> values);

// Linear-interpolation quantile (q in [0, 1]) of a non-empty sample.
double quantile(std::vector<double> values, double q);

// ---- intervals ----------------------------------------------------------

struct IntervalEstimate {
  std::size_t k = 0;
  std::size_t n = 0;
  double level = 0.95;
  double lo = 0;
  double hi = 0;
};

// Wilson score interval. Throws DomainError for n = 0, k > n or a level
// outside (0, 1).
IntervalEstimate wilson_interval(std::size_t k, std::size_t n, double level = 0.95);

// ---- Mann-Whitney -------------------------------------------------------

enum class TestMode { automatic, exact, normal };
std::string_view to_string(TestMode m);

inline constexpr std::size_t kExactLimit = 20;  // n1 + n2

struct MannWhitneyResult {
  double u = 0;  // for the first sample, midranks on ties
  double p = 1;  // two-sided
  TestMode mode = TestMode::exact;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

// automatic picks exact when n1 + n2 <= kExactLimit. Exact mode beyond that
// limit throws PreconditionError; an empty sample throws DomainError.
MannWhitneyResult mann_whitney_test(std::span<const double> x, std::span<const double> y,
                                    TestMode mode = TestMode::automatic);

// Midranks (1-based) with ties grouped within a relative tolerance.
std::vector<double> midranks(std::span<const double> values);

// ---- aligned-rank permutation ANOVA -------------------------------------

struct FactorialDesign {
  std::vector<std::string> factors;
  std::vector<int> level_counts;
  std::vector<std::vector<int>> cells;  // per observation, one level index per factor
  std::vector<double> y;
};

enum class PermutationMode { sampled, exhaustive };
std::string_view to_string(PermutationMode m);

inline constexpr std::size_t kExhaustiveLimit = 10;

struct PermutationOptions {
  std::size_t n_perm = 5000;
  std::uint64_t seed = 0;
  PermutationMode mode = PermutationMode::sampled;
  std::vector<std::string> effects;  // names to test; empty = all
  unsigned threads = 0;              // 0 = hardware concurrency
};

struct EffectResult {
  std::string name;  // factor names joined by "×"
  std::vector<int> factor_indices;
  double f = 0;
  int df_effect = 0;
  int df_error = 0;
  double p = 1;
};

struct EffectsTable {
  std::vector<EffectResult> effects;
  std::size_t n_perm = 0;  // permutations evaluated (N! in exhaustive mode)
  std::uint64_t seed = 0;
  PermutationMode mode = PermutationMode::sampled;
  // Highest-order effects left out of the model and pooled into error.
  std::vector<std::string> pooled;

  const EffectResult& at(std::string_view name) const;
};

// Effects in order: main effects, then two-way, ..., each level in factor
// order.
std::vector<std::vector<int>> effect_subsets(std::size_t factor_count);
std::string effect_name(const FactorialDesign& design, const std::vector<int>& subset);

// When the full factorial is saturated or has an inestimable effect, the
// highest-order terms are pooled into error, one order at a time, and listed
// in EffectsTable::pooled. Throws DesignError for a factor with fewer than two
// observed levels or no residual degrees of freedom even with main effects
// only, PreconditionError for exhaustive mode above
// kExhaustiveLimit observations.
EffectsTable art_permutation_anova(const FactorialDesign& design, const PermutationOptions& options);

// ART alignment for one effect followed by midranking; exposed for tests.
std::vector<double> aligned_ranks(const FactorialDesign& design, const std::vector<int>& subset,
                                  std::span<const double> y);

// ---- density ------------------------------------------------------------

struct KdePoint {
  double x = 0;
  double density = 0;
};

inline constexpr std::size_t kKdePoints = 256;

double silverman_bandwidth(std::span<const double> values);
// Throws DomainError with fewer than two finite values or a zero bandwidth.
std::vector<KdePoint> kde_curve(std::span<const double> values, std::optional<double> bandwidth = std::nullopt);

// ---- cohort -------------------------------------------------------------

enum class Group { human, vlm };
std::string_view to_string(Group g);
Group parse_group(std::string_view text);

struct Observation {
  Group group = Group::human;
  std::string id;
  Condition condition;
  std::optional<double> crossing_time;
  std::map<std::string, int> likert;  // per-trial ratings: "confidence", "trust"
  std::vector<GridEntry> trace;       // discretized decisions, may be empty
};

struct ParticipantRatings {
  Group group = Group::human;
  std::string id;
  std::map<std::string, int> likert;  // "similarity", "genuineness", "acceptance", "helpfulness"
};

struct CohortDataset {
  std::vector<Observation> observations;
  std::vector<ParticipantRatings> participants;

  std::vector<std::string> ids(Group g) const;
  bool has_group(Group g) const;
  // Throws DataError on duplicate (group, id, condition) rows or duplicate
  // participant rating rows.
  void validate() const;
};

std::string cohort_to_json(const CohortDataset& data);
CohortDataset cohort_from_json(std::string_view text);

enum class CensorConvention { exclude, impute_max_plus_one };
std::string_view to_string(CensorConvention c);

// max observed crossing time + 1 s; used for impute_max_plus_one.
double imputed_crossing_time(const CohortDataset& data);

// Crossing times of the matching observations under the convention.
std::vector<double> crossing_values(const CohortDataset& data, Group g, std::optional<Condition> c,
                                    CensorConvention convention);

// eHMI x AV x Group design over crossing times.
FactorialDesign crossing_time_design(const CohortDataset& data, CensorConvention convention);
EffectsTable rank_permutation_anova(const CohortDataset& data, const PermutationOptions& options,
                                    CensorConvention convention = CensorConvention::exclude);

struct SliceResult {
  Condition condition;
  Descriptive human;
  Descriptive vlm;
  MannWhitneyResult test;
  CensorConvention convention = CensorConvention::exclude;
};

// Throws DesignError naming the condition when either group has no values.
std::vector<SliceResult> condition_slice_tests(const CohortDataset& data,
                                               CensorConvention convention = CensorConvention::exclude,
                                               TestMode mode = TestMode::automatic);

struct SubsetPartition {
  int index = 0;
  std::vector<std::string> human_ids;
  Descriptive human;
  MannWhitneyResult test;
};

struct SubsetResult {
  int k = 0;
  std::uint64_t seed = 0;
  Descriptive vlm;
  std::vector<SubsetPartition> partitions;
};

// Human ids shuffled with the seed and cut into groups of k, each compared
// with the whole vlm cohort on crossing times. Throws PreconditionError unless
// k divides the human id count.
SubsetResult subset_comparison(const CohortDataset& data, int k, std::uint64_t seed,
                               CensorConvention convention = CensorConvention::exclude);

// ---- synthetic cohorts --------------------------------------------------

struct SyntheticGroupSpec {
  double mean = 5.0;
  double sd = 1.0;
  std::map<Condition, double> shift;  // added to draws in that condition
};

struct SyntheticSpec {
  int ids_per_group = 20;
  SyntheticGroupSpec human;
  SyntheticGroupSpec vlm;
  double upper = 9.0;  // draws clipped to (0, upper]
};

CohortDataset synthetic_cohort(const SyntheticSpec& spec, std::uint64_t seed);

// ---- reference values ---------------------------------------------------

// Published summary numbers shipped for side-by-side reading; never
// recomputed.
std::string reference_constants_json();

}  // namespace pedsim
