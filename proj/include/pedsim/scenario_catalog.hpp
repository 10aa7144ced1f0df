#pragma once

#include <array>
#include <compare>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pedsim {

enum class Ehmi { light_strip, eyes, none };
enum class AvBehavior { stop, pass };

struct Condition {
  Ehmi ehmi = Ehmi::none;
  AvBehavior av = AvBehavior::stop;

  auto operator<=>(const Condition&) const = default;
};

// Clip directory name: light_stop, eye_pass, no-ehmi_stop, ...
std::string dir_name(const Condition& c);
std::string_view to_string(Ehmi e);
std::string_view to_string(AvBehavior a);
Condition parse_condition(std::string_view dir_name);

// light/eyes/none x stop/pass, in that order.
std::array<Condition, 6> enumerate_conditions();

// Spatial-temporal discretization of the approach.
struct GridSpec {
  int positions = 5;
  double interval_m = 0.8;
  double span_m = 3.2;
  double approach_duration_s = 8.0;
  double decision_period_s = 1.0;

  // Decision points t = 0..last_time_step().
  int last_time_step() const;
  int decision_points() const { return last_time_step() + 1; }
  double marker_distance(int index) const { return interval_m * index; }
  // Throws ValidationError when the geometric invariants do not hold.
  void validate() const;
};

inline constexpr int kRoadPosition = 5;
inline constexpr int kLastTimeStep = 8;

struct TrialPlan {
  std::string participant_id;
  bool practice_first = false;
  std::array<Condition, 6> order{};
};

// Rows of the 6x6 balanced (Williams) Latin square over enumerate_conditions().
std::array<std::array<Condition, 6>, 6> williams_square();

// One plan per participant, square rows assigned cyclically. Ids are P01, P02, ...
std::vector<TrialPlan> build_trial_orders(std::size_t n);
std::vector<TrialPlan> build_trial_orders(const std::vector<std::string>& participant_ids);

struct ClipKey {
  Condition condition;
  int position = 0;
  int time_step = 0;
  auto operator<=>(const ClipKey&) const = default;
};

struct ClipRef {
  ClipKey key;
  std::filesystem::path path;      // absolute
  std::string relative;            // relative to the manifest root, '/'-separated
  std::vector<std::filesystem::path> frames;
};

struct ClipManifest {
  std::filesystem::path root;
  std::map<ClipKey, ClipRef> entries;

  std::size_t condition_count() const;
};

// Runs the external frame extractor for one clip into `outdir`; returns the
// ordered frame files.
using FrameExtractorFn = std::function<std::vector<std::filesystem::path>(
    const std::filesystem::path& clip, const std::filesystem::path& outdir)>;

struct ManifestOptions {
  GridSpec grid{};
  // Where frames are looked up / extracted when <clip>.frames/ is absent
  // beside the clip. Mirrors the clip tree layout.
  std::optional<std::filesystem::path> frames_root;
  FrameExtractorFn extractor;
};

// Relative clip path for (condition, position, t): <dir>/split/pos{P}_time{T}.mp4
std::string clip_relative_path(const ClipKey& key);

// Scans the clip tree. Every problem (missing condition directory, missing
// clip, unextracted or empty frame list) is collected before throwing
// ManifestError.
ClipManifest load_manifest(const std::filesystem::path& root, const ManifestOptions& options = {});

// Throws ManifestError naming the tuple when the entry is absent.
const ClipRef& resolve_clip(const ClipManifest& manifest, const Condition& c, int position,
                            int time_step);

std::string manifest_to_json(const ClipManifest& manifest);
void save_manifest_cache(const ClipManifest& manifest, const std::filesystem::path& file);

// Writes a complete placeholder clip tree (empty clip files and
// `frames_per_clip` empty frame images per clip).
void write_placeholder_clip_tree(const std::filesystem::path& root, int frames_per_clip = 3,
                                 const GridSpec& grid = {});

}  // namespace pedsim
