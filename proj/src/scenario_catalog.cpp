#include "pedsim/scenario_catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "pedsim/errors.hpp"
#include "util.hpp"

namespace fs = std::filesystem;

namespace pedsim {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string msg = fmt::format("clip manifest incomplete ({} problem{})", problems.size(),
                                problems.size() == 1 ? "" : "s");
  for (const auto& p : problems) msg += "\n  - " + p;
  return msg;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  std::vector<fs::path> frames;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = detail::to_lower(entry.path().extension().string());
    if (ext == ".jpg" || ext == ".jpeg" || ext == ".png") frames.push_back(entry.path());
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

std::string key_label(const ClipKey& k) {
  return fmt::format("({}, position {}, time {})", dir_name(k.condition), k.position, k.time_step);
}

}  // namespace

ManifestError::ManifestError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

std::string_view to_string(Ehmi e) {
  switch (e) {
    case Ehmi::light_strip: return "light";
    case Ehmi::eyes: return "eye";
    case Ehmi::none: return "no-ehmi";
  }
  return "no-ehmi";
}

std::string_view to_string(AvBehavior a) { return a == AvBehavior::stop ? "stop" : "pass"; }

std::string dir_name(const Condition& c) {
  return std::string(to_string(c.ehmi)) + "_" + std::string(to_string(c.av));
}

Condition parse_condition(std::string_view name) {
  for (const auto& c : enumerate_conditions()) {
    if (dir_name(c) == name) return c;
  }
  throw ValidationError("condition", "unknown condition \"" + std::string(name) + "\"");
}

std::array<Condition, 6> enumerate_conditions() {
  std::array<Condition, 6> out{};
  std::size_t i = 0;
  for (auto e : {Ehmi::light_strip, Ehmi::eyes, Ehmi::none}) {
    for (auto a : {AvBehavior::stop, AvBehavior::pass}) out[i++] = Condition{e, a};
  }
  return out;
}

int GridSpec::last_time_step() const {
  return static_cast<int>(std::lround(approach_duration_s / decision_period_s));
}

void GridSpec::validate() const {
  if (positions != 5) throw ValidationError("positions", "grid must have 5 positions");
  if (interval_m <= 0) throw ValidationError("interval_m", "interval must be positive");
  if (std::abs(interval_m * (positions - 1) - span_m) > 1e-9)
    throw ValidationError("span_m", "interval x (positions - 1) must equal the span");
  if (decision_period_s <= 0)
    throw ValidationError("decision_period_s", "decision period must be positive");
  const double ratio = approach_duration_s / decision_period_s;
  if (std::abs(ratio - kLastTimeStep) > 1e-9)
    throw ValidationError("approach_duration_s", "approach duration / decision period must be 8");
}

std::array<std::array<Condition, 6>, 6> williams_square() {
  // First row 0, 1, n-1, 2, n-2, ...; later rows shift it cyclically.
  constexpr std::array<int, 6> first = {0, 1, 5, 2, 4, 3};
  const auto conditions = enumerate_conditions();
  std::array<std::array<Condition, 6>, 6> square{};
  for (int r = 0; r < 6; ++r) {
    for (int j = 0; j < 6; ++j) square[r][j] = conditions[(first[j] + r) % 6];
  }
  return square;
}

std::vector<TrialPlan> build_trial_orders(const std::vector<std::string>& ids) {
  const auto square = williams_square();
  std::vector<TrialPlan> plans;
  plans.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    TrialPlan plan;
    plan.participant_id = ids[i];
    plan.order = square[i % square.size()];
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<TrialPlan> build_trial_orders(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(fmt::format("P{:02}", i + 1));
  return build_trial_orders(ids);
}

std::size_t ClipManifest::condition_count() const {
  std::set<Condition> seen;
  for (const auto& [key, _] : entries) seen.insert(key.condition);
  return seen.size();
}

std::string clip_relative_path(const ClipKey& key) {
  return fmt::format("{}/split/pos{}_time{}.mp4", dir_name(key.condition), key.position,
                     key.time_step);
}

ClipManifest load_manifest(const fs::path& root, const ManifestOptions& options) {
  options.grid.validate();
  if (!fs::is_directory(root)) throw ManifestError({"clip root " + root.string() + " is not a directory"});

  ClipManifest manifest;
  manifest.root = fs::absolute(root).lexically_normal();
  std::vector<std::string> problems;

  const int last_t = options.grid.last_time_step();
  const int last_p = options.grid.positions - 1;
  for (const auto& condition : enumerate_conditions()) {
    const auto cond_dir = manifest.root / dir_name(condition);
    if (!fs::is_directory(cond_dir)) {
      problems.push_back("missing condition directory \"" + dir_name(condition) + "\"");
      continue;
    }
    // Only positions reachable by time t are needed (p <= t).
    for (int t = 0; t <= last_t; ++t) {
      for (int p = 0; p <= std::min(t, last_p); ++p) {
        ClipRef ref;
        ref.key = {condition, p, t};
        ref.relative = clip_relative_path(ref.key);
        ref.path = manifest.root / ref.relative;
        if (!fs::is_regular_file(ref.path)) {
          problems.push_back("missing clip " + ref.relative + " " + key_label(ref.key));
          continue;
        }
        auto frames_dir = fs::path(ref.path.string() + ".frames");
        if (!fs::is_directory(frames_dir) && options.frames_root) {
          frames_dir = *options.frames_root / (ref.relative + ".frames");
        }
        if (!fs::is_directory(frames_dir)) {
          if (!options.extractor) {
            problems.push_back("frames not extracted for " + ref.relative);
            continue;
          }
          try {
            ref.frames = options.extractor(ref.path, frames_dir);
          } catch (const Error& e) {
            problems.push_back("frame extraction failed for " + ref.relative + ": " + e.what());
            continue;
          }
        } else {
          ref.frames = list_frames(frames_dir);
        }
        if (ref.frames.empty()) {
          problems.push_back("clip " + ref.relative + " has zero frames");
          continue;
        }
        manifest.entries.emplace(ref.key, std::move(ref));
      }
    }
  }
  if (!problems.empty()) throw ManifestError(std::move(problems));
  return manifest;
}

const ClipRef& resolve_clip(const ClipManifest& manifest, const Condition& c, int position,
                            int time_step) {
  const ClipKey key{c, position, time_step};
  auto it = manifest.entries.find(key);
  if (it == manifest.entries.end()) {
    throw ManifestError({"no clip for " + key_label(key) + " (" + clip_relative_path(key) + ")"});
  }
  return it->second;
}

std::string manifest_to_json(const ClipManifest& manifest) {
  nlohmann::ordered_json doc;
  doc["root"] = manifest.root.generic_string();
  auto& clips = doc["clips"] = nlohmann::ordered_json::array();
  for (const auto& [key, ref] : manifest.entries) {
    clips.push_back({{"condition", dir_name(key.condition)},
                     {"position", key.position},
                     {"time_step", key.time_step},
                     {"clip", ref.relative},
                     {"frame_count", ref.frames.size()}});
  }
  return doc.dump(2) + "\n";
}

void save_manifest_cache(const ClipManifest& manifest, const fs::path& file) {
  detail::write_file_atomic(file, manifest_to_json(manifest));
}

void write_placeholder_clip_tree(const fs::path& root, int frames_per_clip, const GridSpec& grid) {
  grid.validate();
  for (const auto& condition : enumerate_conditions()) {
    for (int t = 0; t <= grid.last_time_step(); ++t) {
      for (int p = 0; p <= std::min(t, grid.positions - 1); ++p) {
        const auto clip = root / clip_relative_path({condition, p, t});
        fs::create_directories(clip.parent_path());
        std::ofstream(clip, std::ios::binary).flush();
        const fs::path frames(clip.string() + ".frames");
        fs::create_directories(frames);
        for (int f = 1; f <= frames_per_clip; ++f) {
          std::ofstream(frames / fmt::format("{:03}.jpg", f), std::ios::binary).flush();
        }
      }
    }
  }
}

}  // namespace pedsim
