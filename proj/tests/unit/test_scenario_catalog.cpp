#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "pedsim/errors.hpp"
#include "pedsim/scenario_catalog.hpp"

using namespace pedsim;
namespace fs = std::filesystem;

TEST_CASE("condition names round-trip") {
  const auto all = enumerate_conditions();
  std::set<std::string> names;
  for (const auto& c : all) {
    CHECK(parse_condition(dir_name(c)) == c);
    names.insert(dir_name(c));
  }
  CHECK(names == std::set<std::string>{"light_stop", "light_pass", "eye_stop", "eye_pass", "no-ehmi_stop", "no-ehmi_pass"});
  CHECK(dir_name(all[0]) == "light_stop");
  CHECK(dir_name(all[5]) == "no-ehmi_pass");
  CHECK_THROWS_AS(parse_condition("eyes_stop"), ValidationError);
}

TEST_CASE("grid geometry") {
  GridSpec g;
  CHECK(g.last_time_step() == 8);
  CHECK(g.decision_points() == 9);
  CHECK(g.marker_distance(4) == doctest::Approx(3.2));
  CHECK_NOTHROW(g.validate());
  g.span_m = 3.0;
  CHECK_THROWS_AS(g.validate(), ValidationError);
  g = GridSpec{};
  g.approach_duration_s = 7;
  CHECK_THROWS_AS(g.validate(), ValidationError);
}

TEST_CASE("williams square is a balanced latin square") {
  const auto sq = williams_square();
  const auto all = enumerate_conditions();
  std::map<std::pair<Condition, Condition>, int> carry;
  for (int r = 0; r < 6; ++r) {
    std::set<Condition> row(sq[r].begin(), sq[r].end());
    CHECK(row.size() == 6);
    for (int j = 0; j + 1 < 6; ++j) ++carry[{sq[r][j], sq[r][j + 1]}];
  }
  for (int j = 0; j < 6; ++j) {
    std::set<Condition> col;
    for (int r = 0; r < 6; ++r) col.insert(sq[r][j]);
    CHECK(col.size() == 6);
  }
  // Every ordered pair of distinct conditions is adjacent exactly once.
  CHECK(carry.size() == 30);
  for (const auto& [pair, n] : carry) {
    CHECK(pair.first != pair.second);
    CHECK(n == 1);
  }
  CHECK(sq[0][0] == all[0]);
  CHECK(sq[0][2] == all[5]);
}

TEST_CASE("trial orders balance positions") {
  for (std::size_t n : {6u, 12u, 20u, 7u}) {
    CAPTURE(n);
    const auto plans = build_trial_orders(n);
    REQUIRE(plans.size() == n);
    std::map<std::pair<Condition, int>, int> counts;
    for (const auto& p : plans) {
      for (int j = 0; j < 6; ++j) ++counts[{p.order[static_cast<std::size_t>(j)], j}];
    }
    for (const auto& c : enumerate_conditions()) {
      for (int j = 0; j < 6; ++j) {
        const int k = counts[{c, j}];
        CHECK(k >= static_cast<int>(n / 6));
        CHECK(k <= static_cast<int>((n + 5) / 6));
      }
    }
  }
  const auto plans = build_trial_orders(3);
  CHECK(plans[0].participant_id == "P01");
  CHECK(plans[2].participant_id == "P03");
  const auto named = build_trial_orders(std::vector<std::string>{"a", "b"});
  CHECK(named[1].participant_id == "b");
  CHECK(named[1].order == williams_square()[1]);
}

TEST_CASE("clip paths follow the split layout") {
  CHECK(clip_relative_path({parse_condition("no-ehmi_stop"), 3, 4}) == "no-ehmi_stop/split/pos3_time4.mp4");
}

TEST_CASE("placeholder tree loads into a complete manifest") {
  fixtures::TempDir dir("catalog");
  write_placeholder_clip_tree(dir.path(), 2);
  const auto m = load_manifest(dir.path());
  CHECK(m.condition_count() == 6);
  CHECK(m.entries.size() == 6 * 35);
  const auto& ref = resolve_clip(m, parse_condition("eye_pass"), 2, 5);
  CHECK(ref.relative == "eye_pass/split/pos2_time5.mp4");
  CHECK(ref.frames.size() == 2);
  CHECK_THROWS_AS(resolve_clip(m, parse_condition("eye_pass"), 4, 2), ManifestError);
  CHECK(manifest_to_json(m).find("pos2_time5") != std::string::npos);
}

TEST_CASE("manifest problems are collected before failing") {
  fixtures::TempDir dir("catalog_bad");
  write_placeholder_clip_tree(dir.path(), 1);
  fs::remove_all(dir / "light_pass");
  fs::remove(dir / "eye_stop/split/pos1_time3.mp4");
  fs::remove_all(dir / "no-ehmi_pass/split/pos0_time0.mp4.frames");
  try {
    load_manifest(dir.path());
    FAIL("expected ManifestError");
  } catch (const ManifestError& e) {
    const auto& p = e.problems();
    CHECK(p.size() == 3);
    std::string all;
    for (const auto& s : p) all += s + "\n";
    CHECK(all.find("light_pass") != std::string::npos);
    CHECK(all.find("pos1_time3") != std::string::npos);
    CHECK(all.find("frames not extracted") != std::string::npos);
  }
}

TEST_CASE("frames are taken from the frames root or the extractor") {
  fixtures::TempDir dir("catalog_frames");
  write_placeholder_clip_tree(dir / "clips", 1);
  std::vector<fs::path> frame_dirs;
  for (const auto& e : fs::recursive_directory_iterator(dir / "clips")) {
    if (e.path().extension() == ".frames") frame_dirs.push_back(e.path());
  }
  for (const auto& p : frame_dirs) fs::remove_all(p);
  int calls = 0;
  ManifestOptions opt;
  opt.frames_root = dir / "frames";
  opt.extractor = [&](const fs::path&, const fs::path& out) {
    ++calls;
    fs::create_directories(out);
    std::ofstream(out / "001.jpg").flush();
    return std::vector<fs::path>{out / "001.jpg"};
  };
  const auto m = load_manifest(dir / "clips", opt);
  CHECK(calls == 210);
  CHECK(m.entries.size() == 210);
  // Second load finds the extracted frames and does not call the extractor.
  const auto again = load_manifest(dir / "clips", opt);
  CHECK(calls == 210);
  CHECK(again.entries.begin()->second.frames.size() == 1);
}
