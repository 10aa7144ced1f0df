#include <cmath>

#include <fmt/format.h>

#include "json.hpp"
#include "pedsim/analysis.hpp"
#include "pedsim/errors.hpp"
#include "svg_plot.hpp"
#include "util.hpp"

namespace pedsim {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string cell(double v) { return std::isfinite(v) ? detail::format_number(v) : std::string(); }

std::string csv_text(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

ojson number(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson descriptive_json(const Descriptive& d) {
  return {{"n", d.n}, {"n_censored", d.n_censored}, {"mean", number(d.mean)}, {"sd", number(d.sd)},
          {"median", number(d.median)}};
}

ojson test_json(const MannWhitneyResult& t) {
  return {{"U", t.u}, {"p", t.p}, {"mode", to_string(t.mode)}, {"n1", t.n1}, {"n2", t.n2}};
}

ojson effects_json(const EffectsTable& t) {
  ojson j;
  j["mode"] = to_string(t.mode);
  j["n_perm"] = t.n_perm;
  j["seed"] = t.seed;
  j["pooled"] = t.pooled;
  auto& rows = j["effects"] = ojson::array();
  for (const auto& e : t.effects) {
    rows.push_back({{"effect", e.name}, {"F", number(e.f)}, {"df_effect", e.df_effect}, {"df_error", e.df_error}, {"p", e.p}});
  }
  return j;
}

ojson slices_json(const std::vector<SliceResult>& slices) {
  auto out = ojson::array();
  for (const auto& s : slices) {
    out.push_back({{"condition", dir_name(s.condition)}, {"human", descriptive_json(s.human)},
                   {"vlm", descriptive_json(s.vlm)}, {"test", test_json(s.test)}});
  }
  return out;
}

std::string effects_csv(const AnalysisResults& r) {
  std::string out = "convention,effect,F,df_effect,df_error,p,n_perm,seed,mode\n";
  const auto rows = [&](const std::optional<EffectsTable>& t, CensorConvention c) {
    if (!t) return;
    for (const auto& e : t->effects) {
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", to_string(c), e.name, cell(e.f), e.df_effect, e.df_error,
                         cell(e.p), t->n_perm, t->seed, to_string(t->mode));
    }
  };
  rows(r.effects, CensorConvention::exclude);
  rows(r.effects_imputed, CensorConvention::impute_max_plus_one);
  return out;
}

std::string slices_csv(const AnalysisResults& r) {
  std::string out =
      "convention,condition,human_n,human_censored,human_mean,human_sd,human_median,vlm_n,vlm_censored,vlm_mean,"
      "vlm_sd,vlm_median,U,p,mode\n";
  const auto rows = [&](const std::vector<SliceResult>& slices) {
    for (const auto& s : slices) {
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(s.convention), dir_name(s.condition),
                         s.human.n, s.human.n_censored, cell(s.human.mean), cell(s.human.sd), cell(s.human.median),
                         s.vlm.n, s.vlm.n_censored, cell(s.vlm.mean), cell(s.vlm.sd), cell(s.vlm.median),
                         cell(s.test.u), cell(s.test.p), to_string(s.test.mode));
    }
  };
  rows(r.slices);
  rows(r.slices_imputed);
  return out;
}

std::string trajectory_csv(const AnalysisResults& r) {
  std::string out = "part,group,label,k,n,proportion,ci_lo,ci_hi,count_lo,count_hi\n";
  for (const auto& c : r.trajectory_counts) {
    const double n = static_cast<double>(c.n);
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", c.part, to_string(c.group), c.label, c.k, c.n,
                       cell(static_cast<double>(c.k) / n), cell(c.ci.lo), cell(c.ci.hi), cell(c.ci.lo * n),
                       cell(c.ci.hi * n));
  }
  return out;
}

std::string subsets_csv(const AnalysisResults& r) {
  std::string out = "k,seed,partition,human_ids,human_n,human_mean,human_sd,vlm_n,vlm_mean,vlm_sd,U,p,mode\n";
  for (const auto& s : r.subsets) {
    for (const auto& p : s.partitions) {
      std::string ids;
      for (const auto& id : p.human_ids) ids += (ids.empty() ? "" : ";") + id;
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", s.k, s.seed, p.index, csv_text(ids), p.human.n,
                         cell(p.human.mean), cell(p.human.sd), s.vlm.n, cell(s.vlm.mean), cell(s.vlm.sd),
                         cell(p.test.u), cell(p.test.p), to_string(p.test.mode));
    }
  }
  return out;
}

std::string likert_csv(const AnalysisResults& r) {
  std::string out = "metric,human_n,human_mean,human_sd,vlm_n,vlm_mean,vlm_sd,test,statistic,p\n";
  for (const auto& l : r.likert) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", l.metric, l.human.n, cell(l.human.mean), cell(l.human.sd),
                       l.vlm.n, cell(l.vlm.mean), cell(l.vlm.sd), l.test, cell(l.statistic), cell(l.p));
  }
  return out;
}

std::string kde_svg(const AnalysisResults& r) {
  std::vector<svg::Series> series;
  for (const auto& [g, curve] : r.kde) {
    svg::Series s{std::string(to_string(g)), {}, {}};
    for (const auto& p : curve) {
      s.x.push_back(p.x);
      s.y.push_back(p.density);
    }
    series.push_back(std::move(s));
  }
  return svg::line_chart("Crossing time density", "crossing time (s)", "density", series);
}

std::string box_svg(const AnalysisResults& r) {
  std::vector<svg::Box> boxes;
  for (const auto& [g, values] : r.crossing_values) boxes.push_back({std::string(to_string(g)), values});
  return svg::box_chart("Crossing time by group", "crossing time (s)", boxes);
}

std::string trajectory_svg(const AnalysisResults& r) {
  std::vector<svg::Bar> bars;
  for (const auto& c : r.trajectory_counts) {
    const double n = static_cast<double>(c.n);
    bars.push_back({c.part + ":" + c.label, std::string(to_string(c.group)), static_cast<double>(c.k), c.ci.lo * n,
                    c.ci.hi * n});
  }
  return svg::bar_chart("Discretized trajectory counts (95% Wilson CI)", "count", bars);
}

std::string subsets_svg(const AnalysisResults& r) {
  std::vector<svg::Bar> bars;
  for (const auto& s : r.subsets) {
    for (const auto& p : s.partitions) {
      bars.push_back({fmt::format("N={} #{}", s.k, p.index), "p-value", p.test.p, p.test.p, p.test.p});
    }
  }
  return svg::bar_chart("Human subsets vs vlm cohort", "p-value", bars);
}

std::string likert_svg(const AnalysisResults& r) {
  std::vector<svg::Bar> bars;
  for (const auto& l : r.likert) {
    for (const auto& [name, d] : {std::pair{"human", l.human}, std::pair{"vlm", l.vlm}}) {
      const double sd = std::isfinite(d.sd) ? d.sd : 0;
      bars.push_back({l.metric, name, d.mean, d.mean - sd, d.mean + sd});
    }
  }
  return svg::bar_chart("Likert ratings (mean ± SD)", "rating", bars);
}

ojson bundle(const AnalysisResults& r) {
  ojson j;
  j["observations"] = r.observation_count;
  j["groups"] = {{"human", r.has_human}, {"vlm", r.has_vlm}};
  j["notices"] = r.notices;
  auto& ct = j["crossing_time"];
  for (const auto& [g, d] : r.crossing) ct["exclude"][std::string(to_string(g))] = descriptive_json(d);
  for (const auto& [g, d] : r.crossing_imputed) ct["impute_max_plus_one"][std::string(to_string(g))] = descriptive_json(d);
  j["effects"] = r.effects ? effects_json(*r.effects) : ojson(nullptr);
  j["effects_imputed"] = r.effects_imputed ? effects_json(*r.effects_imputed) : ojson(nullptr);
  j["condition_slices"] = {{"exclude", slices_json(r.slices)}, {"impute_max_plus_one", slices_json(r.slices_imputed)}};
  auto& subsets = j["subsets"] = ojson::array();
  for (const auto& s : r.subsets) {
    ojson sj{{"k", s.k}, {"seed", s.seed}, {"vlm", descriptive_json(s.vlm)}};
    auto& parts = sj["partitions"] = ojson::array();
    for (const auto& p : s.partitions) {
      parts.push_back({{"partition", p.index}, {"human_ids", p.human_ids}, {"human", descriptive_json(p.human)},
                       {"test", test_json(p.test)}});
    }
    subsets.push_back(std::move(sj));
  }
  auto& traj = j["trajectory_counts"] = ojson::array();
  for (const auto& c : r.trajectory_counts) {
    traj.push_back({{"part", c.part}, {"group", to_string(c.group)}, {"label", c.label}, {"k", c.k}, {"n", c.n},
                    {"ci_lo", c.ci.lo}, {"ci_hi", c.ci.hi}, {"level", c.ci.level}});
  }
  auto& likert = j["likert"] = ojson::array();
  for (const auto& l : r.likert) {
    likert.push_back({{"metric", l.metric}, {"human", descriptive_json(l.human)}, {"vlm", descriptive_json(l.vlm)},
                      {"test", l.test}, {"statistic", number(l.statistic)}, {"p", l.p}});
  }
  auto& kde = j["kde"];
  kde = ojson::object();
  for (const auto& [g, curve] : r.kde) {
    auto& pts = kde[std::string(to_string(g))] = ojson::array();
    for (const auto& p : curve) pts.push_back({p.x, p.density});
  }
  j["reference_constants"] = ojson::parse(reference_constants_json());
  return j;
}

}  // namespace

std::vector<fs::path> emit_report(const AnalysisResults& r, const fs::path& out_dir, const ReportFormats& formats) {
  if (r.empty()) throw PreconditionError("no results to report");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create report directory " + out_dir.string());

  std::vector<std::pair<std::string, std::string>> files;
  if (formats.json) files.emplace_back("report.json", bundle(r).dump(2) + "\n");
  if (formats.csv) {
    files.emplace_back("crossing_time_effects.csv", effects_csv(r));
    files.emplace_back("condition_slices.csv", slices_csv(r));
    files.emplace_back("trajectory_features.csv", trajectory_csv(r));
    files.emplace_back("subset_analysis.csv", subsets_csv(r));
    files.emplace_back("likert_ratings.csv", likert_csv(r));
  }
  if (formats.svg) {
    files.emplace_back("crossing_time_kde.svg", kde_svg(r));
    files.emplace_back("crossing_time_box.svg", box_svg(r));
    files.emplace_back("trajectory_features.svg", trajectory_svg(r));
    files.emplace_back("subset_analysis.svg", subsets_svg(r));
    files.emplace_back("likert_ratings.svg", likert_svg(r));
  }
  std::vector<fs::path> written;
  for (const auto& [name, content] : files) {
    try {
      detail::write_file_atomic(out_dir / name, content);
    } catch (const std::exception& e) {
      throw IoError("cannot write " + (out_dir / name).string() + ": " + e.what());
    }
    written.push_back(out_dir / name);
  }
  return written;
}

}  // namespace pedsim
