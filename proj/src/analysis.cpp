#include "pedsim/analysis.hpp"

#include <fmt/format.h>

#include "pedsim/errors.hpp"

namespace pedsim {

namespace {

const std::array<std::string, 2> kTrialMetrics = {"confidence", "trust"};
const std::array<std::string, 4> kStudyMetrics = {"similarity", "genuineness", "acceptance", "helpfulness"};

void trajectory_rows(const CohortDataset& data, Group g, double level, std::vector<CountRow>& out) {
  std::vector<const Observation*> traced;
  for (const auto& o : data.observations) {
    if (o.group == g && !o.trace.empty()) traced.push_back(&o);
  }
  if (traced.empty()) return;
  const auto trace_of = [](const Observation& o) {
    GridTrace t;
    t.owner = o.id;
    t.condition = o.condition;
    t.entries = o.trace;
    return t;
  };

  // Cumulative first-wait position.
  std::array<std::size_t, 5> first{};
  for (const auto* o : traced) {
    if (const auto p = first_wait_position(trace_of(*o))) ++first[static_cast<std::size_t>(*p)];
  }
  std::size_t cumulative = 0;
  for (std::size_t p = 0; p < first.size(); ++p) {
    cumulative += first[p];
    out.push_back({"first_wait", g, std::to_string(p), cumulative, traced.size(),
                   wilson_interval(cumulative, traced.size(), level)});
  }

  std::map<Action, std::size_t> actions;
  std::size_t total = 0;
  for (const auto* o : traced) {
    for (const auto& e : o->trace) {
      ++actions[e.action];
      ++total;
    }
  }
  for (const auto a : {Action::forward, Action::stop, Action::backward}) {
    out.push_back({"decisions", g, std::string(to_string(a)), actions[a], total, wilson_interval(actions[a], total, level)});
  }

  for (const auto& c : enumerate_conditions()) {
    std::size_t n = 0, k = 0;
    for (const auto* o : traced) {
      if (o->condition != c) continue;
      ++n;
      if (never_waited(trace_of(*o))) ++k;
    }
    if (n > 0) out.push_back({"not_wait", g, dir_name(c), k, n, wilson_interval(k, n, level)});
  }
}

std::vector<double> trial_metric(const CohortDataset& data, Group g, const std::string& metric) {
  std::vector<double> out;
  for (const auto& o : data.observations) {
    if (o.group != g) continue;
    if (const auto it = o.likert.find(metric); it != o.likert.end()) out.push_back(it->second);
  }
  return out;
}

std::vector<double> study_metric(const CohortDataset& data, Group g, const std::string& metric) {
  std::vector<double> out;
  for (const auto& p : data.participants) {
    if (p.group != g) continue;
    if (const auto it = p.likert.find(metric); it != p.likert.end()) out.push_back(it->second);
  }
  return out;
}

}  // namespace

AnalysisResults analyze(const CohortDataset& data, const AnalysisOptions& options) {
  data.validate();
  AnalysisResults r;
  r.observation_count = data.observations.size();
  r.has_human = data.has_group(Group::human);
  r.has_vlm = data.has_group(Group::vlm);

  for (const auto g : {Group::human, Group::vlm}) {
    if (!data.has_group(g)) continue;
    std::vector<std::optional<double>> raw;
    for (const auto& o : data.observations) {
      if (o.group == g) raw.push_back(o.crossing_time);
    }
    r.crossing[g] = descriptive_summary(std::span<const std::optional<double>>(raw));
    const auto imputed = crossing_values(data, g, std::nullopt, CensorConvention::impute_max_plus_one);
    r.crossing_imputed[g] = descriptive_summary(std::span<const double>(imputed));
    auto values = crossing_values(data, g, std::nullopt, CensorConvention::exclude);
    if (values.size() >= 2) {
      try {
        r.kde[g] = kde_curve(values);
      } catch (const DomainError& e) {
        r.notices.push_back(fmt::format("{} density skipped: {}", to_string(g), e.what()));
      }
    }
    r.crossing_values[g] = std::move(values);
    trajectory_rows(data, g, options.level, r.trajectory_counts);
  }

  if (!(r.has_human && r.has_vlm)) {
    r.notices.push_back(fmt::format("only {} data present; group comparisons skipped",
                                    r.has_human ? "human" : r.has_vlm ? "vlm" : "no"));
    return r;
  }

  const auto guarded = [&](const std::string& what, auto&& fn) {
    try {
      fn();
    } catch (const DesignError& e) {
      r.notices.push_back(what + " skipped: " + e.what());
    } catch (const PreconditionError& e) {
      r.notices.push_back(what + " skipped: " + e.what());
    } catch (const DomainError& e) {
      r.notices.push_back(what + " skipped: " + e.what());
    }
  };

  guarded("crossing-time ANOVA", [&] { r.effects = rank_permutation_anova(data, options.permutation, CensorConvention::exclude); });
  guarded("crossing-time ANOVA (imputed)", [&] {
    r.effects_imputed = rank_permutation_anova(data, options.permutation, CensorConvention::impute_max_plus_one);
  });
  guarded("condition slices", [&] { r.slices = condition_slice_tests(data, CensorConvention::exclude); });
  guarded("condition slices (imputed)",
          [&] { r.slices_imputed = condition_slice_tests(data, CensorConvention::impute_max_plus_one); });
  for (int k : options.subset_sizes) {
    guarded(fmt::format("subset analysis k={}", k),
            [&] { r.subsets.push_back(subset_comparison(data, k, options.subset_seed)); });
  }

  for (const auto& metric : kTrialMetrics) {
    const auto h = trial_metric(data, Group::human, metric);
    const auto v = trial_metric(data, Group::vlm, metric);
    if (h.empty() || v.empty()) continue;
    guarded(metric + " ratings", [&] {
      FactorialDesign d;
      d.factors = {"Group", "Condition"};
      d.level_counts = {2, 6};
      const auto conditions = enumerate_conditions();
      for (const auto& o : data.observations) {
        const auto it = o.likert.find(metric);
        if (it == o.likert.end()) continue;
        const auto c = std::find(conditions.begin(), conditions.end(), o.condition) - conditions.begin();
        d.cells.push_back({static_cast<int>(o.group), static_cast<int>(c)});
        d.y.push_back(it->second);
      }
      auto opts = options.permutation;
      opts.effects = {"Group"};
      const auto table = art_permutation_anova(d, opts);
      r.likert.push_back({metric, descriptive_summary(std::span<const double>(h)),
                          descriptive_summary(std::span<const double>(v)), "ART Group effect", table.at("Group").f,
                          table.at("Group").p});
    });
  }
  for (const auto& metric : kStudyMetrics) {
    const auto h = study_metric(data, Group::human, metric);
    const auto v = study_metric(data, Group::vlm, metric);
    if (h.empty() || v.empty()) continue;
    const auto t = mann_whitney_test(h, v);
    r.likert.push_back({metric, descriptive_summary(std::span<const double>(h)),
                        descriptive_summary(std::span<const double>(v)), "Mann-Whitney", t.u, t.p});
  }
  return r;
}

}  // namespace pedsim
