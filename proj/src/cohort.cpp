#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "pedsim/cohort_stats.hpp"
#include "pedsim/errors.hpp"
#include "util.hpp"

namespace pedsim {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Group g) { return g == Group::human ? "human" : "vlm"; }

Group parse_group(std::string_view text) {
  const auto t = detail::to_lower(detail::trim(text));
  if (t == "human") return Group::human;
  if (t == "vlm") return Group::vlm;
  throw FormatError("unknown group \"" + std::string(text) + "\"");
}

std::string_view to_string(CensorConvention c) {
  return c == CensorConvention::exclude ? "exclude" : "impute_max_plus_one";
}

std::vector<std::string> CohortDataset::ids(Group g) const {
  std::set<std::string> s;
  for (const auto& o : observations) {
    if (o.group == g) s.insert(o.id);
  }
  return {s.begin(), s.end()};
}

bool CohortDataset::has_group(Group g) const {
  return std::any_of(observations.begin(), observations.end(), [&](const Observation& o) { return o.group == g; });
}

void CohortDataset::validate() const {
  std::set<std::tuple<Group, std::string, Condition>> rows;
  for (const auto& o : observations) {
    if (o.id.empty()) throw DataError("observation without id");
    if (!rows.emplace(o.group, o.id, o.condition).second) {
      throw DataError(fmt::format("duplicate observation {} {} {}", to_string(o.group), o.id, dir_name(o.condition)));
    }
    if (o.crossing_time && (!std::isfinite(*o.crossing_time) || *o.crossing_time < 0)) {
      throw DataError(fmt::format("invalid crossing time for {} {}", o.id, dir_name(o.condition)));
    }
  }
  std::set<std::pair<Group, std::string>> people;
  for (const auto& p : participants) {
    if (!people.emplace(p.group, p.id).second) {
      throw DataError(fmt::format("duplicate participant ratings {} {}", to_string(p.group), p.id));
    }
  }
}

std::string cohort_to_json(const CohortDataset& data) {
  ojson j;
  auto& obs = j["observations"] = ojson::array();
  for (const auto& o : data.observations) {
    ojson row;
    row["group"] = to_string(o.group);
    row["id"] = o.id;
    row["condition"] = dir_name(o.condition);
    row["crossing_time"] = o.crossing_time ? ojson(*o.crossing_time) : ojson(nullptr);
    row["likert"] = o.likert;
    auto& trace = row["trace"] = ojson::array();
    for (const auto& e : o.trace) trace.push_back({e.time_step, e.position, to_string(e.action)});
    obs.push_back(std::move(row));
  }
  auto& people = j["participants"] = ojson::array();
  for (const auto& p : data.participants) {
    people.push_back({{"group", to_string(p.group)}, {"id", p.id}, {"likert", p.likert}});
  }
  return j.dump(2) + "\n";
}

CohortDataset cohort_from_json(std::string_view text) {
  CohortDataset data;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& row : j.at("observations")) {
      Observation o;
      o.group = parse_group(row.at("group").get<std::string>());
      o.id = row.at("id").get<std::string>();
      o.condition = parse_condition(row.at("condition").get<std::string>());
      if (const auto& ct = row.at("crossing_time"); !ct.is_null()) o.crossing_time = ct.get<double>();
      if (row.contains("likert")) o.likert = row.at("likert").get<std::map<std::string, int>>();
      if (row.contains("trace")) {
        for (const auto& e : row.at("trace")) {
          o.trace.push_back({e.at(0).get<int>(), e.at(1).get<int>(), parse_action(e.at(2).get<std::string>())});
        }
      }
      data.observations.push_back(std::move(o));
    }
    if (j.contains("participants")) {
      for (const auto& p : j.at("participants")) {
        data.participants.push_back({parse_group(p.at("group").get<std::string>()), p.at("id").get<std::string>(),
                                     p.at("likert").get<std::map<std::string, int>>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("cohort dataset: ") + e.what());
  } catch (const ValidationError& e) {
    throw SchemaError(std::string("cohort dataset: ") + e.what());
  } catch (const FormatError& e) {
    throw SchemaError(std::string("cohort dataset: ") + e.what());
  }
  data.validate();
  return data;
}

double imputed_crossing_time(const CohortDataset& data) {
  double mx = 0;
  bool any = false;
  for (const auto& o : data.observations) {
    if (o.crossing_time) {
      mx = std::max(mx, *o.crossing_time);
      any = true;
    }
  }
  return (any ? mx : static_cast<double>(kLastTimeStep + 1)) + 1;
}

std::vector<double> crossing_values(const CohortDataset& data, Group g, std::optional<Condition> c,
                                    CensorConvention convention) {
  const double fill = imputed_crossing_time(data);
  std::vector<double> out;
  for (const auto& o : data.observations) {
    if (o.group != g || (c && o.condition != *c)) continue;
    if (o.crossing_time) {
      out.push_back(*o.crossing_time);
    } else if (convention == CensorConvention::impute_max_plus_one) {
      out.push_back(fill);
    }
  }
  return out;
}

FactorialDesign crossing_time_design(const CohortDataset& data, CensorConvention convention) {
  FactorialDesign d;
  d.factors = {"eHMI", "AV", "Group"};
  d.level_counts = {3, 2, 2};
  const double fill = imputed_crossing_time(data);
  for (const auto& o : data.observations) {
    double y;
    if (o.crossing_time) {
      y = *o.crossing_time;
    } else if (convention == CensorConvention::impute_max_plus_one) {
      y = fill;
    } else {
      continue;
    }
    d.cells.push_back({static_cast<int>(o.condition.ehmi), static_cast<int>(o.condition.av),
                       static_cast<int>(o.group)});
    d.y.push_back(y);
  }
  return d;
}

EffectsTable rank_permutation_anova(const CohortDataset& data, const PermutationOptions& options,
                                    CensorConvention convention) {
  return art_permutation_anova(crossing_time_design(data, convention), options);
}

std::vector<SliceResult> condition_slice_tests(const CohortDataset& data, CensorConvention convention,
                                               TestMode mode) {
  std::vector<SliceResult> out;
  for (const auto& c : enumerate_conditions()) {
    const auto h = crossing_values(data, Group::human, c, convention);
    const auto v = crossing_values(data, Group::vlm, c, convention);
    if (h.empty() || v.empty()) {
      throw DesignError(fmt::format("condition {} has no {} crossing times", dir_name(c), h.empty() ? "human" : "vlm"));
    }
    SliceResult r;
    r.condition = c;
    r.convention = convention;
    std::vector<std::optional<double>> hv, vv;
    for (const auto& o : data.observations) {
      if (o.condition != c) continue;
      (o.group == Group::human ? hv : vv).push_back(o.crossing_time);
    }
    r.human = descriptive_summary(std::span<const std::optional<double>>(hv));
    r.vlm = descriptive_summary(std::span<const std::optional<double>>(vv));
    r.test = mann_whitney_test(h, v, mode);
    out.push_back(std::move(r));
  }
  return out;
}

SubsetResult subset_comparison(const CohortDataset& data, int k, std::uint64_t seed, CensorConvention convention) {
  auto ids = data.ids(Group::human);
  if (k <= 0 || ids.empty() || ids.size() % static_cast<std::size_t>(k) != 0) {
    throw PreconditionError(fmt::format("subset size {} does not divide {} human ids", k, ids.size()));
  }
  const auto vlm = crossing_values(data, Group::vlm, std::nullopt, convention);
  if (vlm.empty()) throw PreconditionError("subset comparison needs vlm crossing times");

  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  SubsetResult out;
  out.k = k;
  out.seed = seed;
  out.vlm = descriptive_summary(std::span<const double>(vlm));
  const double fill = imputed_crossing_time(data);
  for (std::size_t start = 0; start < ids.size(); start += static_cast<std::size_t>(k)) {
    SubsetPartition part;
    part.index = static_cast<int>(start / static_cast<std::size_t>(k)) + 1;
    part.human_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(start),
                          ids.begin() + static_cast<std::ptrdiff_t>(start) + k);
    std::sort(part.human_ids.begin(), part.human_ids.end());
    std::vector<double> values;
    std::vector<std::optional<double>> raw;
    for (const auto& o : data.observations) {
      if (o.group != Group::human ||
          !std::binary_search(part.human_ids.begin(), part.human_ids.end(), o.id)) {
        continue;
      }
      raw.push_back(o.crossing_time);
      if (o.crossing_time) {
        values.push_back(*o.crossing_time);
      } else if (convention == CensorConvention::impute_max_plus_one) {
        values.push_back(fill);
      }
    }
    part.human = descriptive_summary(std::span<const std::optional<double>>(raw));
    if (values.empty()) throw PreconditionError(fmt::format("subset {} has no crossing times", part.index));
    part.test = mann_whitney_test(values, vlm, TestMode::automatic);
    out.partitions.push_back(std::move(part));
  }
  return out;
}

CohortDataset synthetic_cohort(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.ids_per_group < 1) throw ConfigError("ids_per_group must be >= 1");
  CohortDataset data;
  std::mt19937_64 rng(seed);
  for (const auto g : {Group::human, Group::vlm}) {
    const auto& gs = g == Group::human ? spec.human : spec.vlm;
    std::normal_distribution<double> dist(gs.mean, gs.sd);
    for (int i = 1; i <= spec.ids_per_group; ++i) {
      const auto id = fmt::format("{}{:02}", g == Group::human ? "H" : "V", i);
      for (const auto& c : enumerate_conditions()) {
        const auto it = gs.shift.find(c);
        double v = dist(rng) + (it == gs.shift.end() ? 0.0 : it->second);
        v = std::clamp(v, 1e-6, spec.upper);
        data.observations.push_back({g, id, c, v, {}, {}});
      }
    }
  }
  return data;
}

std::string reference_constants_json() {
  ojson j;
  j["label"] = "reference, not recomputed";
  j["crossing_time"] = {
      {"human", {{"mean", 5.07}, {"sd", 1.67}}},
      {"vlm", {{"mean", 5.25}, {"sd", 0.72}}},
      {"effects",
       {{"Group", {{"p", 0.8465}}},
        {"eHMI", {{"p", 0.5175}, {"F", 0.6607}}},
        {"AV", {{"p", 0.0502}, {"F", 3.8741}}},
        {"eHMI×AV", {{"p", 0.1922}, {"F", 1.6610}}},
        {"eHMI×Group", {{"p", 0.2632}, {"F", 1.3428}}},
        {"AV×Group", {{"p", 0.0032}, {"F", 8.9002}}},
        {"eHMI×AV×Group", {{"p", 0.0168}, {"F", 4.1588}}}}},
      {"condition_slices", {{"eye_stop", {{"p", 0.00199}}}}}};
  j["likert"] = {
      {"confidence", {{"p", "<0.001"}, {"human", {{"mean", 3.50}, {"sd", 1.05}}}, {"vlm", {{"mean", 4.53}, {"sd", 0.50}}}}},
      {"trust", {{"p", 0.552}, {"human", {{"mean", 3.03}, {"sd", 1.07}}}, {"vlm", {{"mean", 2.97}, {"sd", 0.96}}}}},
      {"similarity", {{"p", "<0.001"}, {"human", {{"mean", 3.10}, {"sd", 0.97}}}, {"vlm", {{"mean", 4.00}, {"sd", 0.00}}}}},
      {"genuineness", {{"p", "<0.001"}, {"human", {{"mean", 3.95}, {"sd", 0.83}}}, {"vlm", {{"mean", 5.00}, {"sd", 0.00}}}}},
      {"acceptance", {{"p", 0.877}, {"human", {{"mean", 3.55}, {"sd", 0.76}}}, {"vlm", {{"mean", 3.50}, {"sd", 0.89}}}}},
      {"helpfulness", {{"p", 0.214}, {"human", {{"mean", 3.80}, {"sd", 0.89}}}, {"vlm", {{"mean", 3.25}, {"sd", 0.72}}}}}};
  return j.dump(2) + "\n";
}

}  // namespace pedsim
