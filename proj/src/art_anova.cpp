#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "pedsim/cohort_stats.hpp"
#include "pedsim/errors.hpp"

namespace pedsim {

std::string_view to_string(PermutationMode m) { return m == PermutationMode::exhaustive ? "exhaustive" : "sampled"; }

const EffectResult& EffectsTable::at(std::string_view name) const {
  for (const auto& e : effects) {
    if (e.name == name) return e;
  }
  throw DesignError("no effect named " + std::string(name));
}

std::vector<std::vector<int>> effect_subsets(std::size_t factor_count) {
  std::vector<std::vector<int>> out;
  const auto k = static_cast<int>(factor_count);
  for (int size = 1; size <= k; ++size) {
    std::vector<bool> pick(static_cast<std::size_t>(k), false);
    std::fill(pick.begin(), pick.begin() + size, true);
    do {
      std::vector<int> s;
      for (int i = 0; i < k; ++i) {
        if (pick[static_cast<std::size_t>(i)]) s.push_back(i);
      }
      out.push_back(std::move(s));
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return out;
}

std::string effect_name(const FactorialDesign& design, const std::vector<int>& subset) {
  std::string out;
  for (int f : subset) {
    if (!out.empty()) out += "×";
    out += design.factors[static_cast<std::size_t>(f)];
  }
  return out;
}

namespace {

constexpr double kRankTol = 1e-9;
constexpr double kZeroTol = 1e-12;
constexpr double kTieTol = 1e-9;

void check_design(const FactorialDesign& d) {
  const auto k = d.factors.size();
  if (k == 0) throw DesignError("design has no factors");
  if (d.level_counts.size() != k) throw DesignError("level_counts does not match factors");
  if (d.cells.size() != d.y.size()) throw DesignError("cells and responses differ in length");
  for (const auto& c : d.cells) {
    if (c.size() != k) throw DesignError("observation with wrong number of factor levels");
    for (std::size_t f = 0; f < k; ++f) {
      if (c[f] < 0 || c[f] >= d.level_counts[f]) throw DesignError("level index out of range for " + d.factors[f]);
    }
  }
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<bool> seen(static_cast<std::size_t>(std::max(d.level_counts[f], 0)), false);
    for (const auto& c : d.cells) seen[static_cast<std::size_t>(c[f])] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2) {
      throw DesignError("factor " + d.factors[f] + " has fewer than two observed levels");
    }
  }
  for (double v : d.y) {
    if (!std::isfinite(v)) throw DesignError("non-finite response");
  }
}

// Group id of each observation on the factors in `subset` (empty = one group).
std::pair<std::vector<int>, int> grouping(const FactorialDesign& d, const std::vector<int>& subset) {
  std::vector<int> gid(d.y.size(), 0);
  std::vector<long long> key(d.y.size(), 0);
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    long long k = 0;
    for (int f : subset) k = k * d.level_counts[static_cast<std::size_t>(f)] + d.cells[i][static_cast<std::size_t>(f)];
    key[i] = k;
  }
  std::vector<long long> uniq = key;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  for (std::size_t i = 0; i < key.size(); ++i) {
    gid[i] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), key[i]) - uniq.begin());
  }
  return {gid, static_cast<int>(uniq.size())};
}

struct MeanTerm {
  double sign = 1;
  std::vector<int> gid;
  int groups = 1;
};

struct Aligner {
  MeanTerm cell;
  std::vector<MeanTerm> terms;  // inclusion-exclusion over subsets of the effect

  Aligner(const FactorialDesign& d, const std::vector<int>& subset) {
    std::vector<int> all(d.factors.size());
    std::iota(all.begin(), all.end(), 0);
    auto [cg, cn] = grouping(d, all);
    cell = {1, std::move(cg), cn};
    const auto m = subset.size();
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      std::vector<int> t;
      for (std::size_t b = 0; b < m; ++b) {
        if (mask & (1u << b)) t.push_back(subset[b]);
      }
      auto [g, n] = grouping(d, t);
      const bool odd = (m - t.size()) % 2 == 1;
      terms.push_back({odd ? -1.0 : 1.0, std::move(g), n});
    }
  }

  static std::vector<double> means(const MeanTerm& t, std::span<const double> y) {
    std::vector<double> sum(static_cast<std::size_t>(t.groups), 0.0);
    std::vector<int> count(static_cast<std::size_t>(t.groups), 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      sum[static_cast<std::size_t>(t.gid[i])] += y[i];
      ++count[static_cast<std::size_t>(t.gid[i])];
    }
    for (std::size_t g = 0; g < sum.size(); ++g) sum[g] /= count[g];
    return sum;
  }

  std::vector<double> ranks(std::span<const double> y) const {
    std::vector<double> aligned(y.size());
    const auto cm = means(cell, y);
    for (std::size_t i = 0; i < y.size(); ++i) aligned[i] = y[i] - cm[static_cast<std::size_t>(cell.gid[i])];
    for (const auto& t : terms) {
      const auto m = means(t, y);
      for (std::size_t i = 0; i < y.size(); ++i) aligned[i] += t.sign * m[static_cast<std::size_t>(t.gid[i])];
    }
    return midranks(aligned);
  }
};

// Sum-to-zero coded model matrix with an intercept; `skip` drops one effect.
Eigen::MatrixXd model_matrix(const FactorialDesign& d, const std::vector<std::vector<int>>& effects,
                             const std::vector<int>* skip) {
  const auto n = static_cast<Eigen::Index>(d.y.size());
  std::vector<Eigen::VectorXd> cols;
  cols.push_back(Eigen::VectorXd::Ones(n));
  for (const auto& e : effects) {
    if (skip && e == *skip) continue;
    // Cartesian product of each factor's contrast columns.
    std::vector<Eigen::VectorXd> block = {Eigen::VectorXd::Ones(n)};
    for (int f : e) {
      const int levels = d.level_counts[static_cast<std::size_t>(f)];
      std::vector<Eigen::VectorXd> next;
      for (const auto& b : block) {
        for (int j = 0; j < levels - 1; ++j) {
          Eigen::VectorXd c(n);
          for (Eigen::Index i = 0; i < n; ++i) {
            const int lv = d.cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
            c[i] = b[i] * (lv == j ? 1.0 : lv == levels - 1 ? -1.0 : 0.0);
          }
          next.push_back(std::move(c));
        }
      }
      block = std::move(next);
    }
    cols.insert(cols.end(), block.begin(), block.end());
  }
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = cols[j];
  return x;
}

// Orthonormal basis of the column space.
Eigen::MatrixXd column_basis(const Eigen::MatrixXd& x) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankTol);
  const auto r = qr.rank();
  Eigen::MatrixXd q = qr.householderQ();
  return q.leftCols(r);
}

struct EffectModel {
  Eigen::MatrixXd q_full;
  Eigen::MatrixXd q_reduced;
  int df_effect = 0;
  int df_error = 0;

  double f_statistic(const std::vector<double>& ranks) const {
    const Eigen::Map<const Eigen::VectorXd> r(ranks.data(), static_cast<Eigen::Index>(ranks.size()));
    const double mean = r.mean();
    const double total = (r.array() - mean).square().sum();
    if (total <= 0) return 0;
    const double ss_full = (q_full.transpose() * r).squaredNorm();
    const double ss_red = (q_reduced.transpose() * r).squaredNorm();
    double ss_effect = ss_full - ss_red;
    double rss = r.squaredNorm() - ss_full;
    if (ss_effect <= kZeroTol * total) ss_effect = 0;
    if (rss <= kZeroTol * total) rss = 0;
    if (ss_effect == 0) return 0;
    if (rss == 0) return std::numeric_limits<double>::infinity();
    return (ss_effect / df_effect) / (rss / df_error);
  }
};

std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

std::vector<double> aligned_ranks(const FactorialDesign& design, const std::vector<int>& subset,
                                  std::span<const double> y) {
  check_design(design);
  return Aligner(design, subset).ranks(y);
}

EffectsTable art_permutation_anova(const FactorialDesign& design, const PermutationOptions& options) {
  check_design(design);
  const std::size_t n = design.y.size();
  if (options.mode == PermutationMode::exhaustive && n > kExhaustiveLimit) {
    throw PreconditionError(fmt::format("exhaustive permutation needs at most {} observations, got {}",
                                        kExhaustiveLimit, n));
  }
  if (options.mode == PermutationMode::sampled && options.n_perm == 0) throw ConfigError("n_perm must be >= 1");

  const auto subsets = effect_subsets(design.factors.size());
  for (const auto& name : options.effects) {
    const auto it = std::find_if(subsets.begin(), subsets.end(),
                                 [&](const auto& s) { return effect_name(design, s) == name; });
    if (it == subsets.end()) throw DesignError("unknown effect " + name);
  }

  // Highest-order terms are pooled into error while the model is saturated or
  // one of its effects is not estimable (empty cells).
  std::vector<std::vector<int>> model_effects;
  Eigen::MatrixXd q_full;
  int rank_full = 0;
  int df_error = 0;
  for (std::size_t order = design.factors.size(); order >= 1; --order) {
    model_effects.clear();
    for (const auto& s : subsets) {
      if (s.size() <= order) model_effects.push_back(s);
    }
    q_full = column_basis(model_matrix(design, model_effects, nullptr));
    rank_full = static_cast<int>(q_full.cols());
    df_error = static_cast<int>(n) - rank_full;
    bool estimable = df_error > 0;
    for (std::size_t e = 0; estimable && e < model_effects.size(); ++e) {
      estimable = column_basis(model_matrix(design, model_effects, &model_effects[e])).cols() < rank_full;
    }
    if (estimable || order == 1) break;
  }
  if (df_error <= 0) {
    throw DesignError(fmt::format("no residual degrees of freedom ({} observations, model rank {})", n, rank_full));
  }

  std::vector<std::vector<int>> chosen;
  std::vector<std::string> pooled;
  for (const auto& s : subsets) {
    const auto name = effect_name(design, s);
    const bool wanted = options.effects.empty() ||
                        std::find(options.effects.begin(), options.effects.end(), name) != options.effects.end();
    const bool in_model = std::find(model_effects.begin(), model_effects.end(), s) != model_effects.end();
    if (!in_model) pooled.push_back(name);
    if (wanted && in_model) chosen.push_back(s);
  }

  EffectsTable table;
  table.mode = options.mode;
  table.seed = options.seed;
  table.n_perm = options.mode == PermutationMode::exhaustive ? factorial(n) : options.n_perm;
  table.pooled = std::move(pooled);
  table.effects.resize(chosen.size());

  const auto run_effect = [&](std::size_t e) {
    const auto& subset = chosen[e];
    // One stream per effect, keyed by its index among all effects.
    const auto global_index = std::find(subsets.begin(), subsets.end(), subset) - subsets.begin();
    EffectResult& res = table.effects[e];
    res.name = effect_name(design, subset);
    res.factor_indices = subset;
    res.df_error = df_error;

    EffectModel model;
    model.q_full = q_full;
    model.q_reduced = column_basis(model_matrix(design, model_effects, &subset));
    model.df_effect = rank_full - static_cast<int>(model.q_reduced.cols());
    model.df_error = df_error;
    res.df_effect = model.df_effect;
    if (model.df_effect == 0) {
      res.f = 0;
      res.p = 1;
      return;
    }

    const Aligner aligner(design, subset);
    res.f = model.f_statistic(aligner.ranks(design.y));
    if (res.f == 0) {
      res.p = 1;
      return;
    }
    const double bar = res.f * (1 - kTieTol);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> y(n);
    const auto exceeds = [&] {
      for (std::size_t i = 0; i < n; ++i) y[i] = design.y[idx[i]];
      return model.f_statistic(aligner.ranks(y)) >= bar;
    };

    if (options.mode == PermutationMode::exhaustive) {
      std::uint64_t count = 0;
      do {
        if (exceeds()) ++count;
      } while (std::next_permutation(idx.begin(), idx.end()));
      res.p = static_cast<double>(count) / static_cast<double>(table.n_perm);
    } else {
      std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(global_index)};
      std::mt19937_64 rng(seq);
      std::uint64_t count = 0;
      for (std::size_t k = 0; k < options.n_perm; ++k) {
        std::shuffle(idx.begin(), idx.end(), rng);
        if (exceeds()) ++count;
      }
      res.p = static_cast<double>(count + 1) / static_cast<double>(options.n_perm + 1);
    }
  };

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(chosen.size()));
  if (threads <= 1) {
    for (std::size_t e = 0; e < chosen.size(); ++e) run_effect(e);
    return table;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t e; (e = next.fetch_add(1)) < chosen.size();) run_effect(e);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return table;
}

}  // namespace pedsim
