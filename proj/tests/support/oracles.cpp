#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace oracle {

double normal_quantile(double p) {
  double lo = -40, hi = 40;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<double, double> wilson(std::size_t k, std::size_t n, double level) {
  const double z = normal_quantile(1 - (1 - level) / 2);
  const double kk = static_cast<double>(k), nn = static_cast<double>(n), z2 = z * z;
  const double centre = (kk + z2 / 2) / (nn + z2);
  const double half = z / (nn + z2) * std::sqrt(kk * (nn - kk) / nn + z2 / 4);
  double lo = centre - half, hi = centre + half;
  if (k == 0) lo = 0;
  if (k == n) hi = 1;
  return {lo, hi};
}

namespace {

// Pairwise midranks.
std::vector<double> ranks_of(const std::vector<double>& v) {
  double scale = 0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  const double tol = 1e-9 * (1 + scale);
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double below = 0, tied = 0;
    for (double x : v) {
      if (x < v[i] - tol) {
        below += 1;
      } else if (std::abs(x - v[i]) <= tol) {
        tied += 1;
      }
    }
    r[i] = below + (tied + 1) / 2;
  }
  return r;
}

}  // namespace

double mann_whitney_enumerated(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pooled = x;
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto r = ranks_of(pooled);
  const std::size_t n = pooled.size(), n1 = x.size();
  const long long centre = static_cast<long long>(n1) * static_cast<long long>(n + 1);  // doubled expectation
  long long observed = 0;
  for (std::size_t i = 0; i < n1; ++i) observed += std::llround(2 * r[i]);
  const long long obs_dev = std::llabs(observed - centre);

  long long hits = 0, total = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
    long long s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) s += std::llround(2 * r[i]);
    }
    ++total;
    if (std::llabs(s - centre) >= obs_dev) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

namespace {

std::vector<std::vector<int>> all_effects(int k) {
  std::vector<std::vector<int>> out;
  for (int size = 1; size <= k; ++size) {
    std::vector<std::vector<int>> level;
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
      if (__builtin_popcount(mask) != size) continue;
      std::vector<int> s;
      for (int f = 0; f < k; ++f) {
        if (mask & (1u << f)) s.push_back(f);
      }
      level.push_back(s);
    }
    std::sort(level.begin(), level.end());
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

double group_mean(const std::vector<Cell>& data, const std::vector<double>& y, const std::vector<int>& factors,
                  const std::vector<int>& levels_of) {
  double sum = 0;
  int count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    bool same = true;
    for (int f : factors) same = same && data[i].levels[static_cast<std::size_t>(f)] == levels_of[static_cast<std::size_t>(f)];
    if (same) {
      sum += y[i];
      ++count;
    }
  }
  return sum / count;
}

std::vector<double> align(const std::vector<Cell>& data, const std::vector<double>& y, const std::vector<int>& effect,
                          int k) {
  std::vector<int> every(static_cast<std::size_t>(k));
  std::iota(every.begin(), every.end(), 0);
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto& lv = data[i].levels;
    double v = y[i] - group_mean(data, y, every, lv);
    const auto m = effect.size();
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      std::vector<int> sub;
      for (std::size_t b = 0; b < m; ++b) {
        if (mask & (1u << b)) sub.push_back(effect[b]);
      }
      const double sign = ((m - sub.size()) % 2) ? -1.0 : 1.0;
      v += sign * group_mean(data, y, sub, lv);
    }
    out[i] = v;
  }
  return ranks_of(out);
}

// Columns of one effect: products of per-factor deviation contrasts.
void add_effect_columns(const std::vector<Cell>& data, const std::vector<int>& levels, const std::vector<int>& effect,
                        std::vector<std::vector<double>>& cols) {
  std::vector<int> choice(effect.size(), 0);
  for (;;) {
    std::vector<double> col(data.size(), 1.0);
    for (std::size_t e = 0; e < effect.size(); ++e) {
      const int f = effect[e];
      const int last = levels[static_cast<std::size_t>(f)] - 1;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const int lv = data[i].levels[static_cast<std::size_t>(f)];
        col[i] *= lv == choice[e] ? 1.0 : (lv == last ? -1.0 : 0.0);
      }
    }
    cols.push_back(col);
    std::size_t e = 0;
    while (e < effect.size() && ++choice[e] == levels[static_cast<std::size_t>(effect[e])] - 1) choice[e++] = 0;
    if (e == effect.size()) break;
  }
}

struct Fit {
  double rss = 0;
  int rank = 0;
};

Fit least_squares(const std::vector<std::vector<double>>& cols, const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, static_cast<Eigen::Index>(j)) = cols[j][static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = y[static_cast<std::size_t>(i)];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-9);
  const Eigen::VectorXd beta = svd.solve(v);
  return {(v - x * beta).squaredNorm(), static_cast<int>(svd.rank())};
}

struct Models {
  std::vector<std::vector<double>> full;
  std::vector<std::vector<std::vector<double>>> reduced;  // per effect
};

Models build_models(const std::vector<int>& levels, const std::vector<Cell>& data,
                    const std::vector<std::vector<int>>& effects) {
  Models m;
  const std::vector<double> ones(data.size(), 1.0);
  m.full.push_back(ones);
  for (const auto& e : effects) add_effect_columns(data, levels, e, m.full);
  for (const auto& drop : effects) {
    std::vector<std::vector<double>> cols{ones};
    for (const auto& e : effects) {
      if (e != drop) add_effect_columns(data, levels, e, cols);
    }
    m.reduced.push_back(std::move(cols));
  }
  return m;
}

double f_of(const std::vector<double>& r, const std::vector<std::vector<double>>& full,
            const std::vector<std::vector<double>>& reduced, int df_effect, int df_error) {
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
  double total = 0;
  for (double v : r) total += (v - mean) * (v - mean);
  if (total <= 0) return 0;
  const auto ff = least_squares(full, r);
  const auto fr = least_squares(reduced, r);
  double ss = fr.rss - ff.rss;
  double rss = ff.rss;
  if (ss <= 1e-12 * total) ss = 0;
  if (rss <= 1e-12 * total) rss = 0;
  if (ss == 0) return 0;
  if (rss == 0) return std::numeric_limits<double>::infinity();
  return (ss / df_effect) / (rss / df_error);
}

std::vector<ArtEffect> run(const std::vector<std::string>& factors, const std::vector<int>& levels,
                           const std::vector<Cell>& data, bool permute) {
  const int k = static_cast<int>(factors.size());
  std::vector<double> y;
  for (const auto& c : data) y.push_back(c.y);
  const std::vector<double> probe(y.size(), 0.0);

  // Drop the top interaction order until every kept effect has its own
  // columns and some residual df is left.
  std::vector<std::vector<int>> effects;
  Models models;
  int rank_full = 0;
  int df_error = 0;
  for (int order = k; order >= 1; --order) {
    effects.clear();
    for (const auto& e : all_effects(k)) {
      if (static_cast<int>(e.size()) <= order) effects.push_back(e);
    }
    models = build_models(levels, data, effects);
    rank_full = least_squares(models.full, probe).rank;
    df_error = static_cast<int>(data.size()) - rank_full;
    bool ok = df_error > 0;
    for (const auto& r : models.reduced) ok = ok && least_squares(r, probe).rank < rank_full;
    if (ok) break;
  }

  std::vector<ArtEffect> out;
  for (std::size_t e = 0; e < effects.size(); ++e) {
    ArtEffect res;
    for (int f : effects[e]) res.name += (res.name.empty() ? "" : "×") + factors[static_cast<std::size_t>(f)];
    res.df_error = df_error;
    res.df_effect = rank_full - least_squares(models.reduced[e], probe).rank;
    if (res.df_effect == 0) {
      out.push_back(res);
      continue;
    }
    res.f = f_of(align(data, y, effects[e], k), models.full, models.reduced[e], res.df_effect, df_error);
    if (!permute || res.f == 0) {
      res.p = res.f == 0 ? 1 : res.p;
      out.push_back(res);
      continue;
    }
    // Heap's algorithm over the response vector.
    const double bar = res.f * (1 - 1e-9);
    std::vector<double> perm = y;
    std::vector<std::size_t> c(perm.size(), 0);
    long long hits = 0, total = 0;
    const auto visit = [&] {
      ++total;
      if (f_of(align(data, perm, effects[e], k), models.full, models.reduced[e], res.df_effect, df_error) >= bar) ++hits;
    };
    visit();
    for (std::size_t i = 1; i < perm.size();) {
      if (c[i] < i) {
        std::swap(perm[i % 2 == 0 ? 0 : c[i]], perm[i]);
        visit();
        ++c[i];
        i = 1;
      } else {
        c[i] = 0;
        ++i;
      }
    }
    res.p = static_cast<double>(hits) / static_cast<double>(total);
    out.push_back(res);
  }
  return out;
}

}  // namespace

std::vector<ArtEffect> art_exhaustive(const std::vector<std::string>& factors, const std::vector<int>& levels,
                                      const std::vector<Cell>& data) {
  return run(factors, levels, data, true);
}

std::vector<ArtEffect> art_observed(const std::vector<std::string>& factors, const std::vector<int>& levels,
                                    const std::vector<Cell>& data) {
  return run(factors, levels, data, false);
}

}  // namespace oracle
