#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "pedsim/cohort_stats.hpp"
#include "pedsim/errors.hpp"

namespace pedsim {

std::string_view to_string(TestMode m) {
  switch (m) {
    case TestMode::automatic: return "automatic";
    case TestMode::exact: return "exact";
    case TestMode::normal: return "normal";
  }
  return "automatic";
}

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double scale = 0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  const double tol = 1e-9 * (1 + scale);

  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] - values[order[j - 1]] <= tol) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2;
    for (std::size_t m = i; m < j; ++m) ranks[order[m]] = r;
    i = j;
  }
  return ranks;
}

namespace {

// Two-sided exact p over all C(N, n1) assignments of the pooled midranks.
// Midranks are multiples of 1/2, so doubled ranks are integers.
double exact_p(const std::vector<double>& ranks, std::size_t n1, double r1) {
  const std::size_t n = ranks.size();
  std::vector<int> w(n);
  int total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = static_cast<int>(std::lround(2 * ranks[i]));
    total += w[i];
  }
  // counts[k][s]: subsets of size k with doubled-rank sum s.
  std::vector<std::vector<double>> counts(n1 + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
  counts[0][0] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = std::min(n1, i + 1); k >= 1; --k) {
      auto& dst = counts[k];
      const auto& src = counts[k - 1];
      for (int s = total; s >= w[i]; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - w[i])];
    }
  }
  // Deviation of 2*R1 from its null mean n1*(N+1), in doubled-rank units.
  const long long center = static_cast<long long>(n1) * static_cast<long long>(n + 1);
  const long long observed = std::llabs(std::llround(2 * r1) - center);
  double hit = 0;
  double all = 0;
  for (int s = 0; s <= total; ++s) {
    const double c = counts[n1][static_cast<std::size_t>(s)];
    if (c == 0) continue;
    all += c;
    if (std::llabs(static_cast<long long>(s) - center) >= observed) hit += c;
  }
  return std::min(1.0, hit / all);
}

}  // namespace

MannWhitneyResult mann_whitney_test(std::span<const double> x, std::span<const double> y, TestMode mode) {
  if (x.empty() || y.empty()) throw DomainError("Mann-Whitney test needs two non-empty samples");
  const std::size_t n1 = x.size();
  const std::size_t n2 = y.size();
  const std::size_t n = n1 + n2;
  if (mode == TestMode::automatic) mode = n <= kExactLimit ? TestMode::exact : TestMode::normal;
  if (mode == TestMode::exact && n > kExactLimit) {
    throw PreconditionError("exact Mann-Whitney test is limited to n1 + n2 <= " + std::to_string(kExactLimit));
  }

  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = midranks(pooled);
  double r1 = 0;
  for (std::size_t i = 0; i < n1; ++i) r1 += ranks[i];

  MannWhitneyResult out;
  out.n1 = n1;
  out.n2 = n2;
  out.mode = mode;
  out.u = r1 - static_cast<double>(n1 * (n1 + 1)) / 2;

  if (mode == TestMode::exact) {
    out.p = exact_p(ranks, n1, r1);
    return out;
  }

  // Normal approximation with tie correction and continuity correction.
  std::vector<double> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double nn = static_cast<double>(n);
  const double mu = static_cast<double>(n1 * n2) / 2;
  const double var = static_cast<double>(n1 * n2) / 12 * ((nn + 1) - tie_term / (nn * (nn - 1)));
  if (var <= 0) {
    out.p = 1;
    return out;
  }
  const double z = std::max(0.0, std::abs(out.u - mu) - 0.5) / std::sqrt(var);
  out.p = std::min(1.0, 2 * boost::math::cdf(boost::math::complement(boost::math::normal(), z)));
  return out;
}

}  // namespace pedsim
