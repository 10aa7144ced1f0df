#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "pedsim/cohort_stats.hpp"
#include "pedsim/errors.hpp"

namespace pedsim {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Descriptive descriptive_summary(std::span<const double> values) {
  Descriptive d;
  d.n = values.size();
  if (d.n == 0) {
    d.mean = d.sd = d.median = std::numeric_limits<double>::quiet_NaN();
    return d;
  }
  double sum = 0;
  for (double v : values) sum += v;
  d.mean = sum / static_cast<double>(d.n);
  if (d.n >= 2) {
    double ss = 0;
    for (double v : values) ss += (v - d.mean) * (v - d.mean);
    d.sd = std::sqrt(ss / static_cast<double>(d.n - 1));
  } else {
    d.sd = std::numeric_limits<double>::quiet_NaN();
  }
  d.median = quantile(std::vector<double>(values.begin(), values.end()), 0.5);
  return d;
}

Descriptive descriptive_summary(std::span<const std::optional<double>> values) {
  std::vector<double> observed;
  std::size_t censored = 0;
  for (const auto& v : values) {
    if (v) {
      observed.push_back(*v);
    } else {
      ++censored;
    }
  }
  auto d = descriptive_summary(std::span<const double>(observed));
  d.n_censored = censored;
  return d;
}

IntervalEstimate wilson_interval(std::size_t k, std::size_t n, double level) {
  if (n == 0) throw DomainError("Wilson interval needs n >= 1");
  if (k > n) throw DomainError("Wilson interval needs k <= n");
  if (!(level > 0 && level < 1)) throw DomainError("confidence level must lie in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal(), 1 - (1 - level) / 2);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1 + z2 / nn;
  const double center = (p + z2 / (2 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  IntervalEstimate out{k, n, level, std::max(0.0, center - half), std::min(1.0, center + half)};
  if (k == 0) out.lo = 0;
  if (k == n) out.hi = 1;
  return out;
}

}  // namespace pedsim
