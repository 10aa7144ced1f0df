#include <algorithm>
#include <cmath>
#include <numbers>

#include "pedsim/cohort_stats.hpp"
#include "pedsim/errors.hpp"

namespace pedsim {

namespace {

std::vector<double> finite(std::span<const double> values) {
  std::vector<double> out;
  for (double v : values) {
    if (std::isfinite(v)) out.push_back(v);
  }
  return out;
}

}  // namespace

double silverman_bandwidth(std::span<const double> values) {
  const auto v = finite(values);
  if (v.size() < 2) throw DomainError("bandwidth needs at least two finite values");
  const auto d = descriptive_summary(std::span<const double>(v));
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  double spread = std::min(d.sd, iqr / 1.34);
  if (spread <= 0) spread = d.sd;
  return 0.9 * spread * std::pow(static_cast<double>(v.size()), -0.2);
}

std::vector<KdePoint> kde_curve(std::span<const double> values, std::optional<double> bandwidth) {
  const auto v = finite(values);
  if (v.size() < 2) throw DomainError("density curve needs at least two finite values");
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(v);
  if (!(h > 0) || !std::isfinite(h)) throw DomainError("bandwidth must be positive");

  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it - 3 * h;
  const double hi = *hi_it + 3 * h;
  const double norm = 1.0 / (static_cast<double>(v.size()) * h * std::sqrt(2 * std::numbers::pi));
  std::vector<KdePoint> out(kKdePoints);
  for (std::size_t i = 0; i < kKdePoints; ++i) {
    // Symmetric construction keeps mirrored inputs exactly mirrored.
    const double x = i * 2 < kKdePoints ? lo + (hi - lo) * static_cast<double>(i) / (kKdePoints - 1)
                                        : hi - (hi - lo) * static_cast<double>(kKdePoints - 1 - i) / (kKdePoints - 1);
    double sum = 0;
    for (double xi : v) {
      const double u = (x - xi) / h;
      sum += std::exp(-0.5 * u * u);
    }
    out[i] = {x, sum * norm};
  }
  return out;
}

}  // namespace pedsim
