#include "dkreg/stats.hpp"

#include "dkreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace dkreg::stats {

double mean(const std::vector<double>& x) {
  if (x.empty()) throw ArgumentError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double sd(const std::vector<double>& x) { return std::sqrt(variance(x)); }

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw ArgumentError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("quantile probability outside [0, 1]");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double median(const std::vector<double>& x) { return quantile(x, 0.5); }

double iqr(const std::vector<double>& x) { return quantile(x, 0.75) - quantile(x, 0.25); }

double ks_standard_normal(std::vector<double> x) {
  if (x.empty()) throw ArgumentError("KS statistic of an empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = 0.5 * std::erfc(-x[i] / std::numbers::sqrt2);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("ols_slope needs >= 2 pairs");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw ArgumentError("ols_slope: x has no spread");
  return sxy / sxx;
}

}  // namespace dkreg::stats
