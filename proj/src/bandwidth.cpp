#include "dkreg/bandwidth.hpp"

#include "dkreg/errors.hpp"
#include "dkreg/parallel.hpp"

#include <cmath>
#include <limits>

namespace dkreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double factorial(std::size_t d) { return std::tgamma(static_cast<double>(d) + 1.0); }

}  // namespace

std::vector<double> BandwidthSearch::log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi > lo) || count < 2)
    throw ArgumentError("log_grid: need 0 < lo < hi and at least two points");
  std::vector<double> g(count);
  const double a = std::log(lo), step = (std::log(hi) - a) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) g[i] = std::exp(a + step * static_cast<double>(i));
  g.front() = lo;
  g.back() = hi;
  return g;
}

void BandwidthSearch::validate() const {
  if (grid.empty()) throw ArgumentError("bandwidth search: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i]))
      throw ArgumentError("bandwidth search: grid values must be positive and finite");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw ArgumentError("bandwidth search: grid must be strictly increasing");
  }
  if (!(tolerance > 0.0)) throw ArgumentError("bandwidth search: tolerance must be positive");
}

BandwidthChoice minimize_bandwidth(const BandwidthObjective& objective,
                                   const BandwidthSearch& search, unsigned threads) {
  search.validate();
  const auto& grid = search.grid;
  std::vector<double> values(grid.size());
  parallel_for(grid.size(), resolve_threads(threads),
               [&](std::size_t i) { values[i] = objective(Bandwidth(grid[i])); });

  BandwidthChoice out;
  std::size_t best = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.trace.push_back({grid[i], values[i]});
    if (std::isfinite(values[i]) && (best == grid.size() || values[i] < values[best])) best = i;
  }
  if (best == grid.size()) throw AllInfiniteError("bandwidth search: objective is never finite");
  out.b_hat = grid[best];
  out.value = values[best];
  out.boundary_minimum = grid.size() > 1 && (best == 0 || best + 1 == grid.size());
  if (!search.refine || grid.size() < 3 || out.boundary_minimum) return out;

  auto eval = [&](double b) {
    const double v = objective(Bandwidth(b));
    out.trace.push_back({b, v});
    if (std::isfinite(v) && v < out.value) {
      out.value = v;
      out.b_hat = b;
    }
    return std::isfinite(v) ? v : kInf;
  };
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = grid[best - 1], hi = grid[best + 1];
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double f1 = eval(x1), f2 = eval(x2);
  while (hi - lo > search.tolerance * 0.5 * (hi + lo)) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = eval(x2);
    }
  }
  return out;
}

CriterionValue lscv(const Smoother& smoother, const TargetFunction& m,
                    const std::vector<SimplexPoint>& sample, Bandwidth b) {
  if (sample.empty()) throw ArgumentError("lscv: empty evaluation sample");
  CriterionValue out;
  double ss = 0.0;
  std::size_t used = 0;
  for (const auto& u : sample) {
    try {
      const PointEstimate e = smoother.estimate(u, b);
      const double r = e.value - m(u);
      ss += r * r;
      ++used;
      out.ll_fallbacks += e.ll_fallback ? 1 : 0;
    } catch (const Error&) {
      ++out.failed_points;
    }
  }
  out.value = used ? ss / (static_cast<double>(used) * factorial(sample.front().dim())) : kInf;
  return out;
}

CriterionValue lscv(Method method, const Design& design, const SimplexPartition* partition,
                    const TargetFunction& m, const std::vector<SimplexPoint>& sample, Bandwidth b,
                    const CubatureConfig& cfg) {
  const auto smoother = make_smoother(method, design, partition, cfg);
  return lscv(*smoother, m, sample, b);
}

CriterionValue loocv_ll(const Design& design, Bandwidth b) {
  design.validate();
  if (design.size() < design.dim() + 2)
    throw InsufficientDataError("loocv_ll: at least d + 2 design points are required");
  const LlSmoother ll(design);
  CriterionValue out;
  double ss = 0.0;
  for (std::size_t i = 0; i < design.size(); ++i) {
    try {
      const PointEstimate e = ll.estimate_excluding(design.points[i], b, i);
      const double r = design.responses[i] - e.value;
      ss += r * r;
      out.ll_fallbacks += e.ll_fallback ? 1 : 0;
    } catch (const Error&) {
      ++out.failed_points;
    }
  }
  out.value = out.failed_points ? kInf : ss / static_cast<double>(design.size());
  return out;
}

}  // namespace dkreg
