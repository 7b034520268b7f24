#pragma once

#include "dkreg/asymptotics.hpp"
#include "dkreg/estimators.hpp"

#include <functional>
#include <vector>

namespace dkreg {

struct BandwidthSearch {
  std::vector<double> grid = log_grid(1e-3, 1.0, 40);
  //! Golden-section refinement inside the bracket around the best grid point.
  bool refine = true;
  //! Refinement stops when the bracket width is below tolerance * b.
  double tolerance = 1e-4;

  static std::vector<double> log_grid(double lo, double hi, std::size_t count);
  //! Throws ArgumentError unless the grid is non-empty, positive and strictly
  //! increasing.
  void validate() const;
};

struct TracePoint {
  double b;
  double value;
};

struct BandwidthChoice {
  double b_hat = 0.0;
  double value = 0.0;
  //! Every evaluation, grid points first, in evaluation order.
  std::vector<TracePoint> trace;
  //! The best grid value sat at either end of the grid.
  bool boundary_minimum = false;
};

using BandwidthObjective = std::function<double(Bandwidth)>;

//! Grid scan, bracket, golden-section refinement. Non-finite objective values
//! are recorded in the trace and skipped; AllInfiniteError if none is finite.
//! Grid points may be evaluated on `threads` workers; the result does not
//! depend on the thread count.
BandwidthChoice minimize_bandwidth(const BandwidthObjective& objective,
                                   const BandwidthSearch& search = {}, unsigned threads = 1);

struct CriterionValue {
  //! +inf when no point could be evaluated.
  double value = 0.0;
  std::size_t failed_points = 0;
  std::size_t ll_fallbacks = 0;
};

//! (1 / (|U| d!)) sum_i (mhat(U_i) - m(U_i))^2 over the points that could be
//! estimated; failures are counted and excluded from |U|.
CriterionValue lscv(const Smoother& smoother, const TargetFunction& m,
                    const std::vector<SimplexPoint>& sample, Bandwidth b);

CriterionValue lscv(Method method, const Design& design, const SimplexPartition* partition,
                    const TargetFunction& m, const std::vector<SimplexPoint>& sample, Bandwidth b,
                    const CubatureConfig& cfg = {});

//! (1/n) sum_i (y_i - mhat_{(-i)}(x_i))^2 with the local linear smoother.
//! InsufficientDataError unless n >= d + 2. value is +inf if any held-out
//! fit fails.
CriterionValue loocv_ll(const Design& design, Bandwidth b);

}  // namespace dkreg
