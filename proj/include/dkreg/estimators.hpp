#pragma once

#include "dkreg/cubature.hpp"
#include "dkreg/geometry.hpp"
#include "dkreg/kernel.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dkreg {

//! Paired design points x_1..x_n and responses Y_1..Y_n.
struct Design {
  std::vector<SimplexPoint> points;
  std::vector<double> responses;

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().dim(); }
  //! Throws MismatchError / ArgumentError / DomainError on a malformed design.
  void validate() const;
};

enum class Method { GM, NW, LL };

std::string_view to_string(Method m);
//! Accepts "GM", "NW", "LL" (case-insensitive); throws ArgumentError otherwise.
Method parse_method(std::string_view name);

struct PointEstimate {
  double value = 0.0;
  //! LL fell back to NW because the local design matrix was singular.
  bool ll_fallback = false;
  //! Number of GM cells whose cubature did not reach tolerance.
  std::size_t flagged_cells = 0;
};

struct GmWeights {
  std::vector<double> weights;
  double tolerance_used = 0.0;
  std::vector<std::size_t> flagged_cells;

  double sum() const;
};

//! Cumulative work counters, mostly for profiling the GM path.
struct GmWorkStats {
  std::size_t evaluations = 0;
  std::size_t pruned_cells = 0;
};

//! w_i = integral of kappa_{s,b} over B_i. Cells whose tangent-plane bound on
//! the kernel mass is below absolute_floor / 100 are given weight 0 without
//! integration (log kappa is concave, so the bound is rigorous).
GmWeights gm_weights(const SimplexPartition& partition, Bandwidth b, const SimplexPoint& s,
                     const CubatureConfig& cfg, GmWorkStats* stats = nullptr);

PointEstimate gm_estimate(const Design& design, const SimplexPartition& partition, Bandwidth b,
                          const SimplexPoint& s, const CubatureConfig& cfg = {});

//! Throws AllWeightsVanishedError when every kernel weight is zero.
double nw_estimate(const Design& design, Bandwidth b, const SimplexPoint& s);

//! Intercept of the kernel-weighted affine fit at s; falls back to NW (and
//! flags it) when the equilibrated normal matrix has rcond below 1e-10.
PointEstimate ll_estimate(const Design& design, Bandwidth b, const SimplexPoint& s);

//! A smoother bound to one design; estimates at any (s, b). Implementations
//! are immutable after construction and safe to share between threads.
class Smoother {
public:
  virtual ~Smoother() = default;
  virtual PointEstimate estimate(const SimplexPoint& s, Bandwidth b) const = 0;
};

//! Precomputes log-coordinates of the design so that each kernel weight
//! costs d+1 multiply-adds and one exp.
class NwSmoother : public Smoother {
public:
  explicit NwSmoother(const Design& design);
  PointEstimate estimate(const SimplexPoint& s, Bandwidth b) const override;

protected:
  friend class LlSmoother;
  //! Normalised weights exp(log kappa - max); returns false when all vanish.
  bool weights(const SimplexPoint& s, Bandwidth b, std::vector<double>& w,
               std::optional<std::size_t> exclude) const;
  double nw_from_weights(const std::vector<double>& w, std::optional<std::size_t> exclude) const;

  const Design& design_;
  std::vector<double> log_coords_;  // n x (d+1), row-major
};

class LlSmoother : public Smoother {
public:
  explicit LlSmoother(const Design& design);
  PointEstimate estimate(const SimplexPoint& s, Bandwidth b) const override;
  //! Fit with pair `exclude` removed from the design (leave-one-out).
  PointEstimate estimate_excluding(const SimplexPoint& s, Bandwidth b,
                                   std::optional<std::size_t> exclude) const;

private:
  NwSmoother nw_;
};

class GmSmoother : public Smoother {
public:
  //! Throws MismatchError unless partition cells are index-aligned with the
  //! design points.
  GmSmoother(const Design& design, const SimplexPartition& partition, CubatureConfig cfg);
  PointEstimate estimate(const SimplexPoint& s, Bandwidth b) const override;

private:
  const Design& design_;
  const SimplexPartition& partition_;
  CubatureConfig cfg_;
};

//! partition is required iff method == GM.
std::unique_ptr<Smoother> make_smoother(Method method, const Design& design,
                                        const SimplexPartition* partition,
                                        const CubatureConfig& cfg = {});

struct PointFailure {
  std::size_t index;
  std::string message;
};

struct BatchResult {
  //! NaN where estimation failed (see failures).
  std::vector<double> values;
  std::vector<PointFailure> failures;
  std::size_t ll_fallbacks = 0;
  std::size_t flagged_cells = 0;
};

BatchResult batch_estimate(const Smoother& smoother, Bandwidth b,
                           const std::vector<SimplexPoint>& eval_points, unsigned threads = 1);

BatchResult batch_estimate(Method method, const Design& design, const SimplexPartition* partition,
                           Bandwidth b, const std::vector<SimplexPoint>& eval_points,
                           const CubatureConfig& cfg = {}, unsigned threads = 1);

}  // namespace dkreg
