#pragma once

#include "dkreg/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <vector>

namespace dkreg {

struct CubatureConfig {
  double relative_tolerance = 1e-3;
  double absolute_floor = 1e-14;
  //! Refinement levels allowed for any triangle; one level halves the
  //! diameter, i.e. two longest-edge bisections.
  int max_subdivisions = 20;
  //! Hard cap on live triangles per call.
  std::size_t max_triangles = 20000;

  //! Throws ArgumentError unless relative_tolerance is in (0, 0.1] and the
  //! remaining limits are positive.
  void validate() const;
};

struct CubatureResult {
  double value = 0.0;
  double error = 0.0;
  //! False when the tolerance was not met before a limit was hit; value is
  //! then the best estimate available.
  bool converged = true;
  std::size_t evaluations = 0;
};

//! Forces subdivision around `center` until triangles near it have diameter
//! at most `scale`. Used for sharply peaked integrands whose peak location
//! is known.
struct ResolutionHint {
  Vec2 center;
  double scale;
};

using PlaneIntegrand = std::function<double(double, double)>;
using SimplexIntegrand = std::function<double(const SimplexPoint&)>;

CubatureResult integrate_triangle(const PlaneIntegrand& f, Vec2 a, Vec2 b, Vec2 c,
                                  const CubatureConfig& cfg = {});

//! Integral over a cell: fan triangulation about the centroid, then global
//! adaptive longest-edge bisection driven by the |Q7 - Q5| error estimate,
//! until the total estimate is below max(rtol |value|, absolute_floor).
CubatureResult integrate_polygon(const PlaneIntegrand& f, const ConvexCell& cell,
                                 const CubatureConfig& cfg = {},
                                 const std::optional<ResolutionHint>& hint = std::nullopt);

CubatureResult integrate_polygon(const PlaneIntegrand& f, const std::vector<Vec2>& polygon,
                                 const CubatureConfig& cfg = {},
                                 const std::optional<ResolutionHint>& hint = std::nullopt);

//! Integral over S_d for d in {1, 2}. With shrink = eps > 0 the domain is
//! { s : s_i >= eps, s_{d+1} >= eps }, for integrands singular on the boundary.
CubatureResult integrate_simplex(const SimplexIntegrand& f, std::size_t dim,
                                 const CubatureConfig& cfg = {}, double shrink = 0.0);

namespace detail {

struct Triangle {
  Vec2 p0, p1, p2;
  int depth = 0;
};

inline double triangle_area(const Triangle& t) {
  return 0.5 * std::abs(cross(t.p1 - t.p0, t.p2 - t.p0));
}

inline double triangle_diameter(const Triangle& t) {
  return std::max({norm(t.p1 - t.p0), norm(t.p2 - t.p1), norm(t.p0 - t.p2)});
}

//! Barycentric nodes and area-normalised weights of a symmetric triangle rule.
struct RuleNode {
  double l0, l1, l2, w;
};

// Radon's 7-point rule, degree 5.
const std::array<RuleNode, 7>& degree5_rule();
// Gatermann's 12-point rule, degree 7, positive weights.
const std::array<RuleNode, 12>& degree7_rule();

struct TriangleEstimate {
  Triangle tri;
  double value;
  double error;
  bool operator<(const TriangleEstimate& o) const { return error < o.error; }
};

template <class F>
TriangleEstimate estimate_triangle(F& f, const Triangle& t, std::size_t& evals) {
  const double area = triangle_area(t);
  auto at = [&](const RuleNode& n) {
    const double x = n.l0 * t.p0.x + n.l1 * t.p1.x + n.l2 * t.p2.x;
    const double y = n.l0 * t.p0.y + n.l1 * t.p1.y + n.l2 * t.p2.y;
    return f(x, y);
  };
  double q5 = 0.0, q7 = 0.0;
  for (const auto& n : degree5_rule()) q5 += n.w * at(n);
  for (const auto& n : degree7_rule()) q7 += n.w * at(n);
  evals += 19;
  q5 *= area;
  q7 *= area;
  return {t, q7, std::abs(q7 - q5)};
}

inline std::pair<Triangle, Triangle> bisect_longest(const Triangle& t) {
  const double e01 = norm(t.p1 - t.p0), e12 = norm(t.p2 - t.p1), e20 = norm(t.p0 - t.p2);
  const int d = t.depth + 1;
  if (e01 >= e12 && e01 >= e20) {
    const Vec2 m = 0.5 * (t.p0 + t.p1);
    return {{t.p0, m, t.p2, d}, {m, t.p1, t.p2, d}};
  }
  if (e12 >= e20) {
    const Vec2 m = 0.5 * (t.p1 + t.p2);
    return {{t.p1, m, t.p0, d}, {m, t.p2, t.p0, d}};
  }
  const Vec2 m = 0.5 * (t.p2 + t.p0);
  return {{t.p2, m, t.p1, d}, {m, t.p0, t.p1, d}};
}

std::vector<Triangle> fan_triangulation(const std::vector<Vec2>& polygon);

//! Subdivides triangles close to the hint centre down to the hint scale.
std::vector<Triangle> apply_hint(std::vector<Triangle> tris, const ResolutionHint& hint,
                                 int max_depth);

template <class F>
CubatureResult adaptive_integrate(F&& f, std::vector<Triangle> initial, const CubatureConfig& cfg,
                                  const std::optional<ResolutionHint>& hint) {
  const int max_depth = 2 * cfg.max_subdivisions;
  if (hint) initial = apply_hint(std::move(initial), *hint, max_depth);

  CubatureResult result;
  std::priority_queue<TriangleEstimate> active;
  double value = 0.0, error = 0.0;
  for (const auto& t : initial) {
    auto e = estimate_triangle(f, t, result.evaluations);
    value += e.value;
    error += e.error;
    active.push(e);
  }
  double frozen_value = 0.0, frozen_error = 0.0;
  std::size_t live = active.size();
  auto target = [&] { return std::max(cfg.relative_tolerance * std::abs(value), cfg.absolute_floor); };

  while (!active.empty() && error > target()) {
    if (live >= cfg.max_triangles) {
      result.converged = false;
      break;
    }
    TriangleEstimate worst = active.top();
    active.pop();
    if (worst.tri.depth >= max_depth) {
      frozen_value += worst.value;
      frozen_error += worst.error;
      result.converged = false;
      if (frozen_error > target()) break;
      continue;
    }
    auto [a, b] = bisect_longest(worst.tri);
    auto ea = estimate_triangle(f, a, result.evaluations);
    auto eb = estimate_triangle(f, b, result.evaluations);
    // The embedded difference can vanish by accident; the parent/children
    // discrepancy is a second, independent estimate.
    const double delta = std::abs(ea.value + eb.value - worst.value);
    ea.error = std::max(ea.error, 0.5 * delta);
    eb.error = std::max(eb.error, 0.5 * delta);
    value += ea.value + eb.value - worst.value;
    error += ea.error + eb.error - worst.error;
    active.push(ea);
    active.push(eb);
    ++live;
  }

  // Resum to drop accumulated update round-off.
  value = frozen_value;
  error = frozen_error;
  while (!active.empty()) {
    value += active.top().value;
    error += active.top().error;
    active.pop();
  }
  result.value = value;
  result.error = error;
  if (error > std::max(cfg.relative_tolerance * std::abs(value), cfg.absolute_floor))
    result.converged = false;
  return result;
}

}  // namespace detail

//! Template entry point used by hot loops (no std::function indirection).
template <class F>
CubatureResult integrate_polygon_fast(F&& f, const std::vector<Vec2>& polygon,
                                      const CubatureConfig& cfg,
                                      const std::optional<ResolutionHint>& hint = std::nullopt) {
  return detail::adaptive_integrate(std::forward<F>(f), detail::fan_triangulation(polygon), cfg,
                                    hint);
}

}  // namespace dkreg
