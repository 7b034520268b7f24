#include "dkreg/cubature.hpp"

#include "dkreg/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <deque>

namespace dkreg {

void CubatureConfig::validate() const {
  if (!(relative_tolerance > 0.0 && relative_tolerance <= 0.1))
    throw ArgumentError("cubature: relative_tolerance must lie in (0, 0.1]");
  if (!(absolute_floor > 0.0)) throw ArgumentError("cubature: absolute_floor must be positive");
  if (max_subdivisions < 1) throw ArgumentError("cubature: max_subdivisions must be positive");
  if (max_triangles < 1) throw ArgumentError("cubature: max_triangles must be positive");
}

namespace detail {

const std::array<RuleNode, 7>& degree5_rule() {
  static const std::array<RuleNode, 7> rule = [] {
    const double r15 = std::sqrt(15.0);
    const double a1 = (6.0 - r15) / 21.0, b1 = 1.0 - 2.0 * a1;
    const double a2 = (6.0 + r15) / 21.0, b2 = 1.0 - 2.0 * a2;
    const double w0 = 9.0 / 40.0;
    const double w1 = (155.0 - r15) / 1200.0;
    const double w2 = (155.0 + r15) / 1200.0;
    const double third = 1.0 / 3.0;
    return std::array<RuleNode, 7>{{{third, third, third, w0},
                                    {a1, a1, b1, w1},
                                    {a1, b1, a1, w1},
                                    {b1, a1, a1, w1},
                                    {a2, a2, b2, w2},
                                    {a2, b2, a2, w2},
                                    {b2, a2, a2, w2}}};
  }();
  return rule;
}

const std::array<RuleNode, 12>& degree7_rule() {
  static const std::array<RuleNode, 12> rule = [] {
    // Orbits (a, b, c) under cyclic rotation; weights scaled to sum to one.
    struct Orbit {
      double a, b, c, w;
    };
    const Orbit orbits[4] = {
        {0.062382265094402118174, 0.067517867073916085443, 0.87009986783168179638,
         0.026517028157436251429},
        {0.055225456656926611737, 0.32150249385198182267, 0.62327204949109156559,
         0.043881408714446055037},
        {0.034324302945097146470, 0.66094919618673565761, 0.30472650086816719592,
         0.028775042784981585738},
        {0.51584233435359177926, 0.27771616697639178257, 0.20644149867001643817,
         0.067493187009802774463}};
    std::array<RuleNode, 12> r{};
    std::size_t i = 0;
    for (const auto& o : orbits) {
      r[i++] = {o.a, o.b, o.c, 2.0 * o.w};
      r[i++] = {o.b, o.c, o.a, 2.0 * o.w};
      r[i++] = {o.c, o.a, o.b, 2.0 * o.w};
    }
    return r;
  }();
  return rule;
}

std::vector<Triangle> fan_triangulation(const std::vector<Vec2>& polygon) {
  std::vector<Triangle> tris;
  const std::size_t n = polygon.size();
  if (n < 3) return tris;
  if (n == 3) {
    tris.push_back({polygon[0], polygon[1], polygon[2], 0});
    return tris;
  }
  Vec2 c{0.0, 0.0};
  // Area centroid keeps the fan well shaped for elongated cells.
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = polygon[i];
    const Vec2& q = polygon[(i + 1) % n];
    const double w = cross(p, q);
    a += w;
    c.x += (p.x + q.x) * w;
    c.y += (p.y + q.y) * w;
  }
  c = (1.0 / (3.0 * a)) * c;
  tris.reserve(n);
  for (std::size_t i = 0; i < n; ++i) tris.push_back({c, polygon[i], polygon[(i + 1) % n], 0});
  return tris;
}

std::vector<Triangle> apply_hint(std::vector<Triangle> tris, const ResolutionHint& hint,
                                 int max_depth) {
  std::vector<Triangle> done;
  std::deque<Triangle> work(tris.begin(), tris.end());
  while (!work.empty()) {
    Triangle t = work.front();
    work.pop_front();
    const double diam = triangle_diameter(t);
    const Vec2 centroid = (1.0 / 3.0) * (t.p0 + t.p1 + t.p2);
    const bool near = norm(centroid - hint.center) <= 1.5 * diam;
    if (near && diam > hint.scale && t.depth < max_depth) {
      auto [a, b] = bisect_longest(t);
      work.push_back(a);
      work.push_back(b);
    } else {
      done.push_back(t);
    }
  }
  return done;
}

}  // namespace detail

CubatureResult integrate_triangle(const PlaneIntegrand& f, Vec2 a, Vec2 b, Vec2 c,
                                  const CubatureConfig& cfg) {
  cfg.validate();
  if (cross(b - a, c - a) < 0.0) std::swap(b, c);
  return detail::adaptive_integrate(f, {{a, b, c, 0}}, cfg, std::nullopt);
}

CubatureResult integrate_polygon(const PlaneIntegrand& f, const std::vector<Vec2>& polygon,
                                 const CubatureConfig& cfg,
                                 const std::optional<ResolutionHint>& hint) {
  cfg.validate();
  if (polygon.size() < 3) throw ArgumentError("integrate_polygon: polygon needs three vertices");
  return detail::adaptive_integrate(f, detail::fan_triangulation(polygon), cfg, hint);
}

CubatureResult integrate_polygon(const PlaneIntegrand& f, const ConvexCell& cell,
                                 const CubatureConfig& cfg,
                                 const std::optional<ResolutionHint>& hint) {
  return integrate_polygon(f, cell.vertices(), cfg, hint);
}

CubatureResult integrate_simplex(const SimplexIntegrand& f, std::size_t dim,
                                 const CubatureConfig& cfg, double shrink) {
  cfg.validate();
  if (shrink < 0.0 || shrink * static_cast<double>(dim + 1) >= 1.0)
    throw ArgumentError("integrate_simplex: shrink must lie in [0, 1/(d+1))");
  if (dim == 1) {
    std::size_t evals = 0;
    auto g = [&](double x) {
      ++evals;
      return f(SimplexPoint{x});
    };
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        g, shrink, 1.0 - shrink, 15, cfg.relative_tolerance, &err);
    CubatureResult r;
    r.value = v;
    r.error = err;
    r.converged = r.error <= std::max(cfg.relative_tolerance * std::abs(v), cfg.absolute_floor);
    r.evaluations = evals;
    return r;
  }
  if (dim == 2) {
    const double e = shrink;
    const std::vector<Vec2> tri = {{e, e}, {1.0 - 2.0 * e, e}, {e, 1.0 - 2.0 * e}};
    auto g = [&](double x, double y) { return f(SimplexPoint{x, y}); };
    return detail::adaptive_integrate(g, {{tri[0], tri[1], tri[2], 0}}, cfg, std::nullopt);
  }
  throw ArgumentError("integrate_simplex: only d = 1 and d = 2 are supported");
}

}  // namespace dkreg
