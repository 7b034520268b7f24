#include "dkreg/geometry.hpp"

#include "dkreg/errors.hpp"
#include "dkreg/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dkreg {

namespace {

constexpr double kClipTolerance = 1e-12;
constexpr double kDedupTolerance = 1e-10;
constexpr double kCellContainment = 1e-10;

std::vector<Vec2> dedup(std::vector<Vec2> poly) {
  std::vector<Vec2> out;
  out.reserve(poly.size());
  for (const auto& p : poly) {
    if (!out.empty() && norm(p - out.back()) <= kDedupTolerance) continue;
    out.push_back(p);
  }
  while (out.size() > 1 && norm(out.front() - out.back()) <= kDedupTolerance) out.pop_back();
  return out;
}

}  // namespace

double polygon_signed_area(const std::vector<Vec2>& v) {
  double twice = 0.0;
  for (std::size_t i = 0, n = v.size(); i < n; ++i) twice += cross(v[i], v[(i + 1) % n]);
  return 0.5 * twice;
}

ConvexCell::ConvexCell(std::vector<Vec2> vertices, SimplexPoint site)
    : vertices_(std::move(vertices)), site_(std::move(site)) {
  if (site_.dim() != 2) throw DomainError("ConvexCell: site must lie in S_2");
  const std::size_t n = vertices_.size();
  if (n < 3) throw DomainError("ConvexCell: a cell needs at least three vertices");
  if (!(polygon_signed_area(vertices_) > 0.0))
    throw DomainError("ConvexCell: vertices must be counterclockwise with positive area");
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e0 = vertices_[(i + 1) % n] - vertices_[i];
    const Vec2 e1 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
    if (cross(e0, e1) < -1e-12) throw DomainError("ConvexCell: polygon is not convex");
    const Vec2& p = vertices_[i];
    if (p.x < -kCellContainment || p.y < -kCellContainment || p.x + p.y > 1.0 + kCellContainment)
      throw DomainError("ConvexCell: polygon leaves the simplex");
  }
  const Vec2 s = to_vec2(site_);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = vertices_[(i + 1) % n] - vertices_[i];
    if (!(cross(e, s - vertices_[i]) > 0.0))
      throw DomainError("ConvexCell: site must lie strictly inside its cell");
  }
}

Vec2 ConvexCell::centroid() const {
  // Area-weighted centroid of the polygon.
  double a = 0.0, cx = 0.0, cy = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = vertices_[i];
    const Vec2& q = vertices_[(i + 1) % n];
    const double c = cross(p, q);
    a += c;
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

bool ConvexCell::contains(Vec2 p, double tol) const {
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = vertices_[(i + 1) % n] - vertices_[i];
    if (cross(e, p - vertices_[i]) < -tol * norm(e)) return false;
  }
  return true;
}

double cell_area(const ConvexCell& cell) {
  return std::abs(polygon_signed_area(cell.vertices()));
}

double cell_diameter(const ConvexCell& cell) {
  const auto& v = cell.vertices();
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) best = std::max(best, norm(v[i] - v[j]));
  return best;
}

double SimplexPartition::total_area() const {
  double total = 0.0;
  for (const auto& c : cells_) total += cell_area(c);
  return total;
}

std::size_t SimplexPartition::nearest_site(Vec2 p) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const Vec2 d = p - to_vec2(cells_[i].site());
    const double dd = dot(d, d);
    if (dd < best_d) {
      best_d = dd;
      best = i;
    }
  }
  return best;
}

std::string SimplexPartition::to_json() const {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : cells_) {
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& v : c.vertices()) verts.push_back({v.x, v.y});
    cells.push_back({{"site", {c.site()[0], c.site()[1]}},
                     {"area", cell_area(c)},
                     {"vertices", std::move(verts)}});
  }
  nlohmann::json doc = {{"dimension", 2}, {"cells", std::move(cells)}};
  return doc.dump(2);
}

std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& polygon, Vec2 normal, double offset) {
  std::vector<Vec2> out;
  const std::size_t n = polygon.size();
  if (n == 0) return out;
  out.reserve(n + 1);
  // Negative distance = inside.
  auto dist = [&](Vec2 p) { return dot(normal, p) - offset; };
  const double scale = std::max(norm(normal), 1e-300);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = polygon[i];
    const Vec2& q = polygon[(i + 1) % n];
    const double dp = dist(p) / scale;
    const double dq = dist(q) / scale;
    const bool in_p = dp <= kClipTolerance;
    const bool in_q = dq <= kClipTolerance;
    if (in_p) out.push_back(p);
    if (in_p != in_q && std::abs(dp - dq) > 0.0) {
      const double t = dp / (dp - dq);
      if (t > 0.0 && t < 1.0) out.push_back(p + t * (q - p));
    }
  }
  return dedup(std::move(out));
}

std::vector<SimplexPoint> mesh_design_points(int k) {
  if (k < 2) throw ArgumentError("mesh_design_points: k must be at least 2");
  const double kd = static_cast<double>(k);
  const double w = (kd - 1.0 / std::sqrt(2.0)) / (kd - 1.0);
  std::vector<SimplexPoint> pts;
  pts.reserve(static_cast<std::size_t>(k * (k + 1) / 2));
  for (int j = 1; j <= k; ++j) {
    for (int i = 1; i <= j; ++i) {
      const double x = (w * (i - 1) + 0.5) / (kd + 1.0);
      const double y = (w * (k - j) + 0.5) / (kd + 1.0);
      pts.emplace_back(std::vector<double>{x, y});
    }
  }
  return pts;
}

SimplexPartition voronoi_partition(const std::vector<SimplexPoint>& sites) {
  if (sites.empty()) throw ArgumentError("voronoi_partition: no sites");
  for (const auto& s : sites)
    if (s.dim() != 2) throw DomainError("voronoi_partition: only d = 2 is supported");
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = i + 1; j < sites.size(); ++j)
      if (norm(to_vec2(sites[i]) - to_vec2(sites[j])) <= 1e-12) {
        std::ostringstream os;
        os << "voronoi_partition: sites " << i << " and " << j << " coincide";
        throw DegenerateSiteError(os.str());
      }

  const std::vector<Vec2> triangle = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  std::vector<ConvexCell> cells;
  cells.reserve(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const Vec2 a = to_vec2(sites[i]);
    std::vector<Vec2> poly = triangle;
    for (std::size_t j = 0; j < sites.size() && poly.size() >= 3; ++j) {
      if (j == i) continue;
      const Vec2 b = to_vec2(sites[j]);
      // Points closer to a than to b.
      poly = clip_half_plane(poly, b - a, 0.5 * (dot(b, b) - dot(a, a)));
    }
    cells.emplace_back(std::move(poly), sites[i]);
  }
  return SimplexPartition(std::move(cells));
}

std::vector<SimplexPoint> uniform_simplex_sample(std::size_t count, std::uint64_t seed,
                                                 std::size_t dim) {
  if (dim == 0) throw ArgumentError("uniform_simplex_sample: dimension must be positive");
  Rng rng(seed);
  std::vector<SimplexPoint> out;
  out.reserve(count);
  std::vector<double> gaps(dim + 1);
  for (std::size_t n = 0; n < count; ++n) {
    double total = 0.0;
    for (auto& g : gaps) {
      g = rng.exponential();
      total += g;
    }
    std::vector<double> coords(dim);
    for (std::size_t i = 0; i < dim; ++i) coords[i] = gaps[i] / total;
    out.emplace_back(std::move(coords));
  }
  return out;
}

}  // namespace dkreg
