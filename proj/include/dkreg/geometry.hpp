#pragma once

#include "dkreg/kernel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dkreg {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double c, Vec2 a) { return {c * a.x, c * a.y}; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

//! One cell B_i of a partition of S_2: a convex polygon, counterclockwise,
//! containing its site strictly inside.
class ConvexCell {
public:
  //! Throws DomainError when the polygon is not a valid convex cell of S_2
  //! around the site.
  ConvexCell(std::vector<Vec2> vertices, SimplexPoint site);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const SimplexPoint& site() const { return site_; }
  Vec2 centroid() const;
  //! Closed-polygon membership with tolerance on the edges.
  bool contains(Vec2 p, double tol = 1e-12) const;

private:
  std::vector<Vec2> vertices_;
  SimplexPoint site_;
};

double cell_area(const ConvexCell& cell);
double cell_diameter(const ConvexCell& cell);

//! Signed shoelace area of an arbitrary vertex loop (positive for CCW).
double polygon_signed_area(const std::vector<Vec2>& vertices);

//! Cells index-aligned with the sites they were built from.
class SimplexPartition {
public:
  explicit SimplexPartition(std::vector<ConvexCell> cells) : cells_(std::move(cells)) {}

  std::size_t size() const { return cells_.size(); }
  const ConvexCell& operator[](std::size_t i) const { return cells_[i]; }
  const std::vector<ConvexCell>& cells() const { return cells_; }
  double total_area() const;
  //! Index of the cell whose site is nearest to p.
  std::size_t nearest_site(Vec2 p) const;

  //! {"dimension": 2, "cells": [{"site": [x, y], "vertices": [[x, y], ...]}, ...]}
  std::string to_json() const;

private:
  std::vector<ConvexCell> cells_;
};

//! Triangular mesh of n = k(k+1)/2 interior design points of S_2:
//! (w_k (i-1) + 1/2, w_k (k-j) + 1/2) / (k+1) for 1 <= i <= j <= k with
//! w_k = (k - 1/sqrt(2)) / (k - 1). Requires k >= 2.
std::vector<SimplexPoint> mesh_design_points(int k);

//! Voronoi cells of the sites clipped to S_2, by iterated half-plane
//! clipping. Throws DegenerateSiteError for coincident sites.
SimplexPartition voronoi_partition(const std::vector<SimplexPoint>& sites);

//! Clips a convex polygon to { p : dot(normal, p) <= offset }.
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& polygon, Vec2 normal, double offset);

//! Independent draws from the uniform distribution on S_d, from normalised
//! exponential gaps. Deterministic in the seed.
std::vector<SimplexPoint> uniform_simplex_sample(std::size_t count, std::uint64_t seed,
                                                 std::size_t dim = 2);

inline Vec2 to_vec2(const SimplexPoint& s) { return {s[0], s[1]}; }

}  // namespace dkreg
