#include <doctest.h>

#include "dkreg/errors.hpp"
#include "dkreg/estimators.hpp"
#include "dkreg/geometry.hpp"
#include "dkreg/simulation.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace dkreg;

namespace {

Design noiseless(const TargetFunction& m, const std::vector<SimplexPoint>& pts) {
  Design d;
  d.points = pts;
  for (const auto& p : pts) d.responses.push_back(m(p));
  return d;
}

Design from_function(double (*f)(double, double), const std::vector<SimplexPoint>& pts) {
  Design d;
  d.points = pts;
  for (const auto& p : pts) d.responses.push_back(f(p[0], p[1]));
  return d;
}

// Weighted least squares intercept in 50 digits: explicit 3x3 adjugate inverse.
double wls_intercept_oracle(const Design& d, double b, const SimplexPoint& s) {
  using oracle::big;
  big M[3][3] = {}, r[3] = {};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& x = d.points[i];
    const big w = exp(oracle::log_dirichlet({s[0] / b + 1, s[1] / b + 1}, s.last() / b + 1,
                                            {x[0], x[1]}));
    const big z[3] = {1, big(x[0]) - s[0], big(x[1]) - s[1]};
    for (int a = 0; a < 3; ++a) {
      r[a] += w * z[a] * d.responses[i];
      for (int c = 0; c < 3; ++c) M[a][c] += w * z[a] * z[c];
    }
  }
  const big c00 = M[1][1] * M[2][2] - M[1][2] * M[2][1];
  const big c01 = -(M[1][0] * M[2][2] - M[1][2] * M[2][0]);
  const big c02 = M[1][0] * M[2][1] - M[1][1] * M[2][0];
  const big det = M[0][0] * c00 + M[0][1] * c01 + M[0][2] * c02;
  // First row of the inverse is the first column of the cofactor matrix over det.
  return static_cast<double>((c00 * r[0] + c01 * r[1] + c02 * r[2]) / det);
}

const TargetFunction m1 = target_function("m1");
const TargetFunction m2 = target_function("m2");
const TargetFunction m4 = target_function("m4");

}  // namespace

TEST_CASE("method names round-trip") {
  for (Method m : {Method::GM, Method::NW, Method::LL}) CHECK(parse_method(to_string(m)) == m);
  CHECK(parse_method("ll") == Method::LL);
  CHECK_THROWS_AS(parse_method("kde"), ArgumentError);
}

TEST_CASE("design validation") {
  Design d;
  CHECK_THROWS_AS(d.validate(), ArgumentError);
  d.points = {SimplexPoint{0.2, 0.2}};
  CHECK_THROWS_AS(d.validate(), MismatchError);
  d.responses = {std::nan("")};
  CHECK_THROWS_AS(d.validate(), DomainError);
  d.responses = {1.0};
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("GM: constants, a single cell, and weight invariants") {
  const auto pts = mesh_design_points(7);
  const auto part = voronoi_partition(pts);
  Design d;
  d.points = pts;
  d.responses.assign(pts.size(), 3.5);
  CubatureConfig cfg;
  for (const SimplexPoint& s : {SimplexPoint{1.0 / 3, 1.0 / 3}, SimplexPoint{0.2, 0.6}}) {
    for (double b : {0.2, 0.05}) {
      const auto est = gm_estimate(d, part, Bandwidth(b), s, cfg);
      CHECK(std::abs(est.value - 3.5) <= 20 * cfg.relative_tolerance * 3.5);
      const auto w = gm_weights(part, Bandwidth(b), s, cfg);
      CHECK(w.weights.size() == pts.size());
      CHECK(std::all_of(w.weights.begin(), w.weights.end(), [](double x) { return x >= 0.0; }));
      CHECK(w.sum() >= 1 - 20 * cfg.relative_tolerance);
      CHECK(w.sum() <= 1 + 20 * cfg.relative_tolerance);
    }
  }

  const std::vector<SimplexPoint> one = {SimplexPoint{0.3, 0.3}};
  const auto whole = voronoi_partition(one);
  Design single{one, {-2.25}};
  CHECK(gm_estimate(single, whole, Bandwidth(0.1), SimplexPoint{0.5, 0.2}).value ==
        doctest::Approx(-2.25).epsilon(1e-3));
}

TEST_CASE("GM: m4 on the k=7 mesh against a dense-quadrature oracle") {
  const auto pts = mesh_design_points(7);
  const auto part = voronoi_partition(pts);
  const Design d = noiseless(m4, pts);
  const SimplexPoint s{1.0 / 3, 1.0 / 3};
  const Bandwidth b(0.1);

  CubatureConfig dense;
  dense.relative_tolerance = 1e-7;
  const auto K = make_kernel(s, b);
  double oracle_value = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    oracle_value += d.responses[i] *
                    integrate_polygon([&](double x, double y) { return std::exp(K.log_pdf2(x, y)); },
                                      part[i], dense)
                        .value;

  const auto est = gm_estimate(d, part, b, s);
  CHECK(est.flagged_cells == 0);
  CHECK(est.value == doctest::Approx(oracle_value).epsilon(2e-3));
  CHECK(gm_estimate(d, part, b, s, dense).value == doctest::Approx(oracle_value).epsilon(1e-6));
}

TEST_CASE("GM: misaligned partition is rejected") {
  const auto pts = mesh_design_points(4);
  const auto part = voronoi_partition(pts);
  Design d = noiseless(m4, pts);
  std::swap(d.points[0], d.points[1]);
  CHECK_THROWS_AS(GmSmoother(d, part, {}), MismatchError);
  d = noiseless(m4, mesh_design_points(5));
  CHECK_THROWS_AS(gm_estimate(d, part, Bandwidth(0.1), SimplexPoint{0.3, 0.3}), MismatchError);
  CHECK_THROWS_AS(make_smoother(Method::GM, d, nullptr), ArgumentError);
}

TEST_CASE("NW: constants, n = 1, and a direct summation oracle") {
  const auto pts = mesh_design_points(7);
  Design c;
  c.points = pts;
  c.responses.assign(pts.size(), -1.75);
  CHECK(nw_estimate(c, Bandwidth(0.01), SimplexPoint{0.3, 0.3}) == doctest::Approx(-1.75).epsilon(1e-15));
  CHECK(nw_estimate(Design{{SimplexPoint{0.4, 0.4}}, {8.0}}, Bandwidth(0.1), SimplexPoint{0.1, 0.1}) == 8.0);

  const Design d = noiseless(m1, pts);
  const SimplexPoint s{0.2, 0.3};
  const Bandwidth b(0.05);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double k = kappa(s, b, pts[i]);
    num += k * d.responses[i];
    den += k;
  }
  CHECK(nw_estimate(d, b, s) == doctest::Approx(num / den).epsilon(1e-12));

  // Log-sum-exp agrees with naive summation wherever the latter does not underflow.
  std::mt19937_64 gen(3);
  for (int t = 0; t < 40; ++t) {
    const SimplexPoint q = oracle::interior_point(gen, 2, 0.01);
    const Bandwidth bb(std::uniform_real_distribution<double>(0.02, 1.0)(gen));
    double nn = 0.0, dd = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double k = kappa(q, bb, pts[i]);
      nn += k * d.responses[i];
      dd += k;
    }
    if (dd > 1e-200) CHECK(nw_estimate(d, bb, q) == doctest::Approx(nn / dd).epsilon(1e-12));
  }
}

TEST_CASE("NW: tiny bandwidths stay finite, vanished weights are an error") {
  const Design d = noiseless(m1, mesh_design_points(7));
  const double v = nw_estimate(d, Bandwidth(1e-4), SimplexPoint{0.9, 0.05});
  CHECK(std::isfinite(v));
  const auto [lo, hi] = std::minmax_element(d.responses.begin(), d.responses.end());
  CHECK(v >= *lo);
  CHECK(v <= *hi);

  // Every design point has x_1 = 0 while the kernel requires x_1 > 0.
  const Design edge{{SimplexPoint{0.0, 0.5}, SimplexPoint{0.0, 0.2}}, {1.0, 2.0}};
  CHECK_THROWS_AS(nw_estimate(edge, Bandwidth(0.1), SimplexPoint{0.3, 0.3}), AllWeightsVanishedError);
}

TEST_CASE("LL: affine reproduction and constants") {
  auto affine = [](double x, double y) { return 2.0 + 3.0 * x - y; };
  const auto pts = mesh_design_points(7);
  const Design d = from_function(affine, pts);
  std::mt19937_64 gen(5);
  for (double b : {1.0, 0.3, 0.1, 0.05, 0.02}) {
    for (int t = 0; t < 10; ++t) {
      const SimplexPoint s = oracle::interior_point(gen, 2, 0.02);
      const auto est = ll_estimate(d, Bandwidth(b), s);
      if (est.ll_fallback) continue;
      CHECK(std::abs(est.value - affine(s[0], s[1])) <= 1e-8);
    }
  }
  Design c;
  c.points = pts;
  c.responses.assign(pts.size(), 0.625);
  CHECK(std::abs(ll_estimate(c, Bandwidth(0.1), SimplexPoint{0.25, 0.25}).value - 0.625) <= 1e-10);
}

TEST_CASE("LL: m2 on the k=10 mesh against a 50-digit weighted least-squares oracle") {
  const Design d = noiseless(m2, mesh_design_points(10));
  const SimplexPoint s{0.25, 0.25};
  const auto est = ll_estimate(d, Bandwidth(0.08), s);
  CHECK_FALSE(est.ll_fallback);
  CHECK(est.value == doctest::Approx(wls_intercept_oracle(d, 0.08, s)).epsilon(1e-10));

  std::mt19937_64 gen(17);
  for (int t = 0; t < 10; ++t) {
    const SimplexPoint q = oracle::interior_point(gen, 2, 0.05);
    const auto e = ll_estimate(d, Bandwidth(0.15), q);
    CHECK(e.value == doctest::Approx(wls_intercept_oracle(d, 0.15, q)).epsilon(1e-9));
  }
}

TEST_CASE("LL: degenerate local design falls back to NW with a flag") {
  Design line;
  for (double t : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    line.points.push_back(SimplexPoint{t, 0.3});
    line.responses.push_back(t * t);
  }
  const SimplexPoint s{0.25, 0.3};
  const auto est = ll_estimate(line, Bandwidth(0.1), s);
  CHECK(est.ll_fallback);
  CHECK(est.value == doctest::Approx(nw_estimate(line, Bandwidth(0.1), s)).epsilon(1e-14));

  const Design two{{SimplexPoint{0.2, 0.2}, SimplexPoint{0.5, 0.1}}, {1.0, 2.0}};
  CHECK_THROWS_AS(ll_estimate(two, Bandwidth(0.1), s), InsufficientDataError);
  CHECK_THROWS_AS(LlSmoother{two}, InsufficientDataError);
}

TEST_CASE("shift and scale equivariance") {
  const auto pts = mesh_design_points(7);
  const auto part = voronoi_partition(pts);
  const Design d = noiseless(m2, pts);
  Design shifted = d, scaled = d;
  for (auto& y : shifted.responses) y += 10.0;
  for (auto& y : scaled.responses) y *= -3.0;
  CubatureConfig cfg;
  const Bandwidth b(0.07);
  const SimplexPoint s{0.4, 0.15};

  CHECK(nw_estimate(shifted, b, s) == doctest::Approx(nw_estimate(d, b, s) + 10.0).epsilon(1e-10));
  CHECK(nw_estimate(scaled, b, s) == doctest::Approx(-3.0 * nw_estimate(d, b, s)).epsilon(1e-10));
  CHECK(ll_estimate(shifted, b, s).value == doctest::Approx(ll_estimate(d, b, s).value + 10.0).epsilon(1e-10));
  CHECK(ll_estimate(scaled, b, s).value == doctest::Approx(-3.0 * ll_estimate(d, b, s).value).epsilon(1e-10));

  const double gm = gm_estimate(d, part, b, s, cfg).value;
  // Weights are identical; only their sum differs from 1 by the cubature error.
  CHECK(std::abs(gm_estimate(shifted, part, b, s, cfg).value - gm - 10.0) <= 20 * cfg.relative_tolerance * 10.0);
  CHECK(gm_estimate(scaled, part, b, s, cfg).value == doctest::Approx(-3.0 * gm).epsilon(1e-12));
}

TEST_CASE("batch evaluation equals single calls, in any order") {
  const auto pts = mesh_design_points(7);
  const auto part = voronoi_partition(pts);
  const Design d = noiseless(m1, pts);
  const auto eval = uniform_simplex_sample(60, 99);
  const Bandwidth b(0.1);

  for (Method method : {Method::GM, Method::NW, Method::LL}) {
    const auto sm = make_smoother(method, d, &part);
    const auto batch = batch_estimate(*sm, b, eval, 4);
    REQUIRE(batch.values.size() == eval.size());
    CHECK(batch.failures.empty());
    for (std::size_t i = 0; i < eval.size(); ++i) CHECK(batch.values[i] == sm->estimate(eval[i], b).value);

    const auto single = batch_estimate(method, d, &part, b, {eval[7]});
    CHECK(single.values[0] == sm->estimate(eval[7], b).value);

    std::vector<std::size_t> perm(eval.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(1));
    std::vector<SimplexPoint> permuted;
    for (auto i : perm) permuted.push_back(eval[i]);
    const auto pb = batch_estimate(*sm, b, permuted, 3);
    for (std::size_t j = 0; j < perm.size(); ++j) CHECK(pb.values[j] == batch.values[perm[j]]);
  }
}

TEST_CASE("batch: 1000 NW points reproduce a looped mean squared deviation bit for bit") {
  const Design d = noiseless(m1, mesh_design_points(7));
  const auto eval = uniform_simplex_sample(1000, 2024);
  const Bandwidth b(0.1);
  const auto batch = batch_estimate(Method::NW, d, nullptr, b, eval, {}, 4);
  double batch_msd = 0.0, loop_msd = 0.0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const double e = batch.values[i] - m1(eval[i]);
    batch_msd += e * e;
    const double l = nw_estimate(d, b, eval[i]) - m1(eval[i]);
    loop_msd += l * l;
  }
  CHECK(batch_msd == loop_msd);
}

TEST_CASE("batch: per-point failures are collected, not thrown") {
  const Design edge{{SimplexPoint{0.0, 0.5}, SimplexPoint{0.0, 0.2}}, {1.0, 2.0}};
  const std::vector<SimplexPoint> eval = {SimplexPoint{0.0, 0.3}, SimplexPoint{0.3, 0.3}};
  const auto r = batch_estimate(Method::NW, edge, nullptr, Bandwidth(0.1), eval);
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].index == 1);
  CHECK(std::isfinite(r.values[0]));
  CHECK(std::isnan(r.values[1]));
}
