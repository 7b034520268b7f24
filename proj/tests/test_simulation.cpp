#include <doctest.h>

#include "dkreg/errors.hpp"
#include "dkreg/geometry.hpp"
#include "dkreg/rng.hpp"
#include "dkreg/simulation.hpp"
#include "dkreg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace dkreg;

namespace {

StudyConfig tiny_study() {
  StudyConfig cfg;
  cfg.functions = {"m1", "m4"};
  cfg.k_values = {3, 4};
  cfg.replications = 3;
  cfg.seed = 42;
  cfg.lscv_sample_size = 60;
  cfg.search.grid = BandwidthSearch::log_grid(0.02, 1.0, 8);
  cfg.search.tolerance = 1e-2;
  return cfg;
}

}  // namespace

TEST_CASE("target functions") {
  CHECK(target_function("m1")(SimplexPoint{0.0, 0.0}) == 0.0);
  CHECK(target_function("m3")(SimplexPoint{0.25, 0.25}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(target_function("m6")(SimplexPoint{0.0, 0.0}) == 1.0);
  CHECK(target_function("m2")(SimplexPoint{0.0, 0.0}) == 1.0);
  CHECK(target_function("m4")(SimplexPoint{0.5, 0.5}) == 0.75);
  CHECK(target_function("m5")(SimplexPoint{0.0, 0.0}) == doctest::Approx(0.625));
  CHECK(target_function_ids().size() == 6);
  for (const auto& id : target_function_ids()) {
    const auto m = target_function(id);
    CHECK(m.label == id);
    CHECK(m.has_derivatives());
  }
  CHECK_THROWS_AS(target_function("m7"), UnknownFunctionError);
}

TEST_CASE("noise scale names") {
  CHECK(parse_noise_scale("variance") == NoiseScale::Variance);
  CHECK(parse_noise_scale("sd") == NoiseScale::StandardDeviation);
  CHECK(parse_noise_scale(to_string(NoiseScale::Variance)) == NoiseScale::Variance);
  CHECK_THROWS_AS(parse_noise_scale("sigma"), ArgumentError);
}

TEST_CASE("IQR-scaled Gaussian responses") {
  const auto m1 = target_function("m1");
  const auto pts = mesh_design_points(7);
  std::vector<double> mv;
  for (const auto& p : pts) mv.push_back(m1(p));
  const double iqr = stats::iqr(mv);
  CHECK(iqr_noise_variance(m1, pts, NoiseScale::Variance) == doctest::Approx(iqr / 10).epsilon(1e-15));
  CHECK(iqr_noise_variance(m1, pts, NoiseScale::StandardDeviation) == doctest::Approx(iqr * iqr / 100).epsilon(1e-15));

  const auto big = uniform_simplex_sample(100000, 6);
  for (NoiseScale scale : {NoiseScale::Variance, NoiseScale::StandardDeviation}) {
    const auto g = generate_responses(m1, big, 123, {scale, false});
    std::vector<double> eps;
    for (std::size_t i = 0; i < big.size(); ++i) eps.push_back(g.design.responses[i] - m1(big[i]));
    CHECK(stats::variance(eps) == doctest::Approx(g.noise_variance).epsilon(0.02));
    CHECK(std::abs(stats::mean(eps)) <= 4.0 * std::sqrt(g.noise_variance / 1e5));
  }

  const auto a = generate_responses(m1, pts, 77), b = generate_responses(m1, pts, 77);
  CHECK(a.design.responses == b.design.responses);
  CHECK(generate_responses(m1, pts, 78).design.responses != a.design.responses);

  const auto z = generate_responses(m1, pts, 77, {NoiseScale::Variance, true});
  CHECK(z.noise_variance == 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(z.design.responses[i] == m1(pts[i]));

  TargetFunction flat;
  flat.value = [](const SimplexPoint&) { return 3.0; };
  const auto f = generate_responses(flat, pts, 1);
  CHECK(f.degenerate_iqr);
  CHECK(f.noise_variance == 0.0);
  CHECK_THROWS_AS(generate_responses(m1, {SimplexPoint{0.2, 0.2}}, 1), ArgumentError);
}

TEST_CASE("ISE equals LSCV at the same bandwidth and sample") {
  const auto m1 = target_function("m1");
  const auto gd = generate_responses(m1, mesh_design_points(7), 4);
  const auto sample = uniform_simplex_sample(1000, 8);
  const LlSmoother ll(gd.design);
  const Bandwidth b(0.12);
  const auto ise = ise_tilde(ll, m1, sample, b);
  CHECK(ise.value == lscv(ll, m1, sample, b).value);
  CHECK(ise_tilde(ll, m1, sample, b).value == ise.value);

  // Noiseless affine surface: the local linear fit is exact.
  TargetFunction affine;
  affine.value = [](const SimplexPoint& s) { return 0.5 * s[0] + s[1]; };
  const auto ga = generate_responses(affine, mesh_design_points(7), 1, {NoiseScale::Variance, true});
  CHECK(ise_tilde(LlSmoother(ga.design), affine, sample, b).value <= 1e-20);

  const auto s1 = uniform_simplex_sample(5, 1, 1);
  CHECK_THROWS_AS(ise_tilde(ll, m1, s1, b), DomainError);
}

TEST_CASE("study configuration validation") {
  StudyConfig cfg = tiny_study();
  CHECK_NOTHROW(cfg.validate());
  cfg.replications = 0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = tiny_study();
  cfg.k_values = {1};
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = tiny_study();
  cfg.functions = {"m9"};
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("study: deterministic, thread-independent, sorted, and consistent") {
  StudyConfig cfg = tiny_study();
  cfg.threads = 1;
  const auto a = run_study(cfg);
  cfg.threads = 3;
  const auto b = run_study(cfg);
  REQUIRE(a.size() == 2 * 2 * 3);
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].function == b[i].function);
    CHECK(a[i].n == b[i].n);
    CHECK(a[i].method == b[i].method);
    CHECK(a[i].ise == b[i].ise);
    CHECK(a[i].b_hat == b[i].b_hat);
    CHECK(a[i].mean == b[i].mean);
  }
  CHECK(format_study_csv(a) == format_study_csv(b));

  for (std::size_t i = 1; i < a.size(); ++i) {
    const auto& p = a[i - 1];
    const auto& q = a[i];
    const bool ordered = p.function < q.function || (p.function == q.function && p.n < q.n) ||
                         (p.function == q.function && p.n == q.n && p.method < q.method);
    CHECK(ordered);
  }

  for (const auto& row : a) {
    CHECK(row.failures == 0);
    CHECK_FALSE(row.invalid);
    CHECK(row.sd >= 0.0);
    CHECK(row.iqr >= 0.0);
    const auto [lo, hi] = std::minmax_element(row.ise.begin(), row.ise.end());
    CHECK(row.median >= *lo * 1e7 * (1 - 1e-12));
    CHECK(row.median <= *hi * 1e7 * (1 + 1e-12));
    std::vector<double> scaled;
    for (double v : row.ise) scaled.push_back(v * 1e7);
    CHECK(row.mean == doctest::Approx(stats::mean(scaled)).epsilon(1e-14));
    // Aggregates do not depend on replication order.
    std::reverse(scaled.begin(), scaled.end());
    CHECK(row.median == stats::median(scaled));
    CHECK(row.iqr == stats::iqr(scaled));
    CHECK(row.mean == doctest::Approx(stats::mean(scaled)).epsilon(1e-14));
  }
}

TEST_CASE("study: every replication replays from its derived seeds") {
  StudyConfig cfg = tiny_study();
  cfg.functions = {"m4"};
  cfg.k_values = {3};
  const auto rows = run_study(cfg);
  REQUIRE(rows.size() == 3);
  const auto m4 = target_function("m4");
  const auto pts = mesh_design_points(3);
  const auto part = voronoi_partition(pts);
  for (const auto& row : rows) {
    INFO(to_string(row.method));
    for (int r = 0; r < cfg.replications; ++r) {
      const std::uint64_t rep = static_cast<std::uint64_t>(r);
      // Streams: 1 = LSCV sample keyed by (k, rep); 2 = noise keyed by (k, rep, function index).
      const auto sample = uniform_simplex_sample(cfg.lscv_sample_size, derive_seed(42, {1, 3, rep}));
      const auto gd = generate_responses(m4, pts, derive_seed(42, {2, 3, rep, 4}), cfg.noise);
      const auto sm = make_smoother(row.method, gd.design, &part, cfg.cubature);
      const auto choice =
          minimize_bandwidth([&](Bandwidth b) { return lscv(*sm, m4, sample, b).value; }, cfg.search);
      CHECK(row.ise[r] == choice.value);
      CHECK(row.b_hat[r] == choice.b_hat);
      CHECK(ise_tilde(*sm, m4, sample, Bandwidth(choice.b_hat)).value == row.ise[r]);
    }
  }
}

TEST_CASE("CLT study") {
  const auto m1 = target_function("m1");
  const SimplexPoint s{1.0 / 3, 1.0 / 3};
  CHECK_THROWS_AS(clt_study(Method::GM, m1, s, 7, Bandwidth(0.2), 1, 1), ArgumentError);
  CHECK_THROWS_AS(clt_study(Method::NW, m1, s, 7, Bandwidth(0.2), 10, 1), ArgumentError);
  CHECK_THROWS_AS(clt_study(Method::GM, m1, SimplexPoint{0.0, 0.5}, 7, Bandwidth(0.2), 10, 1), DomainError);

  const auto r = clt_study(Method::GM, m1, s, 7, Bandwidth(0.2), 50, 3);
  CHECK(r.standardized.size() == 50);
  CHECK(std::abs(stats::mean(r.standardized)) <= 1e-12);
  CHECK(r.ks_statistic > 0.0);
  CHECK(r.ks_statistic < 1.0);
  CHECK(r.predicted_variance > 0.0);
  const auto again = clt_study(Method::GM, m1, s, 7, Bandwidth(0.2), 50, 3);
  CHECK(again.estimates == r.estimates);
}
