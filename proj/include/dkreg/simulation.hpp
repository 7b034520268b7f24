#pragma once

#include "dkreg/asymptotics.hpp"
#include "dkreg/bandwidth.hpp"
#include "dkreg/estimators.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dkreg {

//! The six test surfaces m1..m6 on S_2, with analytic derivatives.
TargetFunction target_function(std::string_view id);
std::vector<std::string> target_function_ids();

enum class NoiseScale {
  //! eps ~ N(0, sigma^2) with sigma^2 = IQR / 10.
  Variance,
  //! eps ~ N(0, sigma^2) with sigma = IQR / 10.
  StandardDeviation,
};

std::string_view to_string(NoiseScale scale);
NoiseScale parse_noise_scale(std::string_view name);

struct NoiseOptions {
  NoiseScale scale = NoiseScale::StandardDeviation;
  bool zero_noise = false;
};

struct GeneratedDesign {
  Design design;
  double noise_variance = 0.0;
  //! IQR of the m-values was zero, so the noise variance fell back to 0.
  bool degenerate_iqr = false;
};

//! Noise variance implied by the IQR of m over the design points.
double iqr_noise_variance(const TargetFunction& m, const std::vector<SimplexPoint>& points,
                          NoiseScale scale, bool* degenerate = nullptr);

//! Y_i = m(x_i) + eps_i, eps iid Gaussian with the IQR-scaled variance.
//! ArgumentError for fewer than two points.
GeneratedDesign generate_responses(const TargetFunction& m, const std::vector<SimplexPoint>& points,
                                   std::uint64_t seed, const NoiseOptions& noise = {});

//! (1 / (|U| * 2)) sum_i (mhat(U_i) - m(U_i))^2; same formula as lscv, d = 2.
CriterionValue ise_tilde(const Smoother& smoother, const TargetFunction& m,
                         const std::vector<SimplexPoint>& sample, Bandwidth b);

struct StudyConfig {
  std::vector<std::string> functions = target_function_ids();
  std::vector<int> k_values = {7, 10, 14};
  std::vector<Method> methods = {Method::GM, Method::NW, Method::LL};
  int replications = 100;
  std::uint64_t seed = 0;
  CubatureConfig cubature;
  std::size_t lscv_sample_size = 1000;
  BandwidthSearch search;
  NoiseOptions noise;
  unsigned threads = 1;

  void validate() const;
};

//! One Table-1 row. Location/scale summaries are of ISE x 1e7.
struct StudyResult {
  std::string function;
  int n = 0;
  Method method = Method::GM;
  double mean = 0.0, sd = 0.0, median = 0.0, iqr = 0.0;
  int replications = 0;
  int failures = 0;
  //! More than 10% of the replications failed.
  bool invalid = false;
  double elapsed_seconds = 0.0;
  //! Unscaled per-replication values, in replication order (NaN = failed).
  std::vector<double> ise;
  std::vector<double> b_hat;
};

//! Rows sorted by (function, n, method). Deterministic given cfg.seed and
//! independent of cfg.threads. Seeds: the LSCV sample depends on (k, rep),
//! the noise on (k, rep, function); all methods see the same data.
std::vector<StudyResult> run_study(const StudyConfig& cfg);

std::string format_study_csv(const std::vector<StudyResult>& rows);
std::string format_study_table(const std::vector<StudyResult>& rows);

struct CltResult {
  //! Mean-centred standardised estimates.
  std::vector<double> standardized;
  double ks_statistic = 0.0;
  std::vector<double> estimates;
  double noise_variance = 0.0;
  //! Var of the raw estimates and the leading-term prediction n^{-1} b^{-d/2} psi sigma^2 / f.
  double empirical_variance = 0.0;
  double predicted_variance = 0.0;
};

//! R replications of the GM estimate at s on the k-point triangular mesh
//! (n = k(k+1)/2), noise per `noise`. The uniform density f = 2 is used in
//! the standardisation. ArgumentError for R < 2 or a method other than GM.
CltResult clt_study(Method method, const TargetFunction& m, const SimplexPoint& s, int k,
                    Bandwidth b, int replications, std::uint64_t seed,
                    const CubatureConfig& cfg = {}, const NoiseOptions& noise = {});

}  // namespace dkreg
