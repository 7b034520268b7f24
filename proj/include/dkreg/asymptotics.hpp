#pragma once

#include "dkreg/cubature.hpp"
#include "dkreg/kernel.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dkreg {

using Gradient = std::vector<double>;
//! Row-major d x d.
using Hessian = std::vector<double>;

//! A regression function m on S_d with optional derivative callbacks.
struct TargetFunction {
  std::function<double(const SimplexPoint&)> value;
  std::function<Gradient(const SimplexPoint&)> gradient;
  std::function<Hessian(const SimplexPoint&)> hessian;
  std::string label;
  std::size_t dim = 2;

  double operator()(const SimplexPoint& s) const { return value(s); }
  bool has_derivatives() const { return gradient && hessian; }
};

//! Fills in missing gradient / Hessian callbacks by finite differences:
//! central with step h where the stencil fits in the simplex, one-sided
//! second-order otherwise. The Hessian uses step 10 h to limit round-off.
TargetFunction with_finite_differences(TargetFunction m, double h = 1e-5);

//! Error variance and design density; both must be positive.
struct VarianceProfile {
  std::function<double(const SimplexPoint&)> sigma2;
  std::function<double(const SimplexPoint&)> design_density;

  //! Constant variance with the uniform density d! on S_d (the limit density
  //! of the triangular mesh).
  static VarianceProfile homoscedastic_uniform(double sigma2, std::size_t dim = 2);
  //! Checks sigma2 <= sigma0_sq and density >= f0 on an interior grid.
  bool satisfies_bounds(double sigma0_sq, double f0, std::size_t dim = 2, int resolution = 20) const;
};

//! Leading bias coefficient:
//!   g(s) = sum_i {1 - (d+1) s_i} dm/ds_i + 1/2 sum_ij s_i (1{i=j} - s_j) d2m/ds_i ds_j.
//! Throws MissingDerivativesError unless m carries both derivative callbacks.
double bias_g(const TargetFunction& m, const SimplexPoint& s);

//! psi_J(s) = {(4 pi)^{d-|J|} s_{d+1} prod_{i not in J} s_i}^{-1/2};
//! J holds 0-based coordinate indices. Throws BoundaryError when a needed
//! coordinate is zero.
double psi_J(const SimplexPoint& s, const std::vector<std::size_t>& J = {});

inline double psi(const SimplexPoint& s) { return psi_J(s); }

//! Leading variance term of the GM estimator,
//!   n^{-1} b^{-(d+|J|)/2} psi_J sigma^2 / f  prod_{i in J} G(2l+1) / (2^{2l+1} G(l+1)^2).
//! lambdas has length d; entries outside J are ignored. Requires lambda_i >= 2
//! on J (ArgumentError otherwise).
double variance_leading(const SimplexPoint& s, const std::vector<std::size_t>& J,
                        const std::vector<double>& lambdas, const VarianceProfile& profile,
                        double n, Bandwidth b);

//! b^2 G + n^{-1} b^{-d/2} V, the two-term (integrated) MSE expansion.
double mse_expansion(double b, double bias_sq, double variance_const, double n, std::size_t d);

struct OptimalBandwidth {
  double b_opt;
  double error_opt;
  //! The two constants entering the formulas: g^2 (or its integral) and
  //! psi sigma^2 / f (or its integral).
  double bias_constant;
  double variance_constant;
  bool converged = true;
};

//! Closed-form minimiser of mse_expansion for given constants.
OptimalBandwidth optimal_bandwidth(double bias_sq, double variance_const, double n, std::size_t d);

//! Pointwise optimum. ZeroBiasError when |g(s)| <= 1e-12; ArgumentError
//! unless d is 1, 2 or 3.
OptimalBandwidth mse_opt_bandwidth(const SimplexPoint& s, const TargetFunction& m,
                                   const VarianceProfile& profile, double n);

//! Integrated optimum. Both integrals are taken over the simplex shrunk by
//! `shrink` to keep clear of boundary singularities of psi (and of g for
//! functions such as sqrt).
OptimalBandwidth mise_opt_bandwidth(const TargetFunction& m, const VarianceProfile& profile,
                                    const CubatureConfig& cfg, double n, double shrink = 1e-4);

//! n^{1/2} b^{d/4} (estimate - m(s)) / sqrt(psi(s) sigma^2(s) / f(s)).
double clt_standardize(double estimate, const SimplexPoint& s, const TargetFunction& m,
                       const VarianceProfile& profile, double n, Bandwidth b);

}  // namespace dkreg
