#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dkreg {

//! Tolerance used to accept (and clamp) points marginally outside the simplex.
inline constexpr double kSimplexTolerance = 1e-12;

//! A point s = (s_1, ..., s_d) of the unit simplex. The implicit last
//! coordinate s_{d+1} = 1 - |s|_1 is stored alongside.
class SimplexPoint {
public:
  SimplexPoint() = default;
  //! Validates and clamps; throws DomainError beyond kSimplexTolerance.
  explicit SimplexPoint(std::vector<double> coords);
  SimplexPoint(std::initializer_list<double> coords)
      : SimplexPoint(std::vector<double>(coords)) {}

  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::span<const double> coords() const { return coords_; }
  //! s_{d+1}
  double last() const { return last_; }
  //! Coordinate i of the (d+1)-vector (s_1, ..., s_d, s_{d+1}).
  double full(std::size_t i) const { return i < coords_.size() ? coords_[i] : last_; }
  //! True when every coordinate, including s_{d+1}, is strictly positive.
  bool interior() const;

  bool operator==(const SimplexPoint& other) const = default;

private:
  std::vector<double> coords_;
  double last_ = 1.0;
};

//! Strong type for a smoothing bandwidth b > 0.
class Bandwidth {
public:
  explicit Bandwidth(double b);
  double value() const { return b_; }

private:
  double b_;
};

struct DirichletParams {
  std::vector<double> alpha;
  double beta = 1.0;

  //! Throws DomainError unless all alpha_i > 0 and beta > 0.
  void validate() const;
};

//! Dirichlet(alpha, beta) density with its normalising constant cached.
//! Evaluation is done in log space; only the caller exponentiates.
class DirichletDensity {
public:
  explicit DirichletDensity(const DirichletParams& params);

  std::size_t dim() const { return exponents_.size() - 1; }
  double log_normalizer() const { return log_norm_; }
  //! alpha_i - 1 for i < d, beta - 1 at index d.
  std::span<const double> exponents() const { return exponents_; }

  //! Log density at a validated point. 0 * log 0 is taken as 0; a positive
  //! exponent at a zero coordinate gives -inf; a negative one throws PoleError.
  double log_pdf(const SimplexPoint& x) const;

  //! Unchecked fast path for d = 2 at a point known to lie in the simplex.
  double log_pdf2(double x1, double x2) const {
    double x3 = 1.0 - x1 - x2;
    if (x3 < 0.0) x3 = 0.0;
    return log_norm_ + term(exponents_[0], x1) + term(exponents_[1], x2) + term(exponents_[2], x3);
  }

private:
  static double term(double e, double x) {
    if (e == 0.0) return 0.0;
    return e * std::log(x);
  }

  std::vector<double> exponents_;
  double log_norm_ = 0.0;
};

//! log Gamma for positive arguments, safe to call concurrently.
double log_gamma(double x);

//! log K_{alpha,beta}(x).
double log_dirichlet_density(const DirichletParams& p, const SimplexPoint& x);

//! Parameters (s/b + 1, s_{d+1}/b + 1) of the kernel centred at s.
DirichletParams kernel_params(const SimplexPoint& s, Bandwidth b);

//! The Dirichlet kernel kappa_{s,b} as a reusable density object.
DirichletDensity make_kernel(const SimplexPoint& s, Bandwidth b);

double log_kappa(const SimplexPoint& s, Bandwidth b, const SimplexPoint& x);
double kappa(const SimplexPoint& s, Bandwidth b, const SimplexPoint& x);

//! prod_{k=1..d} (1/b + k), a uniform upper bound of kappa_{s,b} over S_d^2.
double global_bound(std::size_t d, Bandwidth b);

//! Analytic partial derivative of x -> kappa_{s,b}(x) in coordinate k
//! (0-based), written as a difference of two Dirichlet densities:
//!   (1/b + d) [K_{s/b+1-e_k, s_{d+1}/b+1}(x) - K_{s/b+1, s_{d+1}/b}(x)].
//! Requires s_k > 0 and s_{d+1} > 0 so that both shifted densities exist.
double kappa_gradient_coordinate(const SimplexPoint& s, Bandwidth b, const SimplexPoint& x,
                                 std::size_t k);

}  // namespace dkreg
