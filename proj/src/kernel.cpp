#include "dkreg/kernel.hpp"

#include "dkreg/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

namespace dkreg {

SimplexPoint::SimplexPoint(std::vector<double> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) throw DomainError("SimplexPoint: dimension must be positive");
  double sum = 0.0;
  for (auto& c : coords_) {
    if (!std::isfinite(c) || c < -kSimplexTolerance) {
      std::ostringstream os;
      os << "SimplexPoint: coordinate " << c << " outside [0, 1]";
      throw DomainError(os.str());
    }
    if (c < 0.0) c = 0.0;
    sum += c;
  }
  if (sum > 1.0 + kSimplexTolerance) {
    std::ostringstream os;
    os << "SimplexPoint: |s|_1 = " << sum << " exceeds 1";
    throw DomainError(os.str());
  }
  last_ = std::clamp(1.0 - sum, 0.0, 1.0);
}

bool SimplexPoint::interior() const {
  if (last_ <= 0.0) return false;
  return std::all_of(coords_.begin(), coords_.end(), [](double c) { return c > 0.0; });
}

Bandwidth::Bandwidth(double b) : b_(b) {
  if (!(b > 0.0) || !std::isfinite(b)) {
    std::ostringstream os;
    os << "bandwidth must be positive and finite, got " << b;
    throw DomainError(os.str());
  }
}

void DirichletParams::validate() const {
  if (alpha.empty()) throw DomainError("Dirichlet: alpha must be non-empty");
  for (double a : alpha)
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("Dirichlet: alpha_i must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("Dirichlet: beta must be positive");
}

double log_gamma(double x) {
  return boost::math::lgamma(x);
}

DirichletDensity::DirichletDensity(const DirichletParams& params) {
  params.validate();
  const std::size_t d = params.alpha.size();
  exponents_.resize(d + 1);
  double total = params.beta;
  double denom = log_gamma(params.beta);
  for (std::size_t i = 0; i < d; ++i) {
    exponents_[i] = params.alpha[i] - 1.0;
    total += params.alpha[i];
    denom += log_gamma(params.alpha[i]);
  }
  exponents_[d] = params.beta - 1.0;
  log_norm_ = log_gamma(total) - denom;
}

double DirichletDensity::log_pdf(const SimplexPoint& x) const {
  if (x.dim() != dim()) throw DomainError("Dirichlet: dimension mismatch");
  double acc = log_norm_;
  for (std::size_t i = 0; i <= dim(); ++i) {
    const double e = exponents_[i];
    const double xi = x.full(i);
    if (e == 0.0) continue;
    if (xi == 0.0) {
      if (e < 0.0) throw PoleError("Dirichlet: negative exponent at a zero coordinate");
      return -std::numeric_limits<double>::infinity();
    }
    acc += e * std::log(xi);
  }
  return acc;
}

double log_dirichlet_density(const DirichletParams& p, const SimplexPoint& x) {
  return DirichletDensity(p).log_pdf(x);
}

DirichletParams kernel_params(const SimplexPoint& s, Bandwidth b) {
  DirichletParams p;
  p.alpha.resize(s.dim());
  for (std::size_t i = 0; i < s.dim(); ++i) p.alpha[i] = s[i] / b.value() + 1.0;
  p.beta = s.last() / b.value() + 1.0;
  return p;
}

DirichletDensity make_kernel(const SimplexPoint& s, Bandwidth b) {
  return DirichletDensity(kernel_params(s, b));
}

double log_kappa(const SimplexPoint& s, Bandwidth b, const SimplexPoint& x) {
  if (s.dim() != x.dim()) throw DomainError("kappa: dimension mismatch");
  return make_kernel(s, b).log_pdf(x);
}

double kappa(const SimplexPoint& s, Bandwidth b, const SimplexPoint& x) {
  return std::exp(log_kappa(s, b, x));
}

double global_bound(std::size_t d, Bandwidth b) {
  double prod = 1.0;
  for (std::size_t k = 1; k <= d; ++k) prod *= 1.0 / b.value() + static_cast<double>(k);
  return prod;
}

double kappa_gradient_coordinate(const SimplexPoint& s, Bandwidth b, const SimplexPoint& x,
                                 std::size_t k) {
  const std::size_t d = s.dim();
  if (x.dim() != d) throw DomainError("kappa gradient: dimension mismatch");
  if (k >= d) throw ArgumentError("kappa gradient: coordinate index out of range");
  if (!(s[k] > 0.0) || !(s.last() > 0.0))
    throw DomainError("kappa gradient: shifted Dirichlet parameters must stay positive");

  DirichletParams base = kernel_params(s, b);
  DirichletParams lowered_k = base;
  lowered_k.alpha[k] -= 1.0;
  DirichletParams lowered_last = base;
  lowered_last.beta -= 1.0;

  const double scale = 1.0 / b.value() + static_cast<double>(d);
  return scale * (std::exp(DirichletDensity(lowered_k).log_pdf(x)) -
                  std::exp(DirichletDensity(lowered_last).log_pdf(x)));
}

}  // namespace dkreg
