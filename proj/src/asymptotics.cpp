#include "dkreg/asymptotics.hpp"

#include "dkreg/errors.hpp"

#include <cmath>
#include <numbers>

namespace dkreg {

namespace {

constexpr double kZeroBias = 1e-12;

SimplexPoint shifted(const SimplexPoint& s, std::size_t i, double t) {
  std::vector<double> c(s.coords().begin(), s.coords().end());
  c[i] += t;
  return SimplexPoint(std::move(c));
}

// d/dt F(s + t e_i) at t = 0, where moving along e_i trades s_i against
// s_{d+1}. Central where the stencil fits, one-sided second order otherwise.
template <class F>
std::vector<double> axis_derivative(const F& f, const SimplexPoint& s, std::size_t i, double h) {
  const double room_down = s[i], room_up = s.last();
  std::vector<double> out;
  auto combine = [&](double c0, const std::vector<double>& a, double c1,
                     const std::vector<double>& b, double c2, const std::vector<double>& c) {
    out.resize(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = (c0 * a[k] + c1 * b[k] + c2 * c[k]) / (2.0 * h);
  };
  if (room_down >= h && room_up >= h) {
    const auto fp = f(shifted(s, i, h)), fm = f(shifted(s, i, -h));
    combine(1.0, fp, -1.0, fm, 0.0, fp);
  } else if (room_up >= 2.0 * h) {
    combine(-3.0, f(s), 4.0, f(shifted(s, i, h)), -1.0, f(shifted(s, i, 2.0 * h)));
  } else if (room_down >= 2.0 * h) {
    combine(3.0, f(s), -4.0, f(shifted(s, i, -h)), 1.0, f(shifted(s, i, -2.0 * h)));
  } else {
    throw DomainError("finite differences: stencil does not fit inside the simplex");
  }
  return out;
}

double gamma_factor(double lambda) {
  // Gamma(2l+1) / (2^{2l+1} Gamma(l+1)^2), in log space.
  return std::exp(log_gamma(2.0 * lambda + 1.0) - (2.0 * lambda + 1.0) * std::numbers::ln2 -
                  2.0 * log_gamma(lambda + 1.0));
}

double variance_constant(const SimplexPoint& s, const VarianceProfile& profile) {
  const double f = profile.design_density(s);
  if (!(f > 0.0)) throw DomainError("design density must be positive");
  return psi(s) * profile.sigma2(s) / f;
}

void check_dimension(std::size_t d) {
  if (d < 1 || d > 3) throw ArgumentError("optimal bandwidth formulas require d in {1, 2, 3}");
}

}  // namespace

TargetFunction with_finite_differences(TargetFunction m, double h) {
  if (!(h > 0.0)) throw ArgumentError("finite-difference step must be positive");
  if (!m.value) throw MissingDerivativesError("target function has no value callback");
  if (!m.gradient) {
    auto value = m.value;
    m.gradient = [value, h](const SimplexPoint& s) {
      auto f = [&](const SimplexPoint& p) { return std::vector<double>{value(p)}; };
      Gradient g(s.dim());
      for (std::size_t i = 0; i < s.dim(); ++i) g[i] = axis_derivative(f, s, i, h)[0];
      return g;
    };
  }
  if (!m.hessian) {
    auto gradient = m.gradient;
    const double hh = 10.0 * h;
    m.hessian = [gradient, hh](const SimplexPoint& s) {
      const std::size_t d = s.dim();
      Hessian H(d * d);
      for (std::size_t i = 0; i < d; ++i) {
        const auto col = axis_derivative(gradient, s, i, hh);
        for (std::size_t j = 0; j < d; ++j) H[j * d + i] = col[j];
      }
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
          const double avg = 0.5 * (H[i * d + j] + H[j * d + i]);
          H[i * d + j] = H[j * d + i] = avg;
        }
      return H;
    };
  }
  return m;
}

VarianceProfile VarianceProfile::homoscedastic_uniform(double sigma2, std::size_t dim) {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw ArgumentError("sigma2 must be finite and >= 0");
  const double f = std::tgamma(static_cast<double>(dim) + 1.0);
  return {[sigma2](const SimplexPoint&) { return sigma2; }, [f](const SimplexPoint&) { return f; }};
}

bool VarianceProfile::satisfies_bounds(double sigma0_sq, double f0, std::size_t dim,
                                       int resolution) const {
  if (dim != 2) throw ArgumentError("satisfies_bounds: only d = 2 grids are implemented");
  for (int i = 1; i < resolution; ++i)
    for (int j = 1; i + j < resolution; ++j) {
      const SimplexPoint s{double(i) / resolution, double(j) / resolution};
      const double v = sigma2(s), f = design_density(s);
      if (!(v > 0.0 && v <= sigma0_sq && f >= f0)) return false;
    }
  return true;
}

double bias_g(const TargetFunction& m, const SimplexPoint& s) {
  if (!m.has_derivatives())
    throw MissingDerivativesError("bias_g: gradient and Hessian are required "
                                  "(see with_finite_differences)");
  const std::size_t d = s.dim();
  const Gradient grad = m.gradient(s);
  const Hessian H = m.hessian(s);
  if (grad.size() != d || H.size() != d * d)
    throw MismatchError("bias_g: derivative dimensions do not match the point");
  double g = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    g += (1.0 - static_cast<double>(d + 1) * s[i]) * grad[i];
    for (std::size_t j = 0; j < d; ++j)
      g += 0.5 * s[i] * ((i == j ? 1.0 : 0.0) - s[j]) * H[i * d + j];
  }
  return g;
}

double psi_J(const SimplexPoint& s, const std::vector<std::size_t>& J) {
  const std::size_t d = s.dim();
  std::vector<bool> in_j(d, false);
  for (std::size_t j : J) {
    if (j >= d) throw ArgumentError("psi_J: index outside 0..d-1");
    if (in_j[j]) throw ArgumentError("psi_J: repeated index");
    in_j[j] = true;
  }
  if (!(s.last() > 0.0)) throw BoundaryError("psi_J: s_{d+1} must be positive");
  double prod = s.last();
  for (std::size_t i = 0; i < d; ++i) {
    if (in_j[i]) continue;
    if (!(s[i] > 0.0)) throw BoundaryError("psi_J: coordinate outside J must be positive");
    prod *= s[i];
  }
  const double free = static_cast<double>(d - J.size());
  return 1.0 / std::sqrt(std::pow(4.0 * std::numbers::pi, free) * prod);
}

double variance_leading(const SimplexPoint& s, const std::vector<std::size_t>& J,
                        const std::vector<double>& lambdas, const VarianceProfile& profile,
                        double n, Bandwidth b) {
  const std::size_t d = s.dim();
  if (lambdas.size() != d) throw MismatchError("variance_leading: lambdas must have length d");
  if (!(n > 0.0)) throw ArgumentError("variance_leading: n must be positive");
  double factor = 1.0;
  for (std::size_t j : J) {
    if (j >= d) throw ArgumentError("variance_leading: index outside 0..d-1");
    if (!(lambdas[j] >= 2.0)) throw ArgumentError("variance_leading: lambda_i >= 2 required on J");
    factor *= gamma_factor(lambdas[j]);
  }
  const double f = profile.design_density(s);
  if (!(f > 0.0)) throw DomainError("design density must be positive");
  const double rate = std::pow(b.value(), -0.5 * static_cast<double>(d + J.size())) / n;
  return rate * psi_J(s, J) * profile.sigma2(s) / f * factor;
}

double mse_expansion(double b, double bias_sq, double variance_const, double n, std::size_t d) {
  return b * b * bias_sq + std::pow(b, -0.5 * static_cast<double>(d)) * variance_const / n;
}

OptimalBandwidth optimal_bandwidth(double bias_sq, double variance_const, double n, std::size_t d) {
  check_dimension(d);
  if (!(bias_sq > 0.0)) throw ZeroBiasError("optimal bandwidth: squared bias constant is zero");
  if (!(variance_const > 0.0) || !(n > 0.0))
    throw ArgumentError("optimal bandwidth: variance constant and n must be positive");
  const double dd = static_cast<double>(d);
  const double p = 2.0 / (dd + 4.0);
  const double b = std::pow(n, -p) * std::pow(dd / 4.0 * variance_const / bias_sq, p);
  const double err = std::pow(n, -4.0 / (dd + 4.0)) * (1.0 + dd / 4.0) /
                     std::pow(dd / 4.0, dd / (dd + 4.0)) *
                     std::pow(variance_const, 4.0 / (dd + 4.0)) *
                     std::pow(bias_sq, dd / (dd + 4.0));
  return {b, err, bias_sq, variance_const, true};
}

OptimalBandwidth mse_opt_bandwidth(const SimplexPoint& s, const TargetFunction& m,
                                   const VarianceProfile& profile, double n) {
  check_dimension(s.dim());
  const double g = bias_g(m, s);
  if (std::abs(g) <= kZeroBias) throw ZeroBiasError("mse_opt_bandwidth: g(s) vanishes");
  return optimal_bandwidth(g * g, variance_constant(s, profile), n, s.dim());
}

OptimalBandwidth mise_opt_bandwidth(const TargetFunction& m, const VarianceProfile& profile,
                                    const CubatureConfig& cfg, double n, double shrink) {
  const std::size_t d = m.dim;
  check_dimension(d);
  const auto bias = integrate_simplex(
      [&](const SimplexPoint& s) {
        const double g = bias_g(m, s);
        return g * g;
      },
      d, cfg, shrink);
  if (!(bias.value > 0.0) || bias.value < 1e-300)
    throw ZeroBiasError("mise_opt_bandwidth: integral of g^2 vanishes");
  const auto var = integrate_simplex(
      [&](const SimplexPoint& s) { return variance_constant(s, profile); }, d, cfg, shrink);
  OptimalBandwidth out = optimal_bandwidth(bias.value, var.value, n, d);
  out.converged = bias.converged && var.converged;
  return out;
}

double clt_standardize(double estimate, const SimplexPoint& s, const TargetFunction& m,
                       const VarianceProfile& profile, double n, Bandwidth b) {
  const double v = variance_constant(s, profile);
  if (!(v > 0.0)) throw DomainError("clt_standardize: sigma^2(s) must be positive");
  const double d = static_cast<double>(s.dim());
  return std::sqrt(n) * std::pow(b.value(), d / 4.0) * (estimate - m(s)) / std::sqrt(v);
}

}  // namespace dkreg
