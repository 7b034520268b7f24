#include "dkreg/estimators.hpp"

#include "dkreg/errors.hpp"
#include "dkreg/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace dkreg {

namespace {

constexpr double kSingularRcond = 1e-10;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

void Design::validate() const {
  if (points.size() != responses.size())
    throw MismatchError("design: points and responses differ in length");
  if (points.empty()) throw ArgumentError("design: at least one point is required");
  const std::size_t d = points.front().dim();
  for (const auto& p : points)
    if (p.dim() != d) throw MismatchError("design: points of mixed dimension");
  for (double y : responses)
    if (!std::isfinite(y)) throw DomainError("design: responses must be finite");
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::GM: return "GM";
    case Method::NW: return "NW";
    case Method::LL: return "LL";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string up(name);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "GM") return Method::GM;
  if (up == "NW") return Method::NW;
  if (up == "LL") return Method::LL;
  throw ArgumentError("unknown method '" + std::string(name) + "' (expected GM, NW or LL)");
}

double GmWeights::sum() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

GmWeights gm_weights(const SimplexPartition& partition, Bandwidth b, const SimplexPoint& s,
                     const CubatureConfig& cfg, GmWorkStats* stats) {
  if (s.dim() != 2) throw DomainError("GM estimator is implemented for d = 2");
  cfg.validate();
  const DirichletDensity kernel = make_kernel(s, b);
  const auto e = kernel.exponents();

  // Kernel spread: smallest marginal standard deviation of the Dirichlet.
  double alpha0 = 0.0;
  for (double ei : e) alpha0 += ei + 1.0;
  double min_var = std::numeric_limits<double>::infinity();
  for (double ei : e) {
    const double a = ei + 1.0;
    min_var = std::min(min_var, a * (alpha0 - a) / (alpha0 * alpha0 * (alpha0 + 1.0)));
  }
  const ResolutionHint hint{to_vec2(s), 2.0 * std::sqrt(min_var)};
  const double log_prune = std::log(cfg.absolute_floor * 1e-2);

  auto integrand = [&kernel](double x, double y) { return std::exp(kernel.log_pdf2(x, y)); };

  GmWeights out;
  out.weights.assign(partition.size(), 0.0);
  out.tolerance_used = cfg.relative_tolerance;
  for (std::size_t i = 0; i < partition.size(); ++i) {
    const ConvexCell& cell = partition[i];
    const double x1 = cell.site()[0], x2 = cell.site()[1], x3 = cell.site().last();
    // Tangent plane of the concave log-kernel at the site bounds it above.
    const double h0 = kernel.log_pdf2(x1, x2);
    const double g1 = (e[0] == 0.0 ? 0.0 : e[0] / x1) - (e[2] == 0.0 ? 0.0 : e[2] / x3);
    const double g2 = (e[1] == 0.0 ? 0.0 : e[1] / x2) - (e[2] == 0.0 ? 0.0 : e[2] / x3);
    double rise = 0.0;
    for (const auto& v : cell.vertices()) rise = std::max(rise, g1 * (v.x - x1) + g2 * (v.y - x2));
    if (h0 + rise + std::log(cell_area(cell)) < log_prune) {
      if (stats) ++stats->pruned_cells;
      continue;
    }
    const CubatureResult r = integrate_polygon_fast(integrand, cell.vertices(), cfg, hint);
    out.weights[i] = r.value;
    if (!r.converged) out.flagged_cells.push_back(i);
    if (stats) stats->evaluations += r.evaluations;
  }
  return out;
}

PointEstimate gm_estimate(const Design& design, const SimplexPartition& partition, Bandwidth b,
                          const SimplexPoint& s, const CubatureConfig& cfg) {
  return GmSmoother(design, partition, cfg).estimate(s, b);
}

double nw_estimate(const Design& design, Bandwidth b, const SimplexPoint& s) {
  return NwSmoother(design).estimate(s, b).value;
}

PointEstimate ll_estimate(const Design& design, Bandwidth b, const SimplexPoint& s) {
  return LlSmoother(design).estimate(s, b);
}

// ---------------------------------------------------------------------------

NwSmoother::NwSmoother(const Design& design) : design_(design) {
  design.validate();
  const std::size_t n = design.size(), d = design.dim();
  log_coords_.resize(n * (d + 1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= d; ++j) {
      const double x = design.points[i].full(j);
      log_coords_[i * (d + 1) + j] = x > 0.0 ? std::log(x) : kNegInf;
    }
}

bool NwSmoother::weights(const SimplexPoint& s, Bandwidth b, std::vector<double>& w,
                         std::optional<std::size_t> exclude) const {
  const std::size_t n = design_.size(), d = design_.dim();
  if (s.dim() != d) throw DomainError("estimate: evaluation point dimension differs from design");
  // Only differences of log weights matter, so the normaliser is dropped.
  std::vector<double> e(d + 1);
  for (std::size_t j = 0; j < d; ++j) e[j] = s[j] / b.value();
  e[d] = s.last() / b.value();

  w.resize(n);
  double top = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    if (exclude && *exclude == i) {
      w[i] = kNegInf;
      continue;
    }
    const double* lc = &log_coords_[i * (d + 1)];
    double acc = 0.0;
    for (std::size_t j = 0; j <= d; ++j)
      if (e[j] != 0.0) acc += e[j] * lc[j];
    w[i] = acc;
    top = std::max(top, acc);
  }
  if (top == kNegInf || std::isnan(top)) return false;
  for (auto& wi : w) wi = std::exp(wi - top);
  return true;
}

double NwSmoother::nw_from_weights(const std::vector<double>& w,
                                   std::optional<std::size_t> exclude) const {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (exclude && *exclude == i) continue;
    num += w[i] * design_.responses[i];
    den += w[i];
  }
  return num / den;
}

PointEstimate NwSmoother::estimate(const SimplexPoint& s, Bandwidth b) const {
  std::vector<double> w;
  if (!weights(s, b, w, std::nullopt))
    throw AllWeightsVanishedError("NW: every kernel weight vanished at the evaluation point");
  return {nw_from_weights(w, std::nullopt), false, 0};
}

LlSmoother::LlSmoother(const Design& design) : nw_(design) {
  if (design.size() < design.dim() + 1)
    throw InsufficientDataError("LL: at least d + 1 design points are required");
}

PointEstimate LlSmoother::estimate(const SimplexPoint& s, Bandwidth b) const {
  return estimate_excluding(s, b, std::nullopt);
}

PointEstimate LlSmoother::estimate_excluding(const SimplexPoint& s, Bandwidth b,
                                             std::optional<std::size_t> exclude) const {
  const Design& design = nw_.design_;
  const std::size_t n = design.size(), d = design.dim(), p = d + 1;
  if (n - (exclude ? 1 : 0) < p) throw InsufficientDataError("LL: too few design points");
  std::vector<double> w;
  if (!nw_.weights(s, b, w, exclude))
    throw AllWeightsVanishedError("LL: every kernel weight vanished at the evaluation point");

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  Eigen::VectorXd z(static_cast<Eigen::Index>(p));
  z(0) = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if ((exclude && *exclude == i) || w[i] == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) z(static_cast<Eigen::Index>(j + 1)) = design.points[i][j] - s[j];
    m.selfadjointView<Eigen::Lower>().rankUpdate(z, w[i]);
    r += (w[i] * design.responses[i]) * z;
  }
  m = m.selfadjointView<Eigen::Lower>();

  // Jacobi equilibration before judging conditioning.
  Eigen::VectorXd scale(static_cast<Eigen::Index>(p));
  bool singular = false;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j) {
    if (!(m(j, j) > 0.0)) {
      singular = true;
      break;
    }
    scale(j) = 1.0 / std::sqrt(m(j, j));
  }
  if (!singular) {
    const Eigen::MatrixXd a = scale.asDiagonal() * m * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    const double rcond = ev.minCoeff() / ev.maxCoeff();
    if (!(rcond >= kSingularRcond)) {
      singular = true;
    } else {
      const Eigen::VectorXd y = a.ldlt().solve(scale.asDiagonal() * r);
      return {scale(0) * y(0), false, 0};
    }
  }
  return {nw_.nw_from_weights(w, exclude), true, 0};
}

GmSmoother::GmSmoother(const Design& design, const SimplexPartition& partition, CubatureConfig cfg)
    : design_(design), partition_(partition), cfg_(cfg) {
  design.validate();
  cfg_.validate();
  if (partition.size() != design.size())
    throw MismatchError("GM: partition and design differ in length");
  for (std::size_t i = 0; i < design.size(); ++i) {
    const auto& site = partition[i].site();
    if (std::abs(site[0] - design.points[i][0]) > 1e-12 ||
        std::abs(site[1] - design.points[i][1]) > 1e-12)
      throw MismatchError("GM: partition sites are not index-aligned with design points");
  }
}

PointEstimate GmSmoother::estimate(const SimplexPoint& s, Bandwidth b) const {
  const GmWeights w = gm_weights(partition_, b, s, cfg_);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.weights.size(); ++i) acc += w.weights[i] * design_.responses[i];
  return {acc, false, w.flagged_cells.size()};
}

std::unique_ptr<Smoother> make_smoother(Method method, const Design& design,
                                        const SimplexPartition* partition,
                                        const CubatureConfig& cfg) {
  switch (method) {
    case Method::GM:
      if (!partition) throw ArgumentError("GM requires a partition of the simplex");
      return std::make_unique<GmSmoother>(design, *partition, cfg);
    case Method::NW:
      return std::make_unique<NwSmoother>(design);
    case Method::LL:
      return std::make_unique<LlSmoother>(design);
  }
  throw ArgumentError("unknown method");
}

BatchResult batch_estimate(const Smoother& smoother, Bandwidth b,
                           const std::vector<SimplexPoint>& eval_points, unsigned threads) {
  const std::size_t n = eval_points.size();
  BatchResult out;
  out.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<PointEstimate> est(n);
  std::vector<std::string> errors(n);
  std::vector<char> failed(n, 0);
  parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
    try {
      est[i] = smoother.estimate(eval_points[i], b);
    } catch (const Error& ex) {
      failed[i] = 1;
      errors[i] = ex.what();
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i]) {
      out.failures.push_back({i, std::move(errors[i])});
      continue;
    }
    out.values[i] = est[i].value;
    out.ll_fallbacks += est[i].ll_fallback ? 1 : 0;
    out.flagged_cells += est[i].flagged_cells;
  }
  return out;
}

BatchResult batch_estimate(Method method, const Design& design, const SimplexPartition* partition,
                           Bandwidth b, const std::vector<SimplexPoint>& eval_points,
                           const CubatureConfig& cfg, unsigned threads) {
  const auto smoother = make_smoother(method, design, partition, cfg);
  return batch_estimate(*smoother, b, eval_points, threads);
}

}  // namespace dkreg
