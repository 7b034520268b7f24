#include "dkreg/simulation.hpp"

#include "dkreg/errors.hpp"
#include "dkreg/parallel.hpp"
#include "dkreg/rng.hpp"
#include "dkreg/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace dkreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kReportScale = 1e7;

// Stream tags for derive_seed.
constexpr std::uint64_t kSampleStream = 1, kNoiseStream = 2, kCltStream = 3;

TargetFunction make(std::string label, std::function<double(double, double)> v,
                    std::function<Gradient(double, double)> g,
                    std::function<Hessian(double, double)> h) {
  TargetFunction m;
  m.label = std::move(label);
  m.value = [v](const SimplexPoint& s) { return v(s[0], s[1]); };
  m.gradient = [g](const SimplexPoint& s) { return g(s[0], s[1]); };
  m.hessian = [h](const SimplexPoint& s) { return h(s[0], s[1]); };
  m.dim = 2;
  return m;
}

std::uint64_t function_key(std::string_view id) {
  const auto ids = target_function_ids();
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return i + 1;
  throw UnknownFunctionError("unknown target function '" + std::string(id) + "'");
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// GM weights at every (grid bandwidth, sample point), reused by all target
// functions of one replication since they depend on neither m nor Y.
class GmWeightTable {
public:
  GmWeightTable(const SimplexPartition& partition, const std::vector<double>& grid,
                const std::vector<SimplexPoint>& sample, const CubatureConfig& cfg)
      : grid_(grid), n_(partition.size()), m_(sample.size()) {
    data_.resize(grid.size() * m_ * n_);
    for (std::size_t bi = 0; bi < grid.size(); ++bi)
      for (std::size_t u = 0; u < m_; ++u) {
        const GmWeights w = gm_weights(partition, Bandwidth(grid[bi]), sample[u], cfg);
        std::copy(w.weights.begin(), w.weights.end(), data_.begin() + offset(bi, u));
      }
  }

  std::optional<std::size_t> index_of(double b) const {
    const auto it = std::lower_bound(grid_.begin(), grid_.end(), b);
    if (it != grid_.end() && *it == b) return static_cast<std::size_t>(it - grid_.begin());
    return std::nullopt;
  }

  // Mirrors lscv(GmSmoother, ...) term by term so the two agree exactly.
  double lscv(std::size_t bi, const Design& design, const TargetFunction& m,
              const std::vector<SimplexPoint>& sample) const {
    double ss = 0.0;
    for (std::size_t u = 0; u < m_; ++u) {
      const double* w = &data_[offset(bi, u)];
      double acc = 0.0;
      for (std::size_t i = 0; i < n_; ++i) acc += w[i] * design.responses[i];
      const double r = acc - m(sample[u]);
      ss += r * r;
    }
    return ss / (static_cast<double>(m_) * 2.0);
  }

private:
  std::size_t offset(std::size_t bi, std::size_t u) const { return (bi * m_ + u) * n_; }

  std::vector<double> grid_;
  std::size_t n_, m_;
  std::vector<double> data_;
};

struct Slot {
  double ise = kNaN;
  double b_hat = kNaN;
  double seconds = 0.0;
};

}  // namespace

std::vector<std::string> target_function_ids() { return {"m1", "m2", "m3", "m4", "m5", "m6"}; }

TargetFunction target_function(std::string_view id) {
  if (id == "m1")
    return make(
        "m1", [](double x, double y) { return std::log1p(x + y); },
        [](double x, double y) {
          const double t = 1.0 / (1.0 + x + y);
          return Gradient{t, t};
        },
        [](double x, double y) {
          const double t = -1.0 / ((1.0 + x + y) * (1.0 + x + y));
          return Hessian{t, t, t, t};
        });
  if (id == "m2")
    return make(
        "m2", [](double x, double y) { return std::sin(x) + std::cos(y); },
        [](double x, double y) { return Gradient{std::cos(x), -std::sin(y)}; },
        [](double x, double y) { return Hessian{-std::sin(x), 0.0, 0.0, -std::cos(y)}; });
  if (id == "m3")
    return make(
        "m3", [](double x, double y) { return std::sqrt(x) + std::sqrt(y); },
        [](double x, double y) { return Gradient{0.5 / std::sqrt(x), 0.5 / std::sqrt(y)}; },
        [](double x, double y) {
          return Hessian{-0.25 / (x * std::sqrt(x)), 0.0, 0.0, -0.25 / (y * std::sqrt(y))};
        });
  if (id == "m4")
    return make(
        "m4", [](double x, double y) { return x * (1.0 + y); },
        [](double x, double y) { return Gradient{1.0 + y, x}; },
        [](double, double) { return Hessian{0.0, 1.0, 1.0, 0.0}; });
  if (id == "m5")
    return make(
        "m5",
        [](double x, double y) { return (x + 0.25) * (x + 0.25) + (y + 0.75) * (y + 0.75); },
        [](double x, double y) { return Gradient{2.0 * (x + 0.25), 2.0 * (y + 0.75)}; },
        [](double, double) { return Hessian{2.0, 0.0, 0.0, 2.0}; });
  if (id == "m6")
    return make(
        "m6", [](double x, double y) { return (1.0 + x) * std::exp(y); },
        [](double x, double y) { return Gradient{std::exp(y), (1.0 + x) * std::exp(y)}; },
        [](double x, double y) {
          const double e = std::exp(y);
          return Hessian{0.0, e, e, (1.0 + x) * e};
        });
  throw UnknownFunctionError("unknown target function '" + std::string(id) + "' (expected m1..m6)");
}

std::string_view to_string(NoiseScale scale) {
  return scale == NoiseScale::Variance ? "variance" : "sd";
}

NoiseScale parse_noise_scale(std::string_view name) {
  if (name == "variance" || name == "var") return NoiseScale::Variance;
  if (name == "sd") return NoiseScale::StandardDeviation;
  throw ArgumentError("noise scale must be 'variance' or 'sd'");
}

double iqr_noise_variance(const TargetFunction& m, const std::vector<SimplexPoint>& points,
                          NoiseScale scale, bool* degenerate) {
  if (points.size() < 2) throw ArgumentError("noise model: at least two design points are required");
  std::vector<double> values;
  values.reserve(points.size());
  for (const auto& p : points) values.push_back(m(p));
  const double iqr = stats::iqr(values);
  if (degenerate) *degenerate = !(iqr > 0.0);
  if (!(iqr > 0.0)) return 0.0;
  const double c = iqr / 10.0;
  return scale == NoiseScale::Variance ? c : c * c;
}

GeneratedDesign generate_responses(const TargetFunction& m, const std::vector<SimplexPoint>& points,
                                   std::uint64_t seed, const NoiseOptions& noise) {
  GeneratedDesign out;
  out.noise_variance = iqr_noise_variance(m, points, noise.scale, &out.degenerate_iqr);
  if (noise.zero_noise) out.noise_variance = 0.0;
  const double sd = std::sqrt(out.noise_variance);
  Rng rng(seed);
  out.design.points = points;
  out.design.responses.reserve(points.size());
  for (const auto& p : points) {
    const double e = rng.normal();
    out.design.responses.push_back(m(p) + sd * e);
  }
  return out;
}

CriterionValue ise_tilde(const Smoother& smoother, const TargetFunction& m,
                         const std::vector<SimplexPoint>& sample, Bandwidth b) {
  if (!sample.empty() && sample.front().dim() != 2)
    throw DomainError("ise_tilde: defined for d = 2");
  return lscv(smoother, m, sample, b);
}

void StudyConfig::validate() const {
  if (replications < 1) throw ArgumentError("study: replications must be >= 1");
  if (functions.empty() || k_values.empty() || methods.empty())
    throw ArgumentError("study: functions, k values and methods must be non-empty");
  for (const auto& f : functions) function_key(f);
  for (int k : k_values)
    if (k < 2) throw ArgumentError("study: k must be >= 2");
  if (lscv_sample_size < 1) throw ArgumentError("study: LSCV sample size must be >= 1");
  cubature.validate();
  search.validate();
}

std::vector<StudyResult> run_study(const StudyConfig& cfg) {
  cfg.validate();
  const std::size_t F = cfg.functions.size(), K = cfg.k_values.size(), M = cfg.methods.size();
  const auto R = static_cast<std::size_t>(cfg.replications);
  std::vector<TargetFunction> fns;
  for (const auto& id : cfg.functions) fns.push_back(target_function(id));
  const bool need_gm = std::find(cfg.methods.begin(), cfg.methods.end(), Method::GM) != cfg.methods.end();

  // slots[((f * K + k) * M + m) * R + r]
  std::vector<Slot> slots(F * K * M * R);
  auto slot = [&](std::size_t f, std::size_t k, std::size_t m, std::size_t r) -> Slot& {
    return slots[((f * K + k) * M + m) * R + r];
  };

  for (std::size_t ki = 0; ki < K; ++ki) {
    const int k = cfg.k_values[ki];
    const auto points = mesh_design_points(k);
    std::optional<SimplexPartition> partition;
    if (need_gm) partition = voronoi_partition(points);

    parallel_for(R, resolve_threads(cfg.threads), [&](std::size_t r) {
      const auto sample = uniform_simplex_sample(
          cfg.lscv_sample_size, derive_seed(cfg.seed, {kSampleStream, std::uint64_t(k), r}));
      std::optional<GmWeightTable> table;
      double table_seconds = 0.0;
      if (need_gm) {
        const auto t0 = std::chrono::steady_clock::now();
        table.emplace(*partition, cfg.search.grid, sample, cfg.cubature);
        table_seconds = elapsed_since(t0) / static_cast<double>(F);
      }
      for (std::size_t fi = 0; fi < F; ++fi) {
        const TargetFunction& m = fns[fi];
        const auto seed = derive_seed(
            cfg.seed, {kNoiseStream, std::uint64_t(k), r, function_key(cfg.functions[fi])});
        const GeneratedDesign gd = generate_responses(m, points, seed, cfg.noise);
        for (std::size_t mi = 0; mi < M; ++mi) {
          Slot& out = slot(fi, ki, mi, r);
          const auto t0 = std::chrono::steady_clock::now();
          try {
            const auto smoother =
                make_smoother(cfg.methods[mi], gd.design, partition ? &*partition : nullptr, cfg.cubature);
            BandwidthObjective objective;
            if (cfg.methods[mi] == Method::GM) {
              objective = [&](Bandwidth b) {
                if (auto bi = table->index_of(b.value())) return table->lscv(*bi, gd.design, m, sample);
                return lscv(*smoother, m, sample, b).value;
              };
            } else {
              objective = [&](Bandwidth b) { return lscv(*smoother, m, sample, b).value; };
            }
            const BandwidthChoice choice = minimize_bandwidth(objective, cfg.search);
            // ISE on the LSCV sample at the selected bandwidth.
            out.ise = choice.value;
            out.b_hat = choice.b_hat;
          } catch (const Error&) {
            out.ise = kNaN;
          }
          out.seconds = elapsed_since(t0) + (cfg.methods[mi] == Method::GM ? table_seconds : 0.0);
        }
      }
    });
  }

  std::vector<StudyResult> rows;
  for (std::size_t fi = 0; fi < F; ++fi)
    for (std::size_t ki = 0; ki < K; ++ki)
      for (std::size_t mi = 0; mi < M; ++mi) {
        StudyResult row;
        row.function = cfg.functions[fi];
        row.n = cfg.k_values[ki] * (cfg.k_values[ki] + 1) / 2;
        row.method = cfg.methods[mi];
        std::vector<double> scaled;
        for (std::size_t r = 0; r < R; ++r) {
          const Slot& s = slot(fi, ki, mi, r);
          row.ise.push_back(s.ise);
          row.b_hat.push_back(s.b_hat);
          row.elapsed_seconds += s.seconds;
          if (std::isnan(s.ise)) {
            ++row.failures;
          } else {
            scaled.push_back(s.ise * kReportScale);
          }
        }
        row.replications = static_cast<int>(scaled.size());
        row.invalid = row.failures * 10 > cfg.replications;
        if (!scaled.empty()) {
          row.mean = stats::mean(scaled);
          row.sd = stats::sd(scaled);
          row.median = stats::median(scaled);
          row.iqr = stats::iqr(scaled);
        } else {
          row.mean = row.sd = row.median = row.iqr = kNaN;
        }
        rows.push_back(std::move(row));
      }
  std::stable_sort(rows.begin(), rows.end(), [](const StudyResult& a, const StudyResult& b) {
    if (a.function != b.function) return a.function < b.function;
    if (a.n != b.n) return a.n < b.n;
    return static_cast<int>(a.method) < static_cast<int>(b.method);
  });
  return rows;
}

std::string format_study_csv(const std::vector<StudyResult>& rows) {
  std::ostringstream os;
  os << "function,n,method,mean,sd,median,iqr,replications,failures,invalid\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%s,%.6g,%.6g,%.6g,%.6g,%d,%d,%d\n", r.function.c_str(),
                  r.n, std::string(to_string(r.method)).c_str(), r.mean, r.sd, r.median, r.iqr,
                  r.replications, r.failures, r.invalid ? 1 : 0);
    os << buf;
  }
  return os.str();
}

std::string format_study_table(const std::vector<StudyResult>& rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %5s %-6s %10s %10s %10s %10s\n", "Function", "n", "Method",
                "Mean", "SD", "Median", "IQR");
  os << buf;
  std::string last_group;
  for (const auto& r : rows) {
    const std::string group = r.function + "/" + std::to_string(r.n);
    if (!last_group.empty() && group != last_group) os << '\n';
    last_group = group;
    std::snprintf(buf, sizeof buf, "%-8s %5d %-6s %10.1f %10.1f %10.1f %10.1f%s\n",
                  r.function.c_str(), r.n, std::string(to_string(r.method)).c_str(), r.mean, r.sd,
                  r.median, r.iqr, r.invalid ? "  (invalid: too many failures)" : "");
    os << buf;
  }
  os << "(ISE values multiplied by 1e7)\n";
  return os.str();
}

CltResult clt_study(Method method, const TargetFunction& m, const SimplexPoint& s, int k,
                    Bandwidth b, int replications, std::uint64_t seed, const CubatureConfig& cfg,
                    const NoiseOptions& noise) {
  if (method != Method::GM) throw ArgumentError("clt_study: only the GM estimator is supported");
  if (replications < 2) throw ArgumentError("clt_study: at least two replications are required");
  if (!s.interior()) throw DomainError("clt_study: s must be an interior point");
  const auto points = mesh_design_points(k);
  const auto partition = voronoi_partition(points);
  const GmWeights w = gm_weights(partition, b, s, cfg);
  const double n = static_cast<double>(points.size());

  CltResult out;
  out.noise_variance = iqr_noise_variance(m, points, noise.scale);
  if (noise.zero_noise || !(out.noise_variance > 0.0))
    throw ArgumentError("clt_study: the noise variance must be positive");
  const VarianceProfile profile = VarianceProfile::homoscedastic_uniform(out.noise_variance, 2);

  for (int r = 0; r < replications; ++r) {
    const GeneratedDesign gd = generate_responses(
        m, points, derive_seed(seed, {kCltStream, std::uint64_t(k), std::uint64_t(r)}), noise);
    double est = 0.0;
    for (std::size_t i = 0; i < w.weights.size(); ++i) est += w.weights[i] * gd.design.responses[i];
    out.estimates.push_back(est);
    out.standardized.push_back(clt_standardize(est, s, m, profile, n, b));
  }
  const double centre = stats::mean(out.standardized);
  for (auto& z : out.standardized) z -= centre;
  out.ks_statistic = stats::ks_standard_normal(out.standardized);
  out.empirical_variance = stats::variance(out.estimates);
  out.predicted_variance = variance_leading(s, {}, std::vector<double>(2, 2.0), profile, n, b);
  return out;
}

}  // namespace dkreg
