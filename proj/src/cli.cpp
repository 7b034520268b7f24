#include "dkreg/cli.hpp"

#include "dkreg/asymptotics.hpp"
#include "dkreg/bandwidth.hpp"
#include "dkreg/composition.hpp"
#include "dkreg/errors.hpp"
#include "dkreg/estimators.hpp"
#include "dkreg/geometry.hpp"
#include "dkreg/rng.hpp"
#include "dkreg/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace dkreg {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_file_atomic(path, text);
}

SimplexPoint parse_point(const std::string& text) {
  std::vector<double> c;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      c.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ArgumentError("invalid point '" + text + "' (expected e.g. 0.2,0.3)");
    }
  }
  if (c.empty()) throw ArgumentError("empty point");
  return SimplexPoint(std::move(c));
}

// Headed numeric CSV; returns rows of the named columns.
std::vector<std::vector<double>> read_columns(const std::string& path,
                                              const std::vector<std::string>& names) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw EmptyDatasetError("'" + path + "' is empty");
  const auto header = split_csv_record(line);
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    auto it = std::find(header.begin(), header.end(), n);
    if (it == header.end()) throw ParseError("'" + path + "': missing column '" + n + "'");
    idx.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::vector<double>> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_record(line);
    if (f.size() != header.size()) throw ParseError("'" + path + "': wrong field count", row);
    std::vector<double> r;
    for (std::size_t i : idx) {
      try {
        std::size_t used = 0;
        r.push_back(std::stod(f[i], &used));
        if (used != f[i].size()) throw std::invalid_argument(f[i]);
      } catch (const std::exception&) {
        throw ParseError("'" + path + "': not a number '" + f[i] + "'", row);
      }
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw EmptyDatasetError("'" + path + "' has no data rows");
  return rows;
}

Design read_design(const std::string& path) {
  Design d;
  for (const auto& r : read_columns(path, {"x1", "x2", "y"})) {
    d.points.emplace_back(std::vector<double>{r[0], r[1]});
    d.responses.push_back(r[2]);
  }
  return d;
}

std::string trace_csv(const BandwidthChoice& c) {
  std::ostringstream os;
  os << "b,value\n";
  for (const auto& t : c.trace) os << fmt(t.b) << ',' << fmt(t.value) << '\n';
  return os.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

CubatureConfig cubature_from(double rtol) {
  CubatureConfig c;
  c.relative_tolerance = rtol;
  c.validate();
  return c;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const EmptyDatasetError*>(&e) ||
      dynamic_cast<const MismatchError*>(&e) || dynamic_cast<const DegenerateSiteError*>(&e) ||
      dynamic_cast<const DomainError*>(&e))
    return kExitData;
  if (dynamic_cast<const ArgumentError*>(&e) || dynamic_cast<const UnknownFunctionError*>(&e))
    return kExitUsage;
  return kExitNumerical;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dirichlet-kernel regression on the simplex"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dkreg 1.0");

  double rtol = 1e-3;
  unsigned threads = 1;
  std::uint64_t seed = 0;

  auto add_rtol = [&](CLI::App* c) {
    c->add_option("--rtol", rtol, "Cubature relative tolerance (GM weights)")->capture_default_str();
  };
  auto add_threads = [&](CLI::App* c) {
    c->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
  };

  // mesh
  auto* mesh = app.add_subcommand("mesh", "Triangular design mesh and its Voronoi partition");
  int mesh_k = 7;
  std::string mesh_points, mesh_voronoi;
  mesh->add_option("--k", mesh_k, "Mesh parameter; n = k(k+1)/2")->required();
  mesh->add_option("--points", mesh_points, "Write design points CSV here (default stdout)");
  mesh->add_option("--voronoi", mesh_voronoi, "Write the Voronoi cells as JSON here");

  // estimate
  auto* est = app.add_subcommand("estimate", "Evaluate an estimator at given points");
  std::string est_method = "LL", est_design, est_points_file, est_output;
  std::vector<std::string> est_at;
  double est_b = 0.0;
  est->add_option("--method", est_method, "GM, NW or LL")->capture_default_str();
  est->add_option("--design", est_design, "CSV with columns x1,x2,y")->required();
  est->add_option("--b", est_b, "Bandwidth")->required();
  est->add_option("--points", est_points_file, "CSV with columns s1,s2");
  est->add_option("--at", est_at, "Evaluation point, e.g. 0.2,0.3 (repeatable)");
  est->add_option("--output", est_output, "Output CSV (default stdout)");
  add_rtol(est);
  add_threads(est);

  // bandwidth
  auto* bw = app.add_subcommand("bandwidth", "LSCV or LOOCV bandwidth selection with trace");
  std::string bw_criterion = "lscv", bw_method = "LL", bw_function = "m1", bw_design, bw_trace;
  std::string bw_noise = "sd";
  int bw_k = 7;
  std::size_t bw_sample = 1000;
  bool bw_zero_noise = false;
  auto* bw_seed = bw->add_option("--seed", seed, "Master seed (required for lscv)");
  bw->add_option("--criterion", bw_criterion, "lscv or loocv")->capture_default_str();
  bw->add_option("--method", bw_method, "Estimator for lscv")->capture_default_str();
  bw->add_option("--function", bw_function, "Target m1..m6 for lscv")->capture_default_str();
  bw->add_option("--k", bw_k, "Mesh parameter for lscv")->capture_default_str();
  bw->add_option("--sample-size", bw_sample, "Uniform LSCV sample size")->capture_default_str();
  bw->add_option("--noise-scale", bw_noise, "variance or sd reading of IQR/10")->capture_default_str();
  bw->add_flag("--zero-noise", bw_zero_noise, "Noiseless responses");
  bw->add_option("--design", bw_design, "CSV with x1,x2,y for loocv");
  bw->add_option("--trace", bw_trace, "Write the (b, value) trace CSV here (default stdout)");
  add_rtol(bw);
  add_threads(bw);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo comparison of GM, NW and LL");
  std::string sim_functions = "m1,m2,m3,m4,m5,m6", sim_k = "7,10,14", sim_methods = "GM,NW,LL";
  std::string sim_format = "table", sim_output, sim_noise = "sd";
  int sim_reps = 100;
  std::size_t sim_sample = 1000;
  bool sim_zero_noise = false;
  sim->add_option("--functions", sim_functions, "Comma-separated subset of m1..m6")->capture_default_str();
  sim->add_option("--k", sim_k, "Comma-separated mesh parameters")->capture_default_str();
  sim->add_option("--methods", sim_methods, "Comma-separated subset of GM,NW,LL")->capture_default_str();
  sim->add_option("--reps", sim_reps, "Replications per cell")->capture_default_str();
  sim->add_option("--seed", seed, "Master seed")->required();
  sim->add_option("--sample-size", sim_sample, "Uniform LSCV sample size")->capture_default_str();
  sim->add_option("--noise-scale", sim_noise, "variance or sd reading of IQR/10")->capture_default_str();
  sim->add_flag("--zero-noise", sim_zero_noise, "Noiseless responses");
  sim->add_option("--format", sim_format, "table or csv")->check(CLI::IsMember({"table", "csv"}));
  sim->add_option("--output", sim_output, "Output file (default stdout)");
  add_rtol(sim);
  add_threads(sim);

  // asymptotics
  auto* asy = app.add_subcommand("asymptotics", "Bias function, psi and optimal bandwidths as JSON");
  std::string asy_function = "m5", asy_s = "0.333333333333,0.333333333333";
  double asy_n = 105, asy_sigma2 = -1.0, asy_b = 0.0;
  asy->add_option("--function", asy_function, "Target m1..m6")->capture_default_str();
  asy->add_option("--s", asy_s, "Point s")->capture_default_str();
  asy->add_option("--n", asy_n, "Sample size")->capture_default_str();
  asy->add_option("--sigma2", asy_sigma2,
                  "Error variance (default: IQR-scaled noise on the matching mesh)");
  asy->add_option("--b", asy_b, "Also report the leading variance at this bandwidth");
  add_rtol(asy);

  // fit
  auto* fit = app.add_subcommand("fit", "LOOCV local linear fit of compositional data to a grid");
  std::string fit_input, fit_output, fit_trace;
  ColumnMap cols;
  int fit_resolution = 50;
  std::size_t fit_synthetic = 0;
  auto* fit_in = fit->add_option("--input", fit_input, "Composition CSV");
  fit->add_option("--synthetic", fit_synthetic, "Use a synthetic dataset of this many rows")
      ->excludes(fit_in);
  fit->add_option("--seed", seed, "Seed for --synthetic");
  fit->add_option("--sand", cols.sand, "Sand column")->capture_default_str();
  fit->add_option("--silt", cols.silt, "Silt column")->capture_default_str();
  fit->add_option("--clay", cols.clay, "Clay column")->capture_default_str();
  fit->add_option("--response", cols.response, "Response column")->capture_default_str();
  fit->add_option("--resolution", fit_resolution, "Grid resolution")->capture_default_str();
  fit->add_option("--output", fit_output, "Grid CSV (default stdout)");
  fit->add_option("--trace", fit_trace, "LOOCV trace CSV");
  add_threads(fit);

  // clt
  auto* clt = app.add_subcommand("clt", "Empirical normality of the standardised GM estimator");
  std::string clt_function = "m1", clt_s = "0.333333333333,0.333333333333", clt_output;
  std::string clt_noise = "sd";
  int clt_k = 14, clt_reps = 500;
  double clt_b = 0.2;
  clt->add_option("--function", clt_function, "Target m1..m6")->capture_default_str();
  clt->add_option("--s", clt_s, "Point s")->capture_default_str();
  clt->add_option("--k", clt_k, "Mesh parameter")->capture_default_str();
  clt->add_option("--b", clt_b, "Bandwidth")->capture_default_str();
  clt->add_option("--reps", clt_reps, "Replications")->capture_default_str();
  clt->add_option("--seed", seed, "Master seed")->required();
  clt->add_option("--noise-scale", clt_noise, "variance or sd reading of IQR/10")->capture_default_str();
  clt->add_option("--output", clt_output, "Write standardised replicates CSV here");
  add_rtol(clt);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*mesh) {
      const auto pts = mesh_design_points(mesh_k);
      std::ostringstream os;
      os << "x1,x2,x3\n";
      for (const auto& p : pts) os << fmt(p[0]) << ',' << fmt(p[1]) << ',' << fmt(p.last()) << '\n';
      emit(os.str(), mesh_points, out);
      if (!mesh_voronoi.empty()) emit(voronoi_partition(pts).to_json() + "\n", mesh_voronoi, out);
      return kExitOk;
    }

    if (*est) {
      const Method method = parse_method(est_method);
      const Design design = read_design(est_design);
      std::vector<SimplexPoint> points;
      if (!est_points_file.empty())
        for (const auto& r : read_columns(est_points_file, {"s1", "s2"}))
          points.emplace_back(std::vector<double>{r[0], r[1]});
      for (const auto& a : est_at) points.push_back(parse_point(a));
      if (points.empty()) throw ArgumentError("estimate: give --points or --at");
      std::optional<SimplexPartition> part;
      if (method == Method::GM) part = voronoi_partition(design.points);
      const BatchResult r = batch_estimate(method, design, part ? &*part : nullptr, Bandwidth(est_b),
                                           points, cubature_from(rtol), threads);
      std::ostringstream os;
      os << "s1,s2,estimate\n";
      for (std::size_t i = 0; i < points.size(); ++i)
        os << fmt(points[i][0]) << ',' << fmt(points[i][1]) << ',' << fmt(r.values[i]) << '\n';
      emit(os.str(), est_output, out);
      for (const auto& f : r.failures) err << "point " << f.index << ": " << f.message << '\n';
      if (r.ll_fallbacks) err << r.ll_fallbacks << " point(s) fell back from LL to NW\n";
      if (r.flagged_cells) err << r.flagged_cells << " GM cell integral(s) missed the tolerance\n";
      return r.failures.empty() ? kExitOk : kExitNumerical;
    }

    if (*bw) {
      BandwidthChoice choice;
      json summary;
      if (bw_criterion == "loocv") {
        if (bw_design.empty()) throw ArgumentError("bandwidth --criterion loocv needs --design");
        const Design design = read_design(bw_design);
        choice = minimize_bandwidth([&](Bandwidth b) { return loocv_ll(design, b).value; }, {},
                                    threads);
        summary["criterion"] = "loocv";
      } else if (bw_criterion == "lscv") {
        if (bw_seed->count() == 0) throw ArgumentError("bandwidth --criterion lscv requires --seed");
        const Method method = parse_method(bw_method);
        const TargetFunction m = target_function(bw_function);
        const auto pts = mesh_design_points(bw_k);
        NoiseOptions noise{parse_noise_scale(bw_noise), bw_zero_noise};
        const auto gd = generate_responses(m, pts, derive_seed(seed, {2, std::uint64_t(bw_k), 0}), noise);
        const auto sample = uniform_simplex_sample(bw_sample, derive_seed(seed, {1, std::uint64_t(bw_k), 0}));
        std::optional<SimplexPartition> part;
        if (method == Method::GM) part = voronoi_partition(pts);
        const auto smoother = make_smoother(method, gd.design, part ? &*part : nullptr, cubature_from(rtol));
        choice = minimize_bandwidth([&](Bandwidth b) { return lscv(*smoother, m, sample, b).value; },
                                    {}, threads);
        summary = {{"criterion", "lscv"}, {"method", std::string(to_string(method))},
                   {"function", bw_function}, {"n", pts.size()}, {"seed", seed}};
      } else {
        throw ArgumentError("--criterion must be lscv or loocv");
      }
      summary["b_hat"] = choice.b_hat;
      summary["value"] = choice.value;
      summary["boundary_minimum"] = choice.boundary_minimum;
      emit(trace_csv(choice), bw_trace, out);
      err << summary.dump() << '\n';
      return kExitOk;
    }

    if (*sim) {
      StudyConfig cfg;
      cfg.functions = split_list(sim_functions);
      cfg.k_values.clear();
      for (const auto& s : split_list(sim_k)) {
        try {
          cfg.k_values.push_back(std::stoi(s));
        } catch (const std::exception&) {
          throw ArgumentError("invalid k '" + s + "'");
        }
      }
      cfg.methods.clear();
      for (const auto& s : split_list(sim_methods)) cfg.methods.push_back(parse_method(s));
      cfg.replications = sim_reps;
      cfg.seed = seed;
      cfg.cubature = cubature_from(rtol);
      cfg.lscv_sample_size = sim_sample;
      cfg.noise = {parse_noise_scale(sim_noise), sim_zero_noise};
      cfg.threads = threads;
      const auto rows = run_study(cfg);
      emit(sim_format == "csv" ? format_study_csv(rows) : format_study_table(rows), sim_output, out);
      double secs = 0.0;
      int invalid = 0;
      for (const auto& r : rows) {
        secs += r.elapsed_seconds;
        invalid += r.invalid ? 1 : 0;
      }
      err << "study finished: " << rows.size() << " rows, " << invalid << " invalid, "
          << fmt(secs) << " s of estimator time\n";
      return kExitOk;
    }

    if (*asy) {
      const TargetFunction m = target_function(asy_function);
      const SimplexPoint s = parse_point(asy_s);
      double sigma2 = asy_sigma2;
      if (!(sigma2 > 0.0)) {
        // Mesh with n points if n is triangular, else the closest one.
        const int k = std::max(2, static_cast<int>(std::lround((std::sqrt(8.0 * asy_n + 1.0) - 1.0) / 2.0)));
        sigma2 = iqr_noise_variance(m, mesh_design_points(k), NoiseScale::StandardDeviation);
      }
      const VarianceProfile profile = VarianceProfile::homoscedastic_uniform(sigma2, s.dim());
      json j = {{"function", asy_function},
                {"s", {s[0], s[1]}},
                {"n", asy_n},
                {"sigma2", sigma2},
                {"g", bias_g(m, s)},
                {"psi", psi(s)}};
      try {
        const auto opt = mse_opt_bandwidth(s, m, profile, asy_n);
        j["mse_opt"] = {{"b", opt.b_opt}, {"mse", opt.error_opt}};
      } catch (const ZeroBiasError& e) {
        j["mse_opt"] = nullptr;
        err << "mse_opt: " << e.what() << '\n';
      }
      const auto mise = mise_opt_bandwidth(m, profile, cubature_from(rtol), asy_n);
      j["mise_opt"] = {{"b", mise.b_opt},
                       {"mise", mise.error_opt},
                       {"integral_g2", mise.bias_constant},
                       {"integral_variance", mise.variance_constant},
                       {"converged", mise.converged}};
      if (asy_b > 0.0)
        j["variance_leading"] = variance_leading(s, {}, std::vector<double>(s.dim(), 2.0), profile,
                                                 asy_n, Bandwidth(asy_b));
      out << j.dump(2) << '\n';
      return kExitOk;
    }

    if (*fit) {
      CompositionData data;
      if (fit_synthetic > 0) {
        std::istringstream in(synthetic_composition_csv(seed, {fit_synthetic, 0.3, 0}, cols));
        data = parse_composition_csv(in, cols);
      } else {
        if (fit_input.empty()) throw ArgumentError("fit: give --input or --synthetic");
        data = load_composition_csv(fit_input, cols);
      }
      err << "rows read: " << data.rows_read << ", dropped: " << data.rows_dropped
          << ", used: " << data.design.size() << '\n';
      const FitResult r = fit_and_grid(data.design, {}, fit_resolution, threads);
      if (!fit_trace.empty()) emit(trace_csv(r.bandwidth), fit_trace, out);
      emit(format_grid_csv(r.grid), fit_output, out);
      err << json{{"b_hat", r.bandwidth.b_hat},
                  {"loocv", r.bandwidth.value},
                  {"boundary_minimum", r.bandwidth.boundary_minimum},
                  {"ll_fallbacks", r.ll_fallbacks}}
                 .dump()
          << '\n';
      return kExitOk;
    }

    if (*clt) {
      const TargetFunction m = target_function(clt_function);
      NoiseOptions noise{parse_noise_scale(clt_noise), false};
      const CltResult r = clt_study(Method::GM, m, parse_point(clt_s), clt_k, Bandwidth(clt_b),
                                    clt_reps, seed, cubature_from(rtol), noise);
      if (!clt_output.empty()) {
        std::ostringstream os;
        os << "replication,estimate,standardized\n";
        for (std::size_t i = 0; i < r.estimates.size(); ++i)
          os << i << ',' << fmt(r.estimates[i]) << ',' << fmt(r.standardized[i]) << '\n';
        emit(os.str(), clt_output, out);
      }
      out << json{{"replications", clt_reps},
                  {"n", clt_k * (clt_k + 1) / 2},
                  {"b", clt_b},
                  {"seed", seed},
                  {"noise_variance", r.noise_variance},
                  {"ks_statistic", r.ks_statistic},
                  {"empirical_variance", r.empirical_variance},
                  {"predicted_variance", r.predicted_variance},
                  {"variance_ratio", r.empirical_variance / r.predicted_variance}}
                 .dump(2)
          << '\n';
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace dkreg
