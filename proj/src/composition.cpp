#include "dkreg/composition.hpp"

#include "dkreg/errors.hpp"
#include "dkreg/parallel.hpp"
#include "dkreg/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace dkreg {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_missing(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "na";
}

double parse_number(std::string_view s, std::size_t row, std::string_view column) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError("column '" + std::string(column) + "': not a number: '" + std::string(s) + "'", row);
  return v;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (trim(header[i]) == name) return i;
  throw ParseError("missing column '" + name + "' in header");
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r' || i + 1 != line.size()) {
      fields.back() += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field");
  return fields;
}

CompositionData parse_composition_csv(std::istream& in, const ColumnMap& columns) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyDatasetError("composition CSV: no header");
  const auto header = split_csv_record(line);
  const std::size_t c_sand = find_column(header, columns.sand);
  const std::size_t c_silt = find_column(header, columns.silt);
  const std::size_t c_clay = find_column(header, columns.clay);
  const std::size_t c_resp = find_column(header, columns.response);

  CompositionData out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    ++out.rows_read;
    std::vector<std::string> f;
    try {
      f = split_csv_record(line);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), row);
    }
    if (f.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(f.size()),
                       row);
    if (is_missing(f[c_sand]) || is_missing(f[c_silt]) || is_missing(f[c_clay]) ||
        is_missing(f[c_resp])) {
      ++out.rows_dropped;
      continue;
    }
    const double sand = parse_number(f[c_sand], row, columns.sand);
    const double silt = parse_number(f[c_silt], row, columns.silt);
    const double clay = parse_number(f[c_clay], row, columns.clay);
    const double y = parse_number(f[c_resp], row, columns.response);
    if (sand < 0.0 || silt < 0.0 || clay < 0.0) throw ParseError("negative composition", row);
    const double total = sand + silt + clay;
    if (!(total > 0.0)) throw ParseError("composition sums to zero", row);
    try {
      out.design.points.emplace_back(std::vector<double>{sand / total, silt / total});
    } catch (const DomainError& e) {
      throw ParseError(e.what(), row);
    }
    out.design.responses.push_back(y);
  }
  if (out.design.size() == 0) throw EmptyDatasetError("composition CSV: no usable rows");
  return out;
}

CompositionData load_composition_csv(const std::string& path, const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_composition_csv(in, columns);
}

const std::vector<PhCategory>& ph_categories() {
  static const std::vector<PhCategory> cats = {
      {"Extremely acidic", -std::numeric_limits<double>::infinity(), 4.5},
      {"Very strongly acidic", 4.5, 5.1},
      {"Strongly acidic", 5.1, 5.6},
      {"Moderately acidic", 5.6, 6.1},
      {"Slightly acidic", 6.1, 6.6},
      {"Neutral", 6.6, 7.4},
      {"Slightly alkaline", 7.4, 7.9},
      {"Moderately alkaline", 7.9, 8.5},
      {"Strongly alkaline", 8.5, 9.1},
      {"Very strongly alkaline", 9.1, std::numeric_limits<double>::infinity()},
  };
  return cats;
}

const PhCategory& classify_ph(double value) {
  if (std::isnan(value)) throw DomainError("classify_ph: NaN");
  const auto& cats = ph_categories();
  if (value > 9.1) return cats.back();
  for (std::size_t i = cats.size() - 1; i-- > 0;)
    if (value >= cats[i].lower) return cats[i];
  return cats.front();
}

std::vector<SimplexPoint> barycentric_grid(int resolution) {
  if (resolution < 1) throw ArgumentError("grid resolution must be >= 1");
  std::vector<SimplexPoint> pts;
  const double r = resolution;
  for (int i = 0; i <= resolution; ++i)
    for (int j = 0; i + j <= resolution; ++j) pts.emplace_back(std::vector<double>{i / r, j / r});
  return pts;
}

FitResult fit_and_grid(const Design& design, const BandwidthSearch& search, int resolution,
                       unsigned threads) {
  design.validate();
  FitResult out;
  out.bandwidth = minimize_bandwidth(
      [&](Bandwidth b) { return loocv_ll(design, b).value; }, search, threads);
  const LlSmoother ll(design);
  const auto points = barycentric_grid(resolution);
  const Bandwidth b(out.bandwidth.b_hat);
  const BatchResult batch = batch_estimate(ll, b, points, threads);
  out.ll_fallbacks = batch.ll_fallbacks;
  out.grid.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double v = batch.values[i];
    out.grid.push_back({points[i], v, std::isfinite(v) ? classify_ph(v).label : "NA"});
  }
  return out;
}

std::string format_grid_csv(const std::vector<GridValue>& grid) {
  std::ostringstream os;
  os << "s1,s2,s3,estimate,category\n";
  char buf[128];
  for (const auto& g : grid) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,", g.point[0], g.point[1],
                  g.point.last(), g.estimate);
    os << buf << csv_field(g.category) << '\n';
  }
  return os.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw ParseError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ParseError("cannot rename onto '" + path + "': " + ec.message());
  }
}

double synthetic_ph_surface(double sand, double silt) { return 4.0 + 4.0 * sand + 2.0 * silt; }

std::string synthetic_composition_csv(std::uint64_t seed, const SyntheticCompositionOptions& opts,
                                      const ColumnMap& columns) {
  std::ostringstream os;
  os << "id," << csv_field(columns.sand) << ',' << csv_field(columns.silt) << ','
     << csv_field(columns.clay) << ',' << csv_field(columns.response) << '\n';
  const auto pts = uniform_simplex_sample(opts.rows, seed);
  Rng noise(derive_seed(seed, {0x6e6f697365ULL}));
  char buf[160];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double sand = pts[i][0], silt = pts[i][1], clay = pts[i].last();
    const double ph = synthetic_ph_surface(sand, silt) + opts.noise_sd * noise.normal();
    const bool missing = opts.missing_every && (i + 1) % opts.missing_every == 0;
    std::snprintf(buf, sizeof buf, "%zu,%.15g,%.15g,%.15g,", i + 1, 100.0 * sand, 100.0 * silt,
                  100.0 * clay);
    os << buf;
    if (!missing) {
      std::snprintf(buf, sizeof buf, "%.15g", ph);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace dkreg
