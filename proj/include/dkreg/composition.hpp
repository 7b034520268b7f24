#pragma once

#include "dkreg/bandwidth.hpp"
#include "dkreg/estimators.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dkreg {

//! Header names of the columns to read.
struct ColumnMap {
  std::string sand = "sand";
  std::string silt = "silt";
  std::string clay = "clay";
  std::string response = "pH_CaCl2";
};

struct CompositionData {
  //! Points are (sand, silt) after renormalising sand + silt + clay to 1.
  Design design;
  std::size_t rows_read = 0;
  //! Rows with an empty or NA field in a used column.
  std::size_t rows_dropped = 0;
};

//! Reads a headed CSV (RFC 4180 quoting). ParseError (with the 1-based data
//! row) on malformed numbers, negative or all-zero compositions, or missing
//! columns; EmptyDatasetError when no usable row remains.
CompositionData load_composition_csv(const std::string& path, const ColumnMap& columns = {});
CompositionData parse_composition_csv(std::istream& in, const ColumnMap& columns = {});

//! Splits one CSV record; quotes may enclose commas and doubled quotes.
std::vector<std::string> split_csv_record(std::string_view line);

struct PhCategory {
  std::string_view label;
  //! The category holds [lower, upper); the "strongly alkaline" class also
  //! holds its upper end 9.1 because only values above 9.1 are "very strongly".
  double lower;
  double upper;
};

//! The ten soil pH classes in increasing order.
const std::vector<PhCategory>& ph_categories();
//! Total and monotone. Gaps between listed ranges (e.g. 7.3 to 7.4) belong
//! to the lower class. DomainError for NaN.
const PhCategory& classify_ph(double value);

//! Points (i/r, j/r) with i + j <= r, boundary included.
std::vector<SimplexPoint> barycentric_grid(int resolution);

struct GridValue {
  SimplexPoint point;
  //! NaN when the smoother failed at this point.
  double estimate;
  std::string_view category;
};

struct FitResult {
  BandwidthChoice bandwidth;
  std::vector<GridValue> grid;
  std::size_t ll_fallbacks = 0;
};

//! LOOCV-selected local linear fit evaluated on barycentric_grid(resolution).
FitResult fit_and_grid(const Design& design, const BandwidthSearch& search, int resolution,
                       unsigned threads = 1);

//! Header s1,s2,s3,estimate,category; numbers at 12 significant digits.
std::string format_grid_csv(const std::vector<GridValue>& grid);

//! Writes via a temporary file in the same directory, then renames.
void write_file_atomic(const std::string& path, const std::string& contents);

//! pH = 4 + 4 sand + 2 silt, an affine test surface.
double synthetic_ph_surface(double sand, double silt);

struct SyntheticCompositionOptions {
  std::size_t rows = 300;
  double noise_sd = 0.0;
  //! Every `missing_every`-th row gets an empty pH field (0 disables).
  std::size_t missing_every = 0;
};

//! GEMAS-shaped CSV text with sand, silt, clay in percent and a pH column,
//! compositions uniform on the simplex.
std::string synthetic_composition_csv(std::uint64_t seed, const SyntheticCompositionOptions& opts = {},
                                      const ColumnMap& columns = {});

}  // namespace dkreg
