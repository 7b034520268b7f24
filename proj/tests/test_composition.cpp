#include <doctest.h>

#include "dkreg/composition.hpp"
#include "dkreg/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace dkreg;

namespace {

CompositionData parse(const std::string& text, const ColumnMap& cols = {}) {
  std::istringstream in(text);
  return parse_composition_csv(in, cols);
}

std::vector<std::vector<std::string>> parse_grid(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) rows.push_back(split_csv_record(line));
  return rows;
}

}  // namespace

TEST_CASE("CSV records") {
  CHECK(split_csv_record("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split_csv_record("\"x, y\",\"say \"\"hi\"\"\",3\r") ==
        std::vector<std::string>{"x, y", "say \"hi\"", "3"});
  CHECK_THROWS_AS(split_csv_record("\"open,1"), ParseError);
}

TEST_CASE("loading renormalises compositions and drops incomplete rows") {
  const auto d = parse("id,sand,silt,clay,pH_CaCl2\n"
                       "1,40,40,20,5.5\n"
                       "2,10,20,30,NA\n"
                       "3,0.2,0.5,0.3,7\n"
                       "\n"
                       "4,,50,50,6\n");
  CHECK(d.rows_read == 4);
  CHECK(d.rows_dropped == 2);
  REQUIRE(d.design.size() == 2);
  CHECK(d.design.points[0][0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(d.design.points[0][1] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(d.design.points[0].last() == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(d.design.responses == std::vector<double>{5.5, 7.0});
  for (const auto& p : d.design.points) {
    CHECK(p[0] + p[1] <= 1 + 1e-9);
    CHECK(p.last() >= -1e-9);
  }

  ColumnMap cols{"Sand %", "Silt", "Clay", "ph"};
  const auto e = parse("\"Sand %\",Silt,Clay,ph\n1,1,2,4.0\n", cols);
  CHECK(e.design.points[0][0] == doctest::Approx(0.25));
}

TEST_CASE("loading errors carry the row") {
  const std::string head = "sand,silt,clay,pH_CaCl2\n";
  try {
    parse(head + "30,30,40,6\n30,abc,40,6\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
  }
  CHECK_THROWS_AS(parse(head + "30,30,40\n"), ParseError);
  CHECK_THROWS_AS(parse(head + "-1,30,40,6\n"), ParseError);
  CHECK_THROWS_AS(parse(head + "0,0,0,6\n"), ParseError);
  CHECK_THROWS_AS(parse("sand,silt,pH_CaCl2\n1,2,3\n"), ParseError);
  CHECK_THROWS_AS(parse(head + "NA,1,1,6\n"), EmptyDatasetError);
  CHECK_THROWS_AS(parse(""), EmptyDatasetError);
  CHECK_THROWS_AS(load_composition_csv("/nonexistent/file.csv"), ParseError);
}

TEST_CASE("renormalisation is idempotent") {
  const auto a = parse(synthetic_composition_csv(5, {50, 0.0, 0}));
  std::ostringstream os;
  os.precision(17);
  os << "sand,silt,clay,pH_CaCl2\n";
  for (std::size_t i = 0; i < a.design.size(); ++i)
    os << a.design.points[i][0] << ',' << a.design.points[i][1] << ',' << a.design.points[i].last()
       << ',' << a.design.responses[i] << '\n';
  const auto b = parse(os.str());
  REQUIRE(b.design.size() == a.design.size());
  for (std::size_t i = 0; i < a.design.size(); ++i) {
    CHECK(std::abs(a.design.points[i][0] - b.design.points[i][0]) <= 1e-12);
    CHECK(std::abs(a.design.points[i][1] - b.design.points[i][1]) <= 1e-12);
  }
}

TEST_CASE("pH categories") {
  CHECK(classify_ph(7.0).label == "Neutral");
  CHECK(classify_ph(4.49).label == "Extremely acidic");
  CHECK(classify_ph(9.2).label == "Very strongly alkaline");
  CHECK(classify_ph(4.5).label == "Very strongly acidic");
  CHECK(classify_ph(7.35).label == "Neutral");
  CHECK(classify_ph(7.4).label == "Slightly alkaline");
  CHECK(classify_ph(9.1).label == "Strongly alkaline");
  CHECK(classify_ph(std::nextafter(9.1, 10.0)).label == "Very strongly alkaline");
  CHECK(classify_ph(-5.0).label == "Extremely acidic");
  CHECK(classify_ph(std::numeric_limits<double>::infinity()).label == "Very strongly alkaline");
  CHECK_THROWS_AS(classify_ph(std::nan("")), DomainError);

  const auto& cats = ph_categories();
  REQUIRE(cats.size() == 10);
  for (std::size_t i = 1; i < cats.size(); ++i) CHECK(cats[i].lower == cats[i - 1].upper);

  // Total and monotone on a fine sweep.
  auto index = [&](double v) {
    const auto& c = classify_ph(v);
    return static_cast<std::size_t>(&c - cats.data());
  };
  std::size_t previous = 0;
  for (double v = 3.0; v <= 10.0; v += 1e-3) {
    const std::size_t i = index(v);
    CHECK(i >= previous);
    CHECK(v >= cats[i].lower);
    previous = i;
  }
}

TEST_CASE("barycentric grid") {
  const auto g = barycentric_grid(10);
  CHECK(g.size() == 66);
  CHECK(g.front() == SimplexPoint{0.0, 0.0});
  CHECK_THROWS_AS(barycentric_grid(0), ArgumentError);
}

TEST_CASE("fit reproduces a noiseless affine surface and round-trips the grid") {
  const auto data = parse(synthetic_composition_csv(11, {200, 0.0, 0}));
  BandwidthSearch search;
  search.grid = BandwidthSearch::log_grid(0.01, 1.0, 12);
  const auto fit = fit_and_grid(data.design, search, 20, 2);
  CHECK(fit.bandwidth.value <= 1e-12);
  REQUIRE(fit.grid.size() == 231);
  for (const auto& g : fit.grid) {
    REQUIRE(std::isfinite(g.estimate));
    CHECK(std::abs(g.estimate - synthetic_ph_surface(g.point[0], g.point[1])) <= 1e-6);
    CHECK(g.category == classify_ph(g.estimate).label);
  }

  const std::string csv = format_grid_csv(fit.grid);
  const auto rows = parse_grid(csv);
  REQUIRE(rows.size() == fit.grid.size() + 1);
  CHECK(rows[0] == std::vector<std::string>{"s1", "s2", "s3", "estimate", "category"});
  for (std::size_t i = 0; i < fit.grid.size(); ++i) {
    const auto& r = rows[i + 1];
    const auto& g = fit.grid[i];
    CHECK(std::stod(r[0]) == doctest::Approx(g.point[0]).epsilon(1e-12));
    CHECK(std::stod(r[1]) == doctest::Approx(g.point[1]).epsilon(1e-12));
    CHECK(std::stod(r[3]) == doctest::Approx(g.estimate).epsilon(1e-11));
    CHECK(std::stod(r[0]) + std::stod(r[1]) + std::stod(r[2]) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(r[4] == g.category);
  }
}

TEST_CASE("fit on constant responses gives one flat category") {
  Design d;
  d.points = uniform_simplex_sample(60, 4);
  d.responses.assign(60, 6.8);
  BandwidthSearch search;
  search.grid = BandwidthSearch::log_grid(0.02, 1.0, 6);
  const auto fit = fit_and_grid(d, search, 8);
  for (const auto& g : fit.grid) {
    CHECK(std::abs(g.estimate - 6.8) <= 1e-10);
    CHECK(g.category == "Neutral");
  }
}

TEST_CASE("synthetic data and atomic writes") {
  const auto text = synthetic_composition_csv(3, {30, 0.0, 5});
  CHECK(text == synthetic_composition_csv(3, {30, 0.0, 5}));
  const auto d = parse(text);
  CHECK(d.rows_read == 30);
  CHECK(d.rows_dropped == 6);

  const auto dir = std::filesystem::temp_directory_path() / "dkreg_composition_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "grid.csv").string();
  write_file_atomic(path, "first\n");
  write_file_atomic(path, "second\n");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "second");
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove_all(dir);
}
