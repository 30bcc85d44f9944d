#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hilma/csv.hpp"
#include "hilma/dataset.hpp"
#include "hilma/errors.hpp"
#include "hilma/rng.hpp"

using namespace hilma;

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}

TEST_CASE("dataset enforces the observed-first layout") {
  Vector y(4);
  y << 1.0, 2.0, kNaN, kNaN;
  Dataset d(Matrix(4, 0), y);
  CHECK(d.n() == 4);
  CHECK(d.n_obs() == 2);
  CHECK(d.n_mis() == 2);
  CHECK(d.sum_observed() == doctest::Approx(3.0));
  CHECK(d.observed(1));
  CHECK_FALSE(d.observed(2));

  Vector bad(3);
  bad << 1.0, kNaN, 2.0;  // NaN in the middle of the head
  CHECK_THROWS_AS(Dataset(Matrix(3, 0), bad), DataError);

  Vector ok(2);
  ok << 1.0, 2.0;
  Matrix three(3, 1);
  three << 0.1, 0.2, 0.3;
  CHECK_THROWS_AS(Dataset(three, ok), DataError);  // row mismatch

  Matrix x(2, 1);
  x << 0.5, kNaN;  // covariates must be complete
  CHECK_THROWS_AS(Dataset(x, ok), DataError);
}

TEST_CASE("explicit delta must match the NaN pattern") {
  Vector y(3);
  y << 4.0, kNaN, kNaN;
  CHECK_NOTHROW(Dataset(Matrix(3, 0), y, {1, 0, 0}));
  CHECK_THROWS_AS(Dataset(Matrix(3, 0), y, {1, 1, 0}), DataError);
  CHECK_THROWS_AS(Dataset(Matrix(3, 0), y, {1, 0}), DataError);
  Dataset d(Matrix(3, 0), y, {1, 0, 0});
  CHECK(d.delta() == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("reordering keeps values attached to their covariates") {
  Matrix x(5, 1);
  x << 10, 20, 30, 40, 50;
  Vector y(5);
  y << kNaN, 2.0, kNaN, 4.0, 5.0;
  auto [d, order] = reorder_observed_first(x, y);
  CHECK(d.n_obs() == 3);
  CHECK(order == std::vector<int>{1, 3, 4, 0, 2});
  // Stable: observed rows keep relative order, then missing rows.
  CHECK(d.response()[0] == 2.0);
  CHECK(d.covariate(0) == 20.0);
  CHECK(d.response()[2] == 5.0);
  CHECK(d.covariate(2) == 50.0);
  CHECK(std::isnan(d.response()[3]));
  CHECK(d.covariate(3) == 10.0);
  CHECK(d.covariate(4) == 30.0);
}

TEST_CASE("csv parsing handles missing cells and line endings") {
  const std::string text = "y,x\r\n1.5,0.25\r\n,0.5\r\n-2e-3,0.75\r\n";
  CsvTable t = csv_parse(text);
  CHECK(t.n_rows() == 3);
  CHECK(t.n_cols() == 2);
  CHECK(t.names == std::vector<std::string>{"y", "x"});
  CHECK(t.rows[0][0] == 1.5);
  CHECK(std::isnan(t.rows[1][0]));
  CHECK(t.rows[1][1] == 0.5);
  CHECK(t.rows[2][0] == -2e-3);
  CHECK(t.column("x") == 1);
  CHECK(t.column("zzz") == -1);
}

TEST_CASE("csv parse errors carry the offending line number") {
  CHECK_THROWS_WITH_AS(csv_parse("y\nabc\n"),
                       doctest::Contains("line 2"), DataError);
  CHECK_THROWS_WITH_AS(csv_parse("y,x\n1.0\n"),
                       doctest::Contains("line 2"), DataError);
  CHECK_THROWS_WITH_AS(csv_parse("y,x\n1,2\n1,2,3\n"),
                       doctest::Contains("line 3"), DataError);
  CHECK_THROWS_AS(csv_parse(""), DataError);
  CHECK_THROWS_AS(csv_parse("y,,x\n1,2,3\n"), DataError);
  // A number followed by trailing junk is not a number.
  CHECK_THROWS_AS(csv_parse("y\n1.5x\n"), DataError);
}

TEST_CASE("csv round trip preserves every value byte for byte") {
  CsvTable t;
  t.names = {"a", "b"};
  t.rows = {{1.0, kNaN}, {0.1, -3.25e-17}, {12345.678901234567, 2.0}};
  const std::string out = csv_format(t);
  CsvTable back = csv_parse(out);
  REQUIRE(back.n_rows() == 3);
  CHECK(back.rows[0][0] == 1.0);
  CHECK(std::isnan(back.rows[0][1]));
  CHECK(back.rows[1][1] == -3.25e-17);
  CHECK(back.rows[2][0] == 12345.678901234567);
  CHECK(csv_format(back) == out);
}

TEST_CASE("format_double is a shortest exact round trip") {
  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::exp(40.0 * (rng.uniform() - 0.5));
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-0.0) == "-0");
}

TEST_CASE("a table becomes a dataset with a row map back to the file") {
  CsvTable t;
  t.names = {"x", "y"};
  t.rows = {{0.1, kNaN}, {0.2, 5.0}, {0.3, kNaN}, {0.4, 7.0}};
  TableAsDataset view = dataset_from_table(t, "y");
  CHECK(view.response_column == 1);
  CHECK(view.data.n_obs() == 2);
  CHECK(view.data.n_covariates() == 1);
  CHECK(view.source_row == std::vector<int>{1, 3, 0, 2});
  CHECK(view.data.response()[0] == 5.0);
  CHECK(view.data.covariate(0) == 0.2);
  CHECK(std::isnan(view.data.response()[2]));
  CHECK(view.data.covariate(2) == 0.1);

  CHECK_THROWS_WITH_AS(dataset_from_table(t, "z"),
                       doctest::Contains("z"), DataError);
  CsvTable broken = t;
  broken.rows[2][0] = kNaN;  // covariate hole on data row 3 = file line 4
  CHECK_THROWS_WITH_AS(dataset_from_table(broken, "y"),
                       doctest::Contains("line 4"), DataError);
}
