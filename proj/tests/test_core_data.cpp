#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "intervalq/csv.hpp"
#include "intervalq/interval.hpp"

using namespace intervalq;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("interval validation rejects malformed endpoints") {
  CHECK_THROWS_AS(validate_interval(IntervalObs{2.0, 1.0}, 0), invariant_error);
  CHECK_THROWS_AS(validate_interval(IntervalObs{std::nan(""), 1.0}, 0), invariant_error);
  CHECK_THROWS_AS(validate_interval(IntervalObs{kInf, kInf}, 0), invariant_error);
  CHECK_THROWS_AS(validate_interval(IntervalObs{-kInf, -kInf}, 0), invariant_error);
  CHECK_NOTHROW(validate_interval(IntervalObs{-kInf, kInf}, 0));
  CHECK_NOTHROW(validate_interval(IntervalObs{1.0, 1.0}, 0));
}

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(IntervalDataset({}), invariant_error);
  CHECK_THROWS_AS(IntervalDataset({IntervalObs{0, 1}}, Eigen::MatrixXd::Zero(2, 1)),
                  invariant_error);
  Eigen::MatrixXd bad(1, 1);
  bad(0, 0) = kInf;
  CHECK_THROWS_AS(IntervalDataset({IntervalObs{0, 1}}, bad), invariant_error);

  IntervalDataset ds({IntervalObs{0, 1}, IntervalObs{2, 3}});
  CHECK(ds.n() == 2);
  CHECK(ds.p() == 0);
  CHECK_FALSE(degenerate_check(ds));
  IntervalDataset points({IntervalObs{1, 1}, IntervalObs{2, 2}});
  CHECK(degenerate_check(points));
}

TEST_CASE("constant covariate column is flagged") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0.3, 1, 0.7, 1, 0.1;
  IntervalDataset ds({IntervalObs{0, 1}, IntervalObs{0, 1}, IntervalObs{0, 1}}, x);
  CHECK(ds.has_constant_column());
  Eigen::MatrixXd x2(3, 1);
  x2 << 0.3, 0.7, 0.1;
  IntervalDataset ds2({IntervalObs{0, 1}, IntervalObs{0, 1}, IntervalObs{0, 1}}, x2);
  CHECK_FALSE(ds2.has_constant_column());
}

TEST_CASE("csv round trip is exact including infinite sentinels") {
  const std::string path = temp_path("iq_roundtrip.csv");
  Eigen::MatrixXd x(3, 1);
  x << 0.1234567890123456789, -5.5, 3.0;
  IntervalDataset ds(
      {IntervalObs{-kInf, 0.1}, IntervalObs{0.3333333333333333, 7.7}, IntervalObs{1.0, kInf}}, x);
  CsvSchema schema;
  schema.covariates = {"x1"};
  write_csv(path, ds, schema);
  const auto loaded = load_csv(path, schema);
  CHECK(loaded.skipped == 0);
  REQUIRE(loaded.data.n() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(loaded.data.obs(i).lower == ds.obs(i).lower);
    CHECK(loaded.data.obs(i).upper == ds.obs(i).upper);
  }
  CHECK(loaded.data.covariates()(0, 0) == x(0, 0));
  std::remove(path.c_str());
}

TEST_CASE("csv loader reports precise failures") {
  const std::string path = temp_path("iq_bad.csv");

  write_file(path, "lower,upper\n");
  CHECK_THROWS_AS(load_csv(path), io_error);

  write_file(path, "");
  CHECK_THROWS_AS(load_csv(path), io_error);

  write_file(path, "a,b\n1,2\n");
  CHECK_THROWS_AS(load_csv(path), io_error);

  write_file(path, "lower,upper\n1,2\nx,3\n");
  CHECK_THROWS_WITH_AS(load_csv(path), "unparseable cell at row 2", io_error);

  write_file(path, "lower,upper\n5,2\n");
  CHECK_THROWS_WITH_AS(load_csv(path), "inverted interval at row 1", io_error);

  CHECK_THROWS_AS(load_csv(temp_path("iq_never_written.csv")), io_error);
  std::remove(path.c_str());
}

TEST_CASE("skip policy counts malformed rows instead of raising") {
  const std::string path = temp_path("iq_skip.csv");
  write_file(path, "lower,upper\n1,2\nx,3\n5,2\n0,9\n");
  CsvSchema schema;
  schema.skip_malformed = true;
  const auto loaded = load_csv(path, schema);
  CHECK(loaded.skipped == 2);
  CHECK(loaded.data.n() == 2);
  std::remove(path.c_str());
}
