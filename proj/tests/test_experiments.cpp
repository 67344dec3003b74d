#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <string>

#include "intervalq/errors.hpp"
#include "intervalq/experiments.hpp"

using namespace intervalq;

TEST_CASE("design names round-trip and unknown names are rejected") {
  for (Design d : {Design::table2, Design::table5, Design::table6, Design::figure1}) {
    CHECK(design_from_string(design_name(d)) == d);
  }
  CHECK_THROWS_AS(design_from_string("table9"), invariant_error);
}

TEST_CASE("pre-flight identification sets match the reference constants") {
  const PreflightResult pf = preflight_identification_check();
  CHECK(pf.continuous_deviation >= 0.0);
  CHECK(pf.continuous_deviation < 0.01);  // reference constants carry 3 decimals
  CHECK(pf.discrete_deviation == 0.0);    // half-integer endpoints are exact
}

TEST_CASE("config parsing: values, comments, defaults, and rejects") {
  std::istringstream in(
      "# experiment setup\n"
      "design = table6\n"
      "replications=500\n"
      "\n"
      "seed = 9\n"
      "out = results/run1\n");
  const McConfig cfg = parse_mc_config(in);
  CHECK(cfg.design == Design::table6);
  CHECK(cfg.replications == 500);
  CHECK(cfg.seed == 9);
  CHECK(cfg.out_dir == "results/run1");

  std::istringstream empty("");
  const McConfig def = parse_mc_config(empty);
  CHECK(def.design == Design::table2);
  CHECK(def.replications == 2000);
  CHECK(def.seed == 1);
  CHECK(def.out_dir == ".");

  std::istringstream bad_key("designs = table2\n");
  CHECK_THROWS_AS(parse_mc_config(bad_key), io_error);
  std::istringstream bad_design("design = tableX\n");
  CHECK_THROWS_AS(parse_mc_config(bad_design), io_error);
  std::istringstream bad_value("seed = ten\n");
  CHECK_THROWS_AS(parse_mc_config(bad_value), io_error);
  std::istringstream no_eq("design table2\n");
  CHECK_THROWS_AS(parse_mc_config(no_eq), io_error);
}

TEST_CASE("replication floor is enforced") {
  CHECK_THROWS_AS(run_table(Design::table2, 50, 1), invariant_error);
}

TEST_CASE("size-and-power run is byte-deterministic and ordered in delta") {
  RunOptions opt;
  opt.taus = {0.5};
  opt.sizes = {100};
  opt.deltas = {0.0, 4.0};
  opt.cv_draws = 2000;

  const ExperimentReport a = run_table(Design::table2, 100, 7, opt);
  const ExperimentReport b = run_table(Design::table2, 100, 7, opt);

  std::ostringstream csv_a, csv_b, json_a, json_b;
  write_report_csv(a, csv_a);
  write_report_csv(b, csv_b);
  write_report_json(a, json_a);
  write_report_json(b, json_b);
  CHECK(csv_a.str() == csv_b.str());
  CHECK(json_a.str() == json_b.str());
  CHECK(csv_a.str().rfind("tau,n,delta,x_star,slope,frequency,replications,discarded\n", 0) == 0);

  CHECK(a.design == "table2");
  CHECK(a.seed == 7);
  REQUIRE(a.cells.size() == 2);
  for (const ExperimentCell& c : a.cells) {
    CHECK(c.tau == 0.5);
    CHECK(c.n == 100);
    CHECK(c.frequency >= 0.0);
    CHECK(c.frequency <= 1.0);
    CHECK(c.replications + c.discarded == 100);
  }
  CHECK(a.cells[0].delta == 0.0);
  CHECK(a.cells[1].delta == 4.0);
  CHECK(a.cells[0].frequency <= 0.15);  // nominal size 0.05, 100 replications
  CHECK(a.cells[1].frequency >= 0.5);   // distant alternative
  CHECK(a.cells[1].frequency >= a.cells[0].frequency);

  // a different seed moves the frequencies (not a constant report)
  const ExperimentReport c = run_table(Design::table2, 100, 8, opt);
  std::ostringstream csv_c;
  write_report_csv(c, csv_c);
  CHECK(csv_c.str() != csv_a.str());
}

TEST_CASE("super-consistency event is rare at moderate n") {
  RunOptions opt;
  opt.taus = {0.5};
  opt.sizes = {250};
  const ExperimentReport rep = run_table(Design::table5, 100, 3, opt);
  REQUIRE(rep.cells.size() == 1);
  CHECK(rep.cells[0].frequency <= 0.1);
  CHECK(rep.cells[0].delta == 0.0);
}

TEST_CASE("conditional design holds size at the covariate center") {
  RunOptions opt;
  opt.taus = {0.5};
  opt.sizes = {1000};
  opt.x_stars = {0.0};
  opt.deltas = {0.0};
  opt.cv_draws = 2000;
  const ExperimentReport rep = run_table(Design::table6, 100, 11, opt);
  REQUIRE(rep.cells.size() == 1);
  CHECK(rep.cells[0].x_star == 0.0);
  CHECK(rep.cells[0].frequency <= 0.15);
}

TEST_CASE("inequality design accepts the true slope") {
  RunOptions opt;
  opt.taus = {0.5};
  opt.sizes = {100};
  opt.slope_grid = {0.5};
  opt.bootstrap = 100;
  const ExperimentReport rep = run_table(Design::figure1, 100, 13, opt);
  REQUIRE(rep.cells.size() == 1);
  CHECK(rep.cells[0].slope == 0.5);
  CHECK(rep.cells[0].frequency <= 0.15);
}
