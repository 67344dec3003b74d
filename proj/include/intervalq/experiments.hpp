#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "intervalq/rng.hpp"

namespace intervalq {

// Monte Carlo designs:
//   table2  - unconditional set test, size and local power, continuous model
//   table5  - super-consistency event frequencies, integer-binned model
//   table6  - conditional set test at covariate points
//   figure1 - moment-inequality test along a slope slice, binned regression
enum class Design { table2, table5, table6, figure1 };

Design design_from_string(const std::string& name);
std::string design_name(Design d);

struct RunOptions {
  // Empty vectors select the design defaults.
  std::vector<double> taus;
  std::vector<std::size_t> sizes;
  std::vector<double> deltas;      // table2 / table6 local alternatives
  std::vector<double> x_stars;     // table6 covariate points
  std::vector<double> slope_grid;  // figure1 slope values
  std::size_t cv_draws = 10000;
  std::size_t bootstrap = 200;
  double alpha = 0.05;
};

struct ExperimentCell {
  double tau = 0.0;
  std::size_t n = 0;
  double delta = 0.0;
  double x_star = 0.0;
  double slope = 0.0;
  double frequency = 0.0;
  std::size_t replications = 0;
  std::size_t discarded = 0;
};

struct ExperimentReport {
  std::string design;
  std::uint64_t seed = 0;
  std::size_t replications = 0;
  std::vector<ExperimentCell> cells;
  double wall_seconds = 0.0;  // not serialized; reports are byte-deterministic
};

// Closed-form identification sets compared against the reference constants
// used throughout the experiments; largest absolute deviation per model.
struct PreflightResult {
  double continuous_deviation = 0.0;
  double discrete_deviation = 0.0;
};

PreflightResult preflight_identification_check();

ExperimentReport run_table(Design d, std::size_t replications, std::uint64_t seed,
                           const RunOptions& opt = {});

void write_report_csv(const ExperimentReport& report, std::ostream& out);
void write_report_json(const ExperimentReport& report, std::ostream& out);

struct McConfig {
  Design design = Design::table2;
  std::size_t replications = 2000;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

// Flat key=value configuration ('#' comments): design, replications, seed, out.
McConfig parse_mc_config(std::istream& in);

}  // namespace intervalq
