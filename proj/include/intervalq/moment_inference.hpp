#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "intervalq/interval.hpp"
#include "intervalq/rng.hpp"

namespace intervalq {

// Tuning constants of the inequality test. The generalized moment selection
// threshold and slack default to sqrt(0.3 ln n) and sqrt(0.4 ln n / ln ln n)
// when unset.
struct MomentConfig {
  std::size_t instrument_depth = 2;    // box-instrument depths r = 1..R
  double variance_regularizer = 0.05;  // weight on the unconditional variance
  std::optional<double> gms_threshold;
  std::optional<double> gms_slack;
  double quantile_bump = 1e-6;  // added to the bootstrap quantile
  std::size_t bootstrap_count = 500;
  double alpha = 0.05;
};

// Inequality moments of one observation at index function value x_theta:
//   first  = 1[lower <= x_theta] - tau   (lower envelope inequality)
//   second = tau - 1[upper <= x_theta]   (upper envelope inequality)
std::pair<double, double> interval_moments(const IntervalObs& y, double x_theta, double tau);

// 0/1 memberships of a min-max normalized covariate point in the (2r)^p box
// cells; the cell touching 0 is closed on the left.
Eigen::VectorXd box_instruments(const Eigen::VectorXd& x_normalized, std::size_t r);

// Weighted sum over instrument depths and cells of the squared negative parts
// of the studentized moments.
double test_statistic(const IntervalDataset& ds, const Eigen::VectorXd& theta, double tau,
                      const MomentConfig& cfg);

// (1 - alpha) quantile of the recentred bootstrap statistics, plus the bump.
double bootstrap_critical_value(const IntervalDataset& ds, const Eigen::VectorXd& theta,
                                double tau, const MomentConfig& cfg, RngState rng);

struct MomentTestResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  bool reject = false;
};

MomentTestResult moment_test(const IntervalDataset& ds, const Eigen::VectorXd& theta, double tau,
                             const MomentConfig& cfg, RngState rng);

struct ScanPoint {
  Eigen::VectorXd theta;
  double statistic = 0.0;
  double critical_value = 0.0;
  bool accepted = false;
  bool failed = false;
  std::string message;
};

// Tests every row of `grid` as a parameter value; per-point random streams
// make the scan independent of evaluation order.
std::vector<ScanPoint> confidence_set_scan(const IntervalDataset& ds, double tau,
                                           const Eigen::MatrixXd& grid, const MomentConfig& cfg,
                                           RngState rng);

}  // namespace intervalq
