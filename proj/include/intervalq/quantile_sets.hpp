#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <optional>

#include "intervalq/interval.hpp"
#include "intervalq/rng.hpp"

namespace intervalq {

enum class SetMetric { hausdorff, directed_hausdorff, squared_directed };
enum class EstimatorVariant { continuous, discrete, jittered };

// Interval estimate [lower, upper] of the quantile set at level tau.
struct QuantileSetEstimate {
  double tau = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  EstimatorVariant variant = EstimatorVariant::continuous;

  IntervalObs as_interval() const { return IntervalObs{lower, upper}; }
};

// Hausdorff distance between [lo1, hi1] and [lo2, hi2]:
// max(|lo1 - lo2|, |hi1 - hi2|).
double hausdorff(const IntervalObs& A, const IntervalObs& B);

// Directed distance sup_{x in A} dist(x, B) = max((lo2 - lo1)_+, (hi1 - hi2)_+).
double directed_hausdorff(const IntervalObs& A, const IntervalObs& B);

// 2x2 covariance of the joint limit of the scaled endpoint estimators.
struct Cov2 {
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();

  // Symmetrizes and clips eigenvalues in [-1e-8 * scale, 0) to zero; larger
  // negative curvature raises.
  Cov2 repaired() const;
};

// Order-statistic estimator at rank floor(n*tau); both endpoints must be
// finite for the requested side.
QuantileSetEstimate quantile_set_continuous(const IntervalDataset& ds, double tau);

// Rank ceil(n*tau) variant for discrete outcomes (super-consistent).
QuantileSetEstimate quantile_set_discrete(const IntervalDataset& ds, double tau);

struct SigmaOptions {
  // Kernel bandwidth overrides for the endpoint density estimates; Silverman's
  // rule when unset.
  std::optional<double> bandwidth_lower;
  std::optional<double> bandwidth_upper;
};

// Plug-in estimate of the limiting covariance of
// sqrt(n) * (lower_est - q_lower, upper_est - q_upper):
// diagonals tau(1-tau)/f^2, off-diagonal (F_joint - tau^2)/(f_lower f_upper).
Cov2 sigma_continuous(const IntervalDataset& ds, double tau, const SigmaOptions& opts = {});

// (1 - alpha) quantile of the metric functional of N(0, sigma) draws:
// hausdorff -> max(|z1|, |z2|); directed -> max((z1)_+, (z2)_-); squared ->
// the directed value squared.
double simulate_critical_value(const Cov2& sigma, SetMetric metric, double alpha,
                               std::size_t draws, RngState rng);

struct SetTestResult {
  QuantileSetEstimate estimate;
  Cov2 sigma;
  double statistic = 0.0;
  double critical_value = 0.0;
  double scale = 0.0;  // sqrt(n), or n for the squared metric
  bool reject = false;
};

// Core of every set test: scale the metric between estimate and hypothesis by
// sqrt(n_effective) (n_effective for the squared metric) and compare against a
// critical value simulated from sigma.
SetTestResult evaluate_set_test(const QuantileSetEstimate& estimate, const Cov2& sigma,
                                std::size_t n_effective, const IntervalObs& hypothesized,
                                double alpha, SetMetric metric, std::size_t draws, RngState rng);

// Tests H0: quantile set equals `hypothesized` by comparing the scaled metric
// between the estimate and the hypothesis against a simulated critical value.
SetTestResult test_quantile_set(const IntervalDataset& ds, double tau,
                                const IntervalObs& hypothesized, double alpha, SetMetric metric,
                                std::size_t draws, RngState rng);

// Same test driven by the de-jittered estimator and its delta-method
// covariance (integer-valued outcomes).
SetTestResult test_quantile_set_jittered(const IntervalDataset& ds, double tau,
                                         const IntervalObs& hypothesized, double alpha,
                                         SetMetric metric, std::size_t draws, RngState rng);

// --- integer-valued outcomes ------------------------------------------------

// Adds independent U(0,1) noise to integer endpoints. Degenerate intervals
// receive a shared draw so the jittered interval stays valid.
IntervalDataset jitter(const IntervalDataset& ds, RngState rng);

// Marginal masses and joint table of integer endpoints on support {0..J-1}.
struct DiscreteMassTable {
  std::size_t J = 0;
  Eigen::VectorXd mass_lower;  // P(a = j)
  Eigen::VectorXd mass_upper;  // P(b = j)
  Eigen::MatrixXd joint;       // P(a = j, b = j')
};

DiscreteMassTable empirical_mass_table(const IntervalDataset& ds);

// Integer quantile of a mass vector: smallest j with cumulative mass >= tau.
std::size_t mass_quantile(const Eigen::VectorXd& mass, double tau);

// Covariance of (jittered lower/upper order statistics, empirical masses):
// a (2 + 2J) x (2 + 2J) matrix ordered (a~, b~, p_a(0..J-1), p_b(0..J-1)).
Eigen::MatrixXd big_sigma(const DiscreteMassTable& table, double tau);

// 2 x (2 + 2J) delta-method Jacobian of the de-jittering map.
Eigen::MatrixXd xi_matrix(const DiscreteMassTable& table, double tau);

struct JitteredEstimate {
  QuantileSetEstimate estimate;        // de-jittered endpoints
  QuantileSetEstimate integer_raw;     // ceil-rank integer estimates
  Cov2 sigma;                          // Xi * big_sigma * Xi'
};

// De-jittered estimator: the jittered rank-floor(n*tau) order statistic minus
// the fractional mass correction at the integer quantile estimate, with its
// delta-method covariance.
JitteredEstimate quantile_set_jittered(const IntervalDataset& ds, double tau, RngState rng);

// --- across-rank covariance -------------------------------------------------

// Population plug-ins used to evaluate the limit process covariance.
struct MarginalPlugin {
  std::function<double(double)> quantile_lower;  // rank -> q_a
  std::function<double(double)> quantile_upper;  // rank -> q_b
  std::function<double(double)> density_lower;   // value -> f_a
  std::function<double(double)> density_upper;   // value -> f_b
  std::function<double(double, double)> joint_cdf;
};

// Covariance of (Z_L(tau), Z_U(tau)) with (Z_L(t), Z_U(t)); entry (i, j) is
// E[Z_i(tau) Z_j(t)]. Symmetric only when tau == t, where it reproduces the
// single-rank covariance.
Eigen::Matrix2d process_covariance(double tau, double t, const MarginalPlugin& plugin);

}  // namespace intervalq
