#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "intervalq/interval.hpp"
#include "intervalq/quantile_sets.hpp"
#include "intervalq/rng.hpp"

namespace intervalq {

// Plug-in bandwidth h_k = kappa * n^(-1/(2*gamma + p)) per covariate, with
// kappa = 1 / f_x(x_star) estimated by a product Gaussian kernel density.
Eigen::VectorXd bandwidth_rule(const IntervalDataset& ds, const Eigen::VectorXd& x_star,
                               double gamma);

// Local estimate at a covariate point: order statistics at rank
// ceil(local_n * tau) inside the product window |x_ik - x_star_k| < h_k,
// with the within-window covariance plug-in.
struct LocalFit {
  Eigen::VectorXd x_star;
  Eigen::VectorXd bandwidths;
  std::size_t local_n = 0;
  QuantileSetEstimate estimate;
  Cov2 sigma;
};

LocalFit local_quantile_set(const IntervalDataset& ds, double tau, const Eigen::VectorXd& x_star,
                            const Eigen::VectorXd& bandwidths);

// Set test at a covariate point; the statistic scales with the local window
// count rather than the full sample size.
SetTestResult test_conditional_quantile_set(const IntervalDataset& ds, double tau,
                                            const Eigen::VectorXd& x_star,
                                            const IntervalObs& hypothesized, double alpha,
                                            SetMetric metric, std::size_t draws, RngState rng,
                                            double gamma = 1.0);

}  // namespace intervalq
