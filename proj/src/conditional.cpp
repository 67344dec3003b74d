#include "intervalq/conditional.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "intervalq/stats.hpp"

namespace intervalq {

namespace {

void check_covariates(const IntervalDataset& ds, const Eigen::VectorXd& x_star) {
  if (ds.p() == 0) throw invariant_error("conditional estimation needs covariates");
  if (static_cast<std::size_t>(x_star.size()) != ds.p())
    throw invariant_error("covariate point dimension does not match the dataset");
}

std::vector<std::size_t> window_indices(const IntervalDataset& ds, const Eigen::VectorXd& x_star,
                                        const Eigen::VectorXd& bandwidths) {
  std::vector<std::size_t> idx;
  const auto& x = ds.covariates();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    bool inside = true;
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      if (!(std::abs(x(i, k) - x_star(k)) < bandwidths(k))) {
        inside = false;
        break;
      }
    }
    if (inside) idx.push_back(static_cast<std::size_t>(i));
  }
  return idx;
}

}  // namespace

Eigen::VectorXd bandwidth_rule(const IntervalDataset& ds, const Eigen::VectorXd& x_star,
                               double gamma) {
  check_covariates(ds, x_star);
  if (!(gamma >= 0.5)) throw invariant_error("smoothness order gamma must be at least 0.5");
  const auto& x = ds.covariates();
  const auto n = static_cast<double>(ds.n());
  const auto p = static_cast<double>(ds.p());

  // Product Gaussian KDE of the covariate density at x_star.
  Eigen::VectorXd kde_bw(x.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    std::vector<double> col(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) col[static_cast<std::size_t>(i)] = x(i, k);
    kde_bw(k) = silverman_bandwidth(col);
  }
  double density = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double prod = 1.0;
    for (Eigen::Index k = 0; k < x.cols(); ++k)
      prod *= normal_pdf((x_star(k) - x(i, k)) / kde_bw(k)) / kde_bw(k);
    density += prod;
  }
  density /= n;
  if (density < 1e-12)
    throw invariant_error("covariate density degenerate at the requested point");

  const double kappa = 1.0 / density;
  const double h = kappa * std::pow(n, -1.0 / (2.0 * gamma + p));
  return Eigen::VectorXd::Constant(x.cols(), h);
}

LocalFit local_quantile_set(const IntervalDataset& ds, double tau, const Eigen::VectorXd& x_star,
                            const Eigen::VectorXd& bandwidths) {
  check_covariates(ds, x_star);
  if (!(tau > 0.0 && tau < 1.0)) throw invariant_error("tau must lie in (0, 1)");
  if (bandwidths.size() != x_star.size() || bandwidths.minCoeff() <= 0.0)
    throw invariant_error("bandwidths must be positive and match the covariate dimension");

  const auto idx = window_indices(ds, x_star, bandwidths);
  const auto needed = static_cast<std::size_t>(
      std::max(5.0, std::ceil(1.0 / std::min(tau, 1.0 - tau))));
  if (idx.size() < needed)
    throw invariant_error("window too sparse at the requested covariate point (" +
                          std::to_string(idx.size()) + " observations)");

  std::vector<double> lowers, uppers;
  lowers.reserve(idx.size());
  uppers.reserve(idx.size());
  for (std::size_t i : idx) {
    const auto& obs = ds.obs(i);
    if (std::isinf(obs.lower) || std::isinf(obs.upper))
      throw invariant_error("local estimator requires finite endpoints");
    lowers.push_back(obs.lower);
    uppers.push_back(obs.upper);
  }

  const auto local_n = idx.size();
  const auto rank = static_cast<std::size_t>(
      std::ceil(static_cast<double>(local_n) * tau - 1e-9));
  LocalFit fit;
  fit.x_star = x_star;
  fit.bandwidths = bandwidths;
  fit.local_n = local_n;
  fit.estimate.tau = tau;
  fit.estimate.variant = EstimatorVariant::continuous;
  fit.estimate.lower = order_statistic(lowers, std::max<std::size_t>(rank, 1));
  fit.estimate.upper = order_statistic(uppers, std::max<std::size_t>(rank, 1));

  const double bw_lo = silverman_bandwidth(lowers);
  const double bw_hi = silverman_bandwidth(uppers);
  const double f_lo = kde_gaussian_at(lowers, bw_lo, fit.estimate.lower);
  const double f_hi = kde_gaussian_at(uppers, bw_hi, fit.estimate.upper);
  if (f_lo < 1e-12 || f_hi < 1e-12)
    throw invariant_error("density degenerate at a local quantile; variance undefined");
  std::size_t joint = 0;
  for (std::size_t i = 0; i < local_n; ++i)
    if (lowers[i] <= fit.estimate.lower && uppers[i] <= fit.estimate.upper) ++joint;
  const double joint_cdf = static_cast<double>(joint) / static_cast<double>(local_n);

  Cov2 sigma;
  sigma.m(0, 0) = tau * (1.0 - tau) / (f_lo * f_lo);
  sigma.m(1, 1) = tau * (1.0 - tau) / (f_hi * f_hi);
  sigma.m(0, 1) = sigma.m(1, 0) = (joint_cdf - tau * tau) / (f_lo * f_hi);
  fit.sigma = sigma.repaired();
  return fit;
}

SetTestResult test_conditional_quantile_set(const IntervalDataset& ds, double tau,
                                            const Eigen::VectorXd& x_star,
                                            const IntervalObs& hypothesized, double alpha,
                                            SetMetric metric, std::size_t draws, RngState rng,
                                            double gamma) {
  const Eigen::VectorXd h = bandwidth_rule(ds, x_star, gamma);
  const LocalFit fit = local_quantile_set(ds, tau, x_star, h);
  return evaluate_set_test(fit.estimate, fit.sigma, fit.local_n, hypothesized, alpha, metric,
                           draws, rng);
}

}  // namespace intervalq
