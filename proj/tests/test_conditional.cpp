#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "intervalq/conditional.hpp"
#include "intervalq/dgp.hpp"
#include "intervalq/errors.hpp"
#include "intervalq/quantile_sets.hpp"

using namespace intervalq;

namespace {

IntervalDataset conditional_sample(std::size_t n, std::uint64_t stream) {
  return generate(DgpSpec{DgpKind::conditional, n}, RngState{77, stream});
}

}  // namespace

TEST_CASE("bandwidth rule matches the plug-in formula at a standard normal point") {
  const std::size_t n = 4000;
  const IntervalDataset ds = conditional_sample(n, 1);
  Eigen::VectorXd x0(1);
  x0[0] = 0.0;
  const Eigen::VectorXd h = bandwidth_rule(ds, x0, 1.0);
  REQUIRE(h.size() == 1);
  // kappa = 1 / f_x(0) with f_x the standard normal density, so about 2.5066;
  // the kernel estimate deviates by a few percent at this sample size.
  const double expected = std::sqrt(2.0 * M_PI) * std::pow(static_cast<double>(n), -1.0 / 3.0);
  CHECK(h[0] == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("bandwidth rule shrinks with smoothness order and with sample size") {
  const IntervalDataset ds = conditional_sample(2000, 2);
  Eigen::VectorXd x0(1);
  x0[0] = 0.0;
  const double h1 = bandwidth_rule(ds, x0, 1.0)[0];
  const double h2 = bandwidth_rule(ds, x0, 2.0)[0];
  CHECK(h2 > h1);  // higher smoothness widens the window: n^(-1/5) vs n^(-1/3)

  const IntervalDataset small = conditional_sample(200, 3);
  const double h_small = bandwidth_rule(small, x0, 1.0)[0];
  CHECK(h_small > 0.0);
  // Same kappa scale, larger n^-1/3 factor.
  CHECK(h_small > 0.6 * h1);
}

TEST_CASE("bandwidth rule rejects invalid smoothness and empty-density points") {
  const IntervalDataset ds = conditional_sample(500, 4);
  Eigen::VectorXd x0(1);
  x0[0] = 0.0;
  CHECK_THROWS_AS(bandwidth_rule(ds, x0, 0.2), invariant_error);
  Eigen::VectorXd far(1);
  far[0] = 250.0;  // density numerically zero here
  CHECK_THROWS_AS(bandwidth_rule(ds, far, 1.0), invariant_error);
}

TEST_CASE("local estimate at x*=0 approaches the unconditional identified set") {
  // At x* = 0 the conditional model coincides with the unconditional
  // continuous model, so the local estimate should approach its closed-form
  // identification set.
  const std::size_t n = 60000;
  const IntervalDataset ds = conditional_sample(n, 5);
  Eigen::VectorXd x0(1);
  x0[0] = 0.0;
  const Eigen::VectorXd h = bandwidth_rule(ds, x0, 1.0);
  const double tau = 0.5;
  const LocalFit fit = local_quantile_set(ds, tau, x0, h);
  const IntervalObs truth = continuous_identified_set(tau);
  CHECK(fit.estimate.lower == doctest::Approx(truth.lower).epsilon(0.12));
  CHECK(fit.estimate.upper == doctest::Approx(truth.upper).epsilon(0.12));
  CHECK(fit.local_n >= 100);
  CHECK(fit.local_n < n);
}

TEST_CASE("local estimate tracks the covariate point") {
  const std::size_t n = 60000;
  const IntervalDataset ds = conditional_sample(n, 6);
  const double tau = 0.5;
  Eigen::VectorXd xm(1), xp(1);
  xm[0] = -0.8;
  xp[0] = 0.8;
  const LocalFit at_minus = local_quantile_set(ds, tau, xm, bandwidth_rule(ds, xm, 1.0));
  const LocalFit at_plus = local_quantile_set(ds, tau, xp, bandwidth_rule(ds, xp, 1.0));
  const IntervalObs truth_minus = conditional_identified_set(tau, -0.8);
  const IntervalObs truth_plus = conditional_identified_set(tau, 0.8);
  CHECK(at_minus.estimate.lower == doctest::Approx(truth_minus.lower).epsilon(0.2));
  CHECK(at_plus.estimate.upper == doctest::Approx(truth_plus.upper).epsilon(0.2));
  // Monotone shift of the upper endpoint with x.
  CHECK(at_plus.estimate.upper > at_minus.estimate.upper);
}

TEST_CASE("sparse windows are refused") {
  const IntervalDataset ds = conditional_sample(300, 7);
  Eigen::VectorXd x0(1);
  x0[0] = 0.0;
  Eigen::VectorXd tiny(1);
  tiny[0] = 1e-6;
  CHECK_THROWS_WITH_AS(local_quantile_set(ds, 0.5, x0, tiny),
                       doctest::Contains("window too sparse"), invariant_error);
}

TEST_CASE("conditional covariance is symmetric positive semidefinite") {
  const IntervalDataset ds = conditional_sample(20000, 8);
  Eigen::VectorXd x0(1);
  x0[0] = 0.0;
  const LocalFit fit = local_quantile_set(ds, 0.5, x0, bandwidth_rule(ds, x0, 1.0));
  CHECK(fit.sigma.m(0, 1) == doctest::Approx(fit.sigma.m(1, 0)).epsilon(1e-12));
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(fit.sigma.m);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  // At x*=0 the window-local covariance should roughly agree with the
  // unconditional plug-in on the same model.
  const Cov2 uncond = sigma_continuous(generate(DgpSpec{DgpKind::continuous, 20000},
                                                RngState{77, 9}),
                                       0.5);
  CHECK(fit.sigma.m(0, 0) == doctest::Approx(uncond.m(0, 0)).epsilon(0.35));
  CHECK(fit.sigma.m(1, 1) == doctest::Approx(uncond.m(1, 1)).epsilon(0.35));
}

TEST_CASE("conditional set test accepts the truth and rejects a shifted set") {
  const IntervalDataset ds = conditional_sample(20000, 10);
  Eigen::VectorXd x0(1);
  x0[0] = 0.0;
  const double tau = 0.5;
  const IntervalObs truth = conditional_identified_set(tau, 0.0);

  const SetTestResult at_truth = test_conditional_quantile_set(
      ds, tau, x0, truth, 0.05, SetMetric::hausdorff, 20000, RngState{11, 0});
  CHECK_FALSE(at_truth.reject);

  const IntervalObs shifted{truth.lower + 0.6, truth.upper + 0.6};
  const SetTestResult off = test_conditional_quantile_set(
      ds, tau, x0, shifted, 0.05, SetMetric::hausdorff, 20000, RngState{11, 1});
  CHECK(off.reject);
  CHECK(off.statistic > off.critical_value);
}

TEST_CASE("conditional test statistic scales with the window count") {
  const IntervalDataset ds = conditional_sample(20000, 12);
  Eigen::VectorXd x0(1);
  x0[0] = 0.0;
  const double tau = 0.5;
  const IntervalObs truth = conditional_identified_set(tau, 0.0);
  const Eigen::VectorXd h = bandwidth_rule(ds, x0, 1.0);
  const LocalFit fit = local_quantile_set(ds, tau, x0, h);
  const SetTestResult res = test_conditional_quantile_set(
      ds, tau, x0, truth, 0.05, SetMetric::hausdorff, 5000, RngState{13, 0});
  const double expected_stat = std::sqrt(static_cast<double>(fit.local_n)) *
                               hausdorff(fit.estimate.as_interval(), truth);
  CHECK(res.statistic == doctest::Approx(expected_stat).epsilon(1e-12));
  CHECK(res.scale == doctest::Approx(std::sqrt(static_cast<double>(fit.local_n))).epsilon(1e-12));
}
