#include "intervalq/dgp.hpp"

#include <algorithm>
#include <cmath>

#include "intervalq/stats.hpp"

namespace intervalq {

namespace {

IntervalDataset generate_continuous(std::size_t n, Rng& gen) {
  std::vector<IntervalObs> intervals;
  intervals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = gen.uniform01();
    const double w = gen.uniform01();
    intervals.push_back(IntervalObs{0.5 * v + 1.5 * w, 2.5 * v + 1.5 * w});
  }
  return IntervalDataset(std::move(intervals));
}

IntervalDataset generate_discrete(std::size_t n, double sd, Rng& gen) {
  std::vector<IntervalObs> intervals;
  intervals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = sd * gen.normal();
    const double t = std::ceil(y - 0.5);  // y in (t - 1/2, t + 1/2]
    intervals.push_back(IntervalObs{t - 0.5, t + 0.5});
  }
  return IntervalDataset(std::move(intervals));
}

IntervalDataset generate_conditional(std::size_t n, Rng& gen) {
  std::vector<IntervalObs> intervals;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
  intervals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = gen.normal();
    const double v = gen.uniform01();
    const double w = gen.uniform01();
    x(static_cast<Eigen::Index>(i), 0) = xi;
    const double lo = (0.5 + xi) * v + 1.5 * w;
    const double hi = (2.5 + xi) * v + 1.5 * w;
    intervals.push_back(IntervalObs{lo, hi});
  }
  return IntervalDataset(std::move(intervals), std::move(x));
}

IntervalDataset generate_parametric(std::size_t n, Rng& gen) {
  std::vector<IntervalObs> intervals;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 2);
  intervals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = gen.uniform01();
    const double eps = gen.uniform01();
    const double y = 1.0 + (1.0 + xi) * eps;
    const double m = std::ceil(y * 10.0);  // y in ((m-1)/10, m/10]
    x(static_cast<Eigen::Index>(i), 0) = 1.0;
    x(static_cast<Eigen::Index>(i), 1) = xi;
    intervals.push_back(IntervalObs{(m - 1.0) * 0.1, m * 0.1});
  }
  return IntervalDataset(std::move(intervals), std::move(x));
}

}  // namespace

IntervalDataset generate(const DgpSpec& spec, RngState rng) {
  if (spec.n < 1) throw invariant_error("sample size must be at least 1");
  Rng gen(rng);
  switch (spec.kind) {
    case DgpKind::continuous:
      return generate_continuous(spec.n, gen);
    case DgpKind::discrete:
      return generate_discrete(spec.n, spec.discrete_sd, gen);
    case DgpKind::conditional:
      return generate_conditional(spec.n, gen);
    case DgpKind::parametric:
      return generate_parametric(spec.n, gen);
  }
  throw invariant_error("unknown data-generating process");
}

Trapezoid Trapezoid::sum_of_uniforms(double c1, double c2) {
  Trapezoid t;
  t.alpha = std::min(std::abs(c1), std::abs(c2));
  t.beta = std::max(std::abs(c1), std::abs(c2));
  t.shift = std::min(c1, 0.0) + std::min(c2, 0.0);
  if (t.beta <= 0.0) throw invariant_error("sum of uniforms with both coefficients zero");
  return t;
}

double Trapezoid::cdf(double s) const {
  const double z = s - shift;
  if (z <= 0.0) return 0.0;
  if (z >= alpha + beta) return 1.0;
  if (z < alpha) return z * z / (2.0 * alpha * beta);
  if (z <= beta) return (z - 0.5 * alpha) / beta;
  const double r = alpha + beta - z;
  return 1.0 - r * r / (2.0 * alpha * beta);
}

double Trapezoid::pdf(double s) const {
  const double z = s - shift;
  if (z <= 0.0 || z >= alpha + beta) return 0.0;
  if (z < alpha) return z / (alpha * beta);
  if (z <= beta) return 1.0 / beta;
  return (alpha + beta - z) / (alpha * beta);
}

double Trapezoid::quantile(double tau) const {
  if (!(tau > 0.0 && tau < 1.0)) throw invariant_error("tau must lie in (0, 1)");
  const double corner = alpha > 0.0 ? alpha / (2.0 * beta) : 0.0;
  double z;
  if (tau < corner)
    z = std::sqrt(2.0 * alpha * beta * tau);
  else if (tau <= 1.0 - corner)
    z = tau * beta + 0.5 * alpha;
  else
    z = alpha + beta - std::sqrt(2.0 * alpha * beta * (1.0 - tau));
  return z + shift;
}

IntervalObs continuous_identified_set(double tau) {
  const auto lower = Trapezoid::sum_of_uniforms(0.5, 1.5);
  const auto upper = Trapezoid::sum_of_uniforms(2.5, 1.5);
  return IntervalObs{lower.quantile(tau), upper.quantile(tau)};
}

IntervalObs conditional_identified_set(double tau, double x) {
  const auto lower = Trapezoid::sum_of_uniforms(0.5 + x, 1.5);
  const auto upper = Trapezoid::sum_of_uniforms(2.5 + x, 1.5);
  return IntervalObs{lower.quantile(tau), upper.quantile(tau)};
}

IntervalObs discrete_identified_set(double tau, double sd) {
  if (!(tau > 0.0 && tau < 1.0)) throw invariant_error("tau must lie in (0, 1)");
  if (sd <= 0.0) throw invariant_error("noise scale must be positive");
  // P(lower <= j - 1/2) = P(upper <= j + 1/2) = Phi((j + 1/2) / sd); the
  // quantile of each endpoint sits at the same bin index.
  long j = static_cast<long>(std::floor(-6.0 * sd)) - 1;
  while (normal_cdf((static_cast<double>(j) + 0.5) / sd) < tau) ++j;
  const double t = static_cast<double>(j);
  return IntervalObs{t - 0.5, t + 0.5};
}

IntervalObs local_alternative(const IntervalObs& theta0, double delta, std::size_t n) {
  if (n < 1) throw invariant_error("sample size must be at least 1");
  const double shift = delta * theta0.width() / std::sqrt(static_cast<double>(n));
  return IntervalObs{theta0.lower + shift, theta0.upper + shift};
}

}  // namespace intervalq
