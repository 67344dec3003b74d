#include "intervalq/quantile_sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "intervalq/stats.hpp"

namespace intervalq {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw invariant_error("tau must lie in (0, 1)");
}

std::size_t floor_rank(std::size_t n, double tau) {
  const double x = static_cast<double>(n) * tau;
  const auto k = static_cast<std::size_t>(std::floor(x + 1e-9));
  if (k < 1)
    throw invariant_error("floor(n*tau) < 1; tau too small for this sample size");
  return std::min(k, n);
}

std::size_t ceil_rank(std::size_t n, double tau) {
  const double x = static_cast<double>(n) * tau;
  auto k = static_cast<std::size_t>(std::ceil(x - 1e-9));
  if (k < 1) k = 1;
  return std::min(k, n);
}

void require_finite_endpoints(const IntervalDataset& ds) {
  for (const auto& obs : ds.intervals())
    if (std::isinf(obs.lower) || std::isinf(obs.upper))
      throw invariant_error("order-statistic estimator requires finite endpoints");
}

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

double metric_value(SetMetric metric, const IntervalObs& A, const IntervalObs& B) {
  switch (metric) {
    case SetMetric::hausdorff:
      return hausdorff(A, B);
    case SetMetric::directed_hausdorff:
      return directed_hausdorff(A, B);
    case SetMetric::squared_directed: {
      const double d = directed_hausdorff(A, B);
      return d * d;
    }
  }
  throw invariant_error("unknown metric");
}

double limit_draw(SetMetric metric, double z1, double z2) {
  switch (metric) {
    case SetMetric::hausdorff:
      return std::max(std::abs(z1), std::abs(z2));
    case SetMetric::directed_hausdorff:
      return std::max(positive_part(z1), positive_part(-z2));
    case SetMetric::squared_directed: {
      const double d = std::max(positive_part(z1), positive_part(-z2));
      return d * d;
    }
  }
  throw invariant_error("unknown metric");
}

void require_integer_lattice(const IntervalDataset& ds) {
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto& obs = ds.obs(i);
    double ip;
    if (std::modf(obs.lower, &ip) != 0.0 || std::modf(obs.upper, &ip) != 0.0 ||
        obs.lower < 0.0 || obs.upper < 0.0)
      throw invariant_error("endpoint off the nonnegative integer lattice at row " +
                            std::to_string(i));
  }
}

// Probability that the jittered value j + U lands at or below the jittered
// quantile: 1 below the atom, the fractional offset at the atom, 0 above.
double atom_weight(std::size_t j, std::size_t q, double frac) {
  if (j < q) return 1.0;
  if (j == q) return frac;
  return 0.0;
}

struct AtomInfo {
  std::size_t q = 0;     // integer quantile
  double mass = 0.0;     // mass at the quantile atom
  double below = 0.0;    // cumulative mass strictly below
  double frac = 0.0;     // fractional offset of the jittered quantile
};

AtomInfo atom_info(const Eigen::VectorXd& mass, double tau) {
  AtomInfo info;
  info.q = mass_quantile(mass, tau);
  info.mass = mass(static_cast<Eigen::Index>(info.q));
  for (std::size_t j = 0; j < info.q; ++j) info.below += mass(static_cast<Eigen::Index>(j));
  if (info.mass <= 0.0)
    throw invariant_error("zero mass at the estimated integer quantile");
  info.frac = (tau - info.below) / info.mass;
  if (!(info.frac > 0.0 && info.frac < 1.0))
    throw invariant_error("tau hits the jitter lattice; jittered quantile is an integer");
  return info;
}

}  // namespace

double hausdorff(const IntervalObs& A, const IntervalObs& B) {
  return std::max(std::abs(A.lower - B.lower), std::abs(A.upper - B.upper));
}

double directed_hausdorff(const IntervalObs& A, const IntervalObs& B) {
  return std::max(positive_part(B.lower - A.lower), positive_part(A.upper - B.upper));
}

Cov2 Cov2::repaired() const {
  Eigen::Matrix2d sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(sym);
  const double scale = std::max(1.0, sym.diagonal().cwiseAbs().maxCoeff());
  Eigen::Vector2d lambda = eig.eigenvalues();
  for (int i = 0; i < 2; ++i) {
    if (lambda(i) < -1e-8 * scale)
      throw invariant_error("covariance matrix is not positive semidefinite");
    if (lambda(i) < 0.0) lambda(i) = 0.0;
  }
  Cov2 out;
  out.m = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  return out;
}

QuantileSetEstimate quantile_set_continuous(const IntervalDataset& ds, double tau) {
  check_tau(tau);
  require_finite_endpoints(ds);
  const std::size_t k = floor_rank(ds.n(), tau);
  QuantileSetEstimate est;
  est.tau = tau;
  est.lower = order_statistic(ds.lowers(), k);
  est.upper = order_statistic(ds.uppers(), k);
  est.variant = EstimatorVariant::continuous;
  return est;
}

QuantileSetEstimate quantile_set_discrete(const IntervalDataset& ds, double tau) {
  check_tau(tau);
  require_finite_endpoints(ds);
  const std::size_t k = ceil_rank(ds.n(), tau);
  QuantileSetEstimate est;
  est.tau = tau;
  est.lower = order_statistic(ds.lowers(), k);
  est.upper = order_statistic(ds.uppers(), k);
  est.variant = EstimatorVariant::discrete;
  return est;
}

Cov2 sigma_continuous(const IntervalDataset& ds, double tau, const SigmaOptions& opts) {
  check_tau(tau);
  const QuantileSetEstimate est = quantile_set_continuous(ds, tau);
  const std::vector<double> lowers = ds.lowers();
  const std::vector<double> uppers = ds.uppers();
  const double bw_lo = opts.bandwidth_lower ? *opts.bandwidth_lower : silverman_bandwidth(lowers);
  const double bw_hi = opts.bandwidth_upper ? *opts.bandwidth_upper : silverman_bandwidth(uppers);
  const double f_lo = kde_gaussian_at(lowers, bw_lo, est.lower);
  const double f_hi = kde_gaussian_at(uppers, bw_hi, est.upper);
  if (f_lo < 1e-12 || f_hi < 1e-12)
    throw invariant_error("density degenerate at an estimated quantile; variance undefined");

  std::size_t joint_count = 0;
  for (const auto& obs : ds.intervals())
    if (obs.lower <= est.lower && obs.upper <= est.upper) ++joint_count;
  const double joint_cdf = static_cast<double>(joint_count) / static_cast<double>(ds.n());

  Cov2 sigma;
  sigma.m(0, 0) = tau * (1.0 - tau) / (f_lo * f_lo);
  sigma.m(1, 1) = tau * (1.0 - tau) / (f_hi * f_hi);
  sigma.m(0, 1) = sigma.m(1, 0) = (joint_cdf - tau * tau) / (f_lo * f_hi);
  return sigma.repaired();
}

double simulate_critical_value(const Cov2& sigma, SetMetric metric, double alpha,
                               std::size_t draws, RngState rng) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw invariant_error("alpha must lie in (0, 1)");
  if (draws < 100) throw invariant_error("critical-value simulation needs at least 100 draws");
  const Cov2 psd = sigma.repaired();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(psd.m);
  Eigen::Vector2d sqrt_lambda = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix2d factor = eig.eigenvectors() * sqrt_lambda.asDiagonal();

  Rng gen(rng);
  std::vector<double> values(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    const double n1 = gen.normal();
    const double n2 = gen.normal();
    const double z1 = factor(0, 0) * n1 + factor(0, 1) * n2;
    const double z2 = factor(1, 0) * n1 + factor(1, 1) * n2;
    values[i] = limit_draw(metric, z1, z2);
  }
  const auto k = static_cast<std::size_t>(
      std::ceil((1.0 - alpha) * static_cast<double>(draws) - 1e-9));
  return order_statistic(std::move(values), std::max<std::size_t>(k, 1));
}

SetTestResult evaluate_set_test(const QuantileSetEstimate& est, const Cov2& sigma,
                                std::size_t n_effective, const IntervalObs& hypothesized,
                                double alpha, SetMetric metric, std::size_t draws, RngState rng) {
  validate_interval(hypothesized, 0);
  SetTestResult out;
  out.estimate = est;
  out.sigma = sigma;
  out.scale = metric == SetMetric::squared_directed
                  ? static_cast<double>(n_effective)
                  : std::sqrt(static_cast<double>(n_effective));
  out.statistic = out.scale * metric_value(metric, est.as_interval(), hypothesized);
  out.critical_value = simulate_critical_value(sigma, metric, alpha, draws, rng);
  out.reject = out.statistic > out.critical_value;
  return out;
}

SetTestResult test_quantile_set(const IntervalDataset& ds, double tau,
                                const IntervalObs& hypothesized, double alpha, SetMetric metric,
                                std::size_t draws, RngState rng) {
  const QuantileSetEstimate est = quantile_set_continuous(ds, tau);
  const Cov2 sigma = sigma_continuous(ds, tau);
  return evaluate_set_test(est, sigma, ds.n(), hypothesized, alpha, metric, draws, rng);
}

SetTestResult test_quantile_set_jittered(const IntervalDataset& ds, double tau,
                                         const IntervalObs& hypothesized, double alpha,
                                         SetMetric metric, std::size_t draws, RngState rng) {
  const JitteredEstimate je = quantile_set_jittered(ds, tau, rng.substream(0));
  return evaluate_set_test(je.estimate, je.sigma, ds.n(), hypothesized, alpha, metric,
                           draws, rng.substream(1));
}

IntervalDataset jitter(const IntervalDataset& ds, RngState rng) {
  require_integer_lattice(ds);
  Rng gen(rng);
  std::vector<IntervalObs> out;
  out.reserve(ds.n());
  for (const auto& obs : ds.intervals()) {
    const double u = gen.uniform01();
    const double v = obs.degenerate() ? u : gen.uniform01();
    out.push_back(IntervalObs{obs.lower + u, obs.upper + v});
  }
  return IntervalDataset(std::move(out), ds.covariates());
}

DiscreteMassTable empirical_mass_table(const IntervalDataset& ds) {
  require_integer_lattice(ds);
  double max_value = 0.0;
  for (const auto& obs : ds.intervals()) max_value = std::max(max_value, obs.upper);
  DiscreteMassTable table;
  table.J = static_cast<std::size_t>(max_value) + 1;
  const auto J = static_cast<Eigen::Index>(table.J);
  table.mass_lower = Eigen::VectorXd::Zero(J);
  table.mass_upper = Eigen::VectorXd::Zero(J);
  table.joint = Eigen::MatrixXd::Zero(J, J);
  const double w = 1.0 / static_cast<double>(ds.n());
  for (const auto& obs : ds.intervals()) {
    const auto ja = static_cast<Eigen::Index>(obs.lower);
    const auto jb = static_cast<Eigen::Index>(obs.upper);
    table.mass_lower(ja) += w;
    table.mass_upper(jb) += w;
    table.joint(ja, jb) += w;
  }
  return table;
}

std::size_t mass_quantile(const Eigen::VectorXd& mass, double tau) {
  check_tau(tau);
  double cum = 0.0;
  for (Eigen::Index j = 0; j < mass.size(); ++j) {
    cum += mass(j);
    if (cum >= tau) return static_cast<std::size_t>(j);
  }
  throw invariant_error("mass vector does not accumulate to tau");
}

Eigen::MatrixXd big_sigma(const DiscreteMassTable& table, double tau) {
  const AtomInfo a = atom_info(table.mass_lower, tau);
  const AtomInfo b = atom_info(table.mass_upper, tau);
  const auto J = static_cast<Eigen::Index>(table.J);
  const auto dim = 2 + 2 * J;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(dim, dim);

  // Joint CDF of the jittered pair at the jittered quantiles.
  double joint_tilde = 0.0;
  for (Eigen::Index j = 0; j < J; ++j)
    for (Eigen::Index k = 0; k < J; ++k)
      joint_tilde += table.joint(j, k) * atom_weight(static_cast<std::size_t>(j), a.q, a.frac) *
                     atom_weight(static_cast<std::size_t>(k), b.q, b.frac);

  S(0, 0) = tau * (1.0 - tau) / (a.mass * a.mass);
  S(1, 1) = tau * (1.0 - tau) / (b.mass * b.mass);
  S(0, 1) = S(1, 0) = (joint_tilde - tau * tau) / (a.mass * b.mass);

  for (Eigen::Index j = 0; j < J; ++j) {
    const double ca = atom_weight(static_cast<std::size_t>(j), a.q, a.frac);
    const double cb = atom_weight(static_cast<std::size_t>(j), b.q, b.frac);
    // Cross-covariance of the jittered order statistic with each mass.
    S(0, 2 + j) = S(2 + j, 0) = table.mass_lower(j) * (tau - ca) / a.mass;
    S(1, 2 + J + j) = S(2 + J + j, 1) = table.mass_upper(j) * (tau - cb) / b.mass;
    double ga = 0.0;  // P(jittered lower <= quantile, upper mass = j)
    double gb = 0.0;  // P(lower mass = j, jittered upper <= quantile)
    for (Eigen::Index k = 0; k < J; ++k) {
      ga += table.joint(k, j) * atom_weight(static_cast<std::size_t>(k), a.q, a.frac);
      gb += table.joint(j, k) * atom_weight(static_cast<std::size_t>(k), b.q, b.frac);
    }
    S(0, 2 + J + j) = S(2 + J + j, 0) = (tau * table.mass_upper(j) - ga) / a.mass;
    S(1, 2 + j) = S(2 + j, 1) = (tau * table.mass_lower(j) - gb) / b.mass;
  }

  for (Eigen::Index j = 0; j < J; ++j) {
    for (Eigen::Index k = 0; k < J; ++k) {
      const double delta = j == k ? 1.0 : 0.0;
      S(2 + j, 2 + k) = table.mass_lower(j) * (delta - table.mass_lower(k));
      S(2 + J + j, 2 + J + k) = table.mass_upper(j) * (delta - table.mass_upper(k));
      S(2 + j, 2 + J + k) = table.joint(j, k) - table.mass_lower(j) * table.mass_upper(k);
      S(2 + J + k, 2 + j) = S(2 + j, 2 + J + k);
    }
  }
  return S;
}

Eigen::MatrixXd xi_matrix(const DiscreteMassTable& table, double tau) {
  const AtomInfo a = atom_info(table.mass_lower, tau);
  const AtomInfo b = atom_info(table.mass_upper, tau);
  const auto J = static_cast<Eigen::Index>(table.J);
  Eigen::MatrixXd Xi = Eigen::MatrixXd::Zero(2, 2 + 2 * J);
  Xi(0, 0) = 1.0;
  Xi(1, 1) = 1.0;
  for (Eigen::Index j = 0; j < J; ++j) {
    Xi(0, 2 + j) = atom_weight(static_cast<std::size_t>(j), a.q, a.frac) / a.mass;
    Xi(1, 2 + J + j) = atom_weight(static_cast<std::size_t>(j), b.q, b.frac) / b.mass;
  }
  return Xi;
}

JitteredEstimate quantile_set_jittered(const IntervalDataset& ds, double tau, RngState rng) {
  check_tau(tau);
  require_integer_lattice(ds);
  const IntervalDataset jittered = jitter(ds, rng);
  const std::size_t k_floor = floor_rank(ds.n(), tau);
  const double a_tilde = order_statistic(jittered.lowers(), k_floor);
  const double b_tilde = order_statistic(jittered.uppers(), k_floor);
  double ip;
  if (std::modf(a_tilde, &ip) == 0.0 || std::modf(b_tilde, &ip) == 0.0)
    throw invariant_error("jittered order statistic landed exactly on the integer lattice");

  const DiscreteMassTable table = empirical_mass_table(ds);
  const AtomInfo a = atom_info(table.mass_lower, tau);
  const AtomInfo b = atom_info(table.mass_upper, tau);

  JitteredEstimate out;
  out.integer_raw = quantile_set_discrete(ds, tau);
  // The mass-based integer quantile and the ceil-rank order statistic agree.
  if (static_cast<double>(a.q) != out.integer_raw.lower ||
      static_cast<double>(b.q) != out.integer_raw.upper)
    throw invariant_error("integer quantile estimate disagrees with the mass table");

  out.estimate.tau = tau;
  out.estimate.variant = EstimatorVariant::jittered;
  out.estimate.lower = a_tilde - (tau - a.below) / a.mass;
  out.estimate.upper = b_tilde - (tau - b.below) / b.mass;

  const Eigen::MatrixXd S = big_sigma(table, tau);
  const Eigen::MatrixXd Xi = xi_matrix(table, tau);
  const Eigen::Matrix2d cov = (Xi * S * Xi.transpose()).eval();
  Cov2 sigma;
  sigma.m = cov;
  out.sigma = sigma.repaired();
  return out;
}

Eigen::Matrix2d process_covariance(double tau, double t, const MarginalPlugin& plugin) {
  check_tau(tau);
  check_tau(t);
  const double qa_tau = plugin.quantile_lower(tau);
  const double qa_t = plugin.quantile_lower(t);
  const double qb_tau = plugin.quantile_upper(tau);
  const double qb_t = plugin.quantile_upper(t);
  const double fa_tau = plugin.density_lower(qa_tau);
  const double fa_t = plugin.density_lower(qa_t);
  const double fb_tau = plugin.density_upper(qb_tau);
  const double fb_t = plugin.density_upper(qb_t);
  if (fa_tau < 1e-12 || fa_t < 1e-12 || fb_tau < 1e-12 || fb_t < 1e-12)
    throw invariant_error("density degenerate at a requested quantile");

  const double common = std::min(tau, t) - tau * t;
  Eigen::Matrix2d M;
  M(0, 0) = common / (fa_tau * fa_t);
  M(1, 1) = common / (fb_tau * fb_t);
  M(0, 1) = (plugin.joint_cdf(qa_tau, qb_t) - tau * t) / (fa_tau * fb_t);
  M(1, 0) = (plugin.joint_cdf(qa_t, qb_tau) - tau * t) / (fb_tau * fa_t);
  return M;
}

}  // namespace intervalq
