#include "intervalq/moment_inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "intervalq/errors.hpp"

namespace intervalq {

namespace {

// Cell memberships of all observations at one instrument depth. Cells are the
// (2r)^p_eff boxes of the normalized nonconstant covariates; a collapsed-range
// coordinate never reaches this point because collapsed columns are dropped.
struct DepthLayout {
  std::size_t r = 0;
  std::size_t cells = 1;
  std::vector<std::uint32_t> cell_of;
};

struct InstrumentLayout {
  std::vector<Eigen::Index> cols;  // instrumented (nonconstant) columns
  Eigen::VectorXd lo, hi;          // normalization bounds, frozen from the data
  std::vector<DepthLayout> depths;
  std::size_t p_eff = 0;
};

int coordinate_cell(double u, std::size_t r) {
  const int bins = static_cast<int>(2 * r);
  if (u <= 0.0) return 0;
  int c = static_cast<int>(std::ceil(u * bins - 1e-12)) - 1;
  return std::clamp(c, 0, bins - 1);
}

InstrumentLayout build_instruments(const IntervalDataset& ds, std::size_t R) {
  InstrumentLayout layout;
  const Eigen::MatrixXd& x = ds.covariates();
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double lo = x.col(k).minCoeff();
    const double hi = x.col(k).maxCoeff();
    if (hi > lo) {
      layout.cols.push_back(k);
    }
  }
  layout.p_eff = layout.cols.size();
  layout.lo.resize(static_cast<Eigen::Index>(layout.p_eff));
  layout.hi.resize(static_cast<Eigen::Index>(layout.p_eff));
  for (std::size_t j = 0; j < layout.p_eff; ++j) {
    layout.lo[static_cast<Eigen::Index>(j)] = x.col(layout.cols[j]).minCoeff();
    layout.hi[static_cast<Eigen::Index>(j)] = x.col(layout.cols[j]).maxCoeff();
  }
  const std::size_t n = ds.n();
  for (std::size_t r = 1; r <= R; ++r) {
    DepthLayout d;
    d.r = r;
    d.cells = 1;
    for (std::size_t j = 0; j < layout.p_eff; ++j) d.cells *= 2 * r;
    d.cell_of.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t id = 0;
      for (std::size_t j = 0; j < layout.p_eff; ++j) {
        const Eigen::Index jj = static_cast<Eigen::Index>(j);
        const double span = layout.hi[jj] - layout.lo[jj];
        const double u = (x(static_cast<Eigen::Index>(i), layout.cols[j]) - layout.lo[jj]) / span;
        id = id * static_cast<std::uint32_t>(2 * r) +
             static_cast<std::uint32_t>(coordinate_cell(u, r));
      }
      d.cell_of[i] = id;
    }
    layout.depths.push_back(std::move(d));
  }
  return layout;
}

struct TuningValues {
  double kappa = 0.0;
  double slack = 0.0;
};

TuningValues resolve_tuning(const MomentConfig& cfg, std::size_t n) {
  TuningValues t;
  if (cfg.gms_threshold) {
    t.kappa = *cfg.gms_threshold;
  } else {
    t.kappa = std::sqrt(0.3 * std::log(static_cast<double>(n)));
  }
  if (cfg.gms_slack) {
    t.slack = *cfg.gms_slack;
  } else {
    const double ll = std::log(std::log(static_cast<double>(n)));
    if (!(ll > 0.0)) {
      throw invariant_error("sample too small for the default selection slack; set gms_slack");
    }
    t.slack = std::sqrt(0.4 * std::log(static_cast<double>(n)) / ll);
  }
  if (!(t.kappa > 0.0) || !(t.slack >= 0.0)) {
    throw invariant_error("invalid moment-selection tuning constants");
  }
  return t;
}

// Per-cell first and second moments of both inequality functions, plus the
// full-sample (unconditional) means and variances.
struct CellStats {
  std::vector<double> count;
  std::vector<double> sum1, sumsq1, sum2, sumsq2;
  void resize(std::size_t cells) {
    count.assign(cells, 0.0);
    sum1.assign(cells, 0.0);
    sumsq1.assign(cells, 0.0);
    sum2.assign(cells, 0.0);
    sumsq2.assign(cells, 0.0);
  }
};

struct MomentVectors {
  std::vector<double> m1, m2;
  double mean1 = 0.0, mean2 = 0.0;
  double var1 = 0.0, var2 = 0.0;  // population-style 1/n variances
};

MomentVectors compute_moments(const IntervalDataset& ds, const Eigen::VectorXd& theta,
                              double tau) {
  const std::size_t n = ds.n();
  MomentVectors mv;
  mv.m1.resize(n);
  mv.m2.resize(n);
  Eigen::VectorXd xtheta = ds.covariates() * theta;
  for (std::size_t i = 0; i < n; ++i) {
    auto [a, b] = interval_moments(ds.obs(i), xtheta[static_cast<Eigen::Index>(i)], tau);
    mv.m1[i] = a;
    mv.m2[i] = b;
    mv.mean1 += a;
    mv.mean2 += b;
  }
  mv.mean1 /= static_cast<double>(n);
  mv.mean2 /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    mv.var1 += (mv.m1[i] - mv.mean1) * (mv.m1[i] - mv.mean1);
    mv.var2 += (mv.m2[i] - mv.mean2) * (mv.m2[i] - mv.mean2);
  }
  mv.var1 /= static_cast<double>(n);
  mv.var2 /= static_cast<double>(n);
  return mv;
}

void accumulate_cells(const DepthLayout& depth, const MomentVectors& mv, CellStats* out) {
  out->resize(depth.cells);
  for (std::size_t i = 0; i < mv.m1.size(); ++i) {
    const std::uint32_t c = depth.cell_of[i];
    out->count[c] += 1.0;
    out->sum1[c] += mv.m1[i];
    out->sumsq1[c] += mv.m1[i] * mv.m1[i];
    out->sum2[c] += mv.m2[i];
    out->sumsq2[c] += mv.m2[i] * mv.m2[i];
  }
}

double negative_part_squared(double x) {
  const double neg = std::min(x, 0.0);
  return neg * neg;
}

double depth_weight(std::size_t r, std::size_t p_eff) {
  const double dr = static_cast<double>(r);
  double w = 1.0 / (dr * dr + 100.0);
  w *= std::pow(1.0 / (2.0 * dr), static_cast<double>(p_eff));
  return w;
}

// One studentized cell term for the sample statistic. `nwhole` is the full
// sample size: cell means are sums over the cell divided by n, matching the
// indicator-instrument moment E[m g].
double cell_term(double sum, double sumsq, double nwhole, double uncond_var, double eps,
                 double sqrt_n) {
  const double mbar = sum / nwhole;
  const double cvar = sumsq / nwhole - mbar * mbar;
  const double var = std::max(cvar, 0.0) + eps * uncond_var;
  if (var <= 0.0) {
    if (mbar < -1e-12) {
      throw invariant_error("degenerate variance on a violated moment inequality");
    }
    return 0.0;
  }
  return negative_part_squared(sqrt_n * mbar / std::sqrt(var));
}

}  // namespace

std::pair<double, double> interval_moments(const IntervalObs& y, double x_theta, double tau) {
  const double m1 = (y.lower <= x_theta ? 1.0 : 0.0) - tau;
  const double m2 = tau - (y.upper <= x_theta ? 1.0 : 0.0);
  return {m1, m2};
}

Eigen::VectorXd box_instruments(const Eigen::VectorXd& x_normalized, std::size_t r) {
  if (r == 0) throw invariant_error("instrument depth must be positive");
  const std::size_t p = static_cast<std::size_t>(x_normalized.size());
  std::size_t cells = 1;
  for (std::size_t j = 0; j < p; ++j) cells *= 2 * r;
  std::size_t id = 0;
  for (std::size_t j = 0; j < p; ++j) {
    const double u = x_normalized[static_cast<Eigen::Index>(j)];
    if (u < -1e-12 || u > 1.0 + 1e-12) {
      throw invariant_error("normalized covariate outside [0, 1]");
    }
    id = id * (2 * r) + static_cast<std::size_t>(coordinate_cell(u, r));
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cells));
  g[static_cast<Eigen::Index>(id)] = 1.0;
  return g;
}

double test_statistic(const IntervalDataset& ds, const Eigen::VectorXd& theta, double tau,
                      const MomentConfig& cfg) {
  if (ds.p() == 0) throw invariant_error("moment test needs covariates");
  if (theta.size() != static_cast<Eigen::Index>(ds.p())) {
    throw invariant_error("theta dimension does not match the covariates");
  }
  if (!(tau > 0.0 && tau < 1.0)) throw invariant_error("tau must lie strictly inside (0, 1)");
  if (cfg.instrument_depth == 0) throw invariant_error("instrument depth must be positive");

  const InstrumentLayout layout = build_instruments(ds, cfg.instrument_depth);
  const MomentVectors mv = compute_moments(ds, theta, tau);
  const double n = static_cast<double>(ds.n());
  const double sqrt_n = std::sqrt(n);
  const double eps = cfg.variance_regularizer;

  double stat = 0.0;
  CellStats cs;
  for (const DepthLayout& depth : layout.depths) {
    accumulate_cells(depth, mv, &cs);
    double inner = 0.0;
    for (std::size_t c = 0; c < depth.cells; ++c) {
      if (cs.count[c] == 0.0) continue;
      inner += cell_term(cs.sum1[c], cs.sumsq1[c], n, mv.var1, eps, sqrt_n);
      inner += cell_term(cs.sum2[c], cs.sumsq2[c], n, mv.var2, eps, sqrt_n);
    }
    stat += depth_weight(depth.r, layout.p_eff) * inner;
  }
  return stat;
}

double bootstrap_critical_value(const IntervalDataset& ds, const Eigen::VectorXd& theta,
                                double tau, const MomentConfig& cfg, RngState rng) {
  if (ds.p() == 0) throw invariant_error("moment test needs covariates");
  if (theta.size() != static_cast<Eigen::Index>(ds.p())) {
    throw invariant_error("theta dimension does not match the covariates");
  }
  if (cfg.bootstrap_count < 10) throw invariant_error("bootstrap count too small");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw invariant_error("alpha must lie in (0, 1)");

  const InstrumentLayout layout = build_instruments(ds, cfg.instrument_depth);
  const MomentVectors mv = compute_moments(ds, theta, tau);
  const std::size_t n = ds.n();
  const double dn = static_cast<double>(n);
  const double sqrt_n = std::sqrt(dn);
  const double eps = cfg.variance_regularizer;
  const TuningValues tune = resolve_tuning(cfg, n);

  // Sample cell means and the selection shifts, computed once.
  struct DepthSelection {
    std::vector<double> mean1, mean2;  // sample cell means
    std::vector<double> phi1, phi2;    // selection slack per cell
  };
  std::vector<DepthSelection> selection(layout.depths.size());
  CellStats cs;
  for (std::size_t d = 0; d < layout.depths.size(); ++d) {
    const DepthLayout& depth = layout.depths[d];
    accumulate_cells(depth, mv, &cs);
    DepthSelection& sel = selection[d];
    sel.mean1.assign(depth.cells, 0.0);
    sel.mean2.assign(depth.cells, 0.0);
    sel.phi1.assign(depth.cells, 0.0);
    sel.phi2.assign(depth.cells, 0.0);
    for (std::size_t c = 0; c < depth.cells; ++c) {
      sel.mean1[c] = cs.sum1[c] / dn;
      sel.mean2[c] = cs.sum2[c] / dn;
      const double var1 =
          std::max(cs.sumsq1[c] / dn - sel.mean1[c] * sel.mean1[c], 0.0) + eps * mv.var1;
      const double var2 =
          std::max(cs.sumsq2[c] / dn - sel.mean2[c] * sel.mean2[c], 0.0) + eps * mv.var2;
      // A cell whose studentized mean is far above zero is treated as slack:
      // its bootstrap term is pushed up by the slack constant so it stops
      // contributing to the negative part.
      if (var1 > 0.0) {
        const double z = sqrt_n * sel.mean1[c] / std::sqrt(var1);
        if (z / tune.kappa > 1.0) sel.phi1[c] = tune.slack;
      }
      if (var2 > 0.0) {
        const double z = sqrt_n * sel.mean2[c] / std::sqrt(var2);
        if (z / tune.kappa > 1.0) sel.phi2[c] = tune.slack;
      }
    }
  }

  std::vector<double> stats(cfg.bootstrap_count, 0.0);
  std::vector<std::uint64_t> draw(n);
  CellStats bs;
  for (std::size_t b = 0; b < cfg.bootstrap_count; ++b) {
    Rng gen(rng.substream(b));
    for (std::size_t i = 0; i < n; ++i) draw[i] = gen.below(n);

    double stat = 0.0;
    for (std::size_t d = 0; d < layout.depths.size(); ++d) {
      const DepthLayout& depth = layout.depths[d];
      const DepthSelection& sel = selection[d];
      bs.resize(depth.cells);
      double bmean1 = 0.0, bmean2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = static_cast<std::size_t>(draw[i]);
        const std::uint32_t c = depth.cell_of[src];
        bs.count[c] += 1.0;
        bs.sum1[c] += mv.m1[src];
        bs.sumsq1[c] += mv.m1[src] * mv.m1[src];
        bs.sum2[c] += mv.m2[src];
        bs.sumsq2[c] += mv.m2[src] * mv.m2[src];
        bmean1 += mv.m1[src];
        bmean2 += mv.m2[src];
      }
      bmean1 /= dn;
      bmean2 /= dn;
      // Bootstrap full-sample variances feed the studentization ratio.
      double bvar1 = 0.0, bvar2 = 0.0;
      for (std::size_t c = 0; c < depth.cells; ++c) {
        bvar1 += bs.sumsq1[c];
        bvar2 += bs.sumsq2[c];
      }
      bvar1 = std::max(bvar1 / dn - bmean1 * bmean1, 0.0);
      bvar2 = std::max(bvar2 / dn - bmean2 * bmean2, 0.0);

      double inner = 0.0;
      for (std::size_t c = 0; c < depth.cells; ++c) {
        const double bm1 = bs.sum1[c] / dn;
        const double bm2 = bs.sum2[c] / dn;
        const double bcvar1 = std::max(bs.sumsq1[c] / dn - bm1 * bm1, 0.0) + eps * bvar1;
        const double bcvar2 = std::max(bs.sumsq2[c] / dn - bm2 * bm2, 0.0) + eps * bvar2;
        // Recentred ratio with the slack added on the studentized scale, so
        // a slacked cell stays slacked even when the raw moments carry no
        // sampling noise at all.
        if (bcvar1 > 0.0) {
          const double z = sqrt_n * (bm1 - sel.mean1[c]) / std::sqrt(bcvar1) + sel.phi1[c];
          inner += negative_part_squared(z);
        }
        if (bcvar2 > 0.0) {
          const double z = sqrt_n * (bm2 - sel.mean2[c]) / std::sqrt(bcvar2) + sel.phi2[c];
          inner += negative_part_squared(z);
        }
      }
      stat += depth_weight(depth.r, layout.p_eff) * inner;
    }
    stats[b] = stat;
  }

  const std::size_t k = static_cast<std::size_t>(
      std::ceil((1.0 - cfg.alpha) * static_cast<double>(cfg.bootstrap_count) - 1e-9));
  std::nth_element(stats.begin(), stats.begin() + static_cast<std::ptrdiff_t>(k - 1), stats.end());
  return stats[k - 1] + cfg.quantile_bump;
}

MomentTestResult moment_test(const IntervalDataset& ds, const Eigen::VectorXd& theta, double tau,
                             const MomentConfig& cfg, RngState rng) {
  MomentTestResult out;
  out.statistic = test_statistic(ds, theta, tau, cfg);
  out.critical_value = bootstrap_critical_value(ds, theta, tau, cfg, rng);
  out.reject = out.statistic > out.critical_value;
  return out;
}

std::vector<ScanPoint> confidence_set_scan(const IntervalDataset& ds, double tau,
                                           const Eigen::MatrixXd& grid, const MomentConfig& cfg,
                                           RngState rng) {
  if (grid.cols() != static_cast<Eigen::Index>(ds.p())) {
    throw invariant_error("grid dimension does not match the covariates");
  }
  std::vector<ScanPoint> out(static_cast<std::size_t>(grid.rows()));
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    ScanPoint& pt = out[static_cast<std::size_t>(i)];
    pt.theta = grid.row(i).transpose();
    try {
      const MomentTestResult res =
          moment_test(ds, pt.theta, tau, cfg, rng.substream(static_cast<std::uint64_t>(i)));
      pt.statistic = res.statistic;
      pt.critical_value = res.critical_value;
      pt.accepted = !res.reject;
    } catch (const invariant_error& e) {
      pt.failed = true;
      pt.message = e.what();
    }
  }
  return out;
}

}  // namespace intervalq
