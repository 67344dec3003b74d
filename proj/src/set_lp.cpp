#include "intervalq/set_lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "intervalq/errors.hpp"

namespace intervalq {

namespace {

constexpr double kPivotTol = 1e-12;

// Residual-column geometry shared by the solver and the recorded cells. Each
// free row is either matched by its own residual column (sign +1 for u, -1
// for v) or covered by the small dense block of pivot-residual columns; the
// basis inverse then reduces to the inverse of the k x k dense block.
struct BasisStructure {
  std::vector<std::int8_t> unit_sign;
  std::vector<std::int32_t> dense_cols;
  std::vector<std::int32_t> dense_rows;
  Eigen::MatrixXd dense;
  Eigen::MatrixXd dense_inv;
};

// Entry (i, t) of the dense-column block: the value of constraint row i in
// the column dense_cols[t].
double dense_entry(const CanonicalLP& lp, const BasisStructure& s, std::size_t i, std::size_t t) {
  const std::int32_t col = s.dense_cols[t];
  if (static_cast<std::size_t>(col) < lp.uf_offset()) {
    return -lp.w(static_cast<Eigen::Index>(i), col);
  }
  return lp.w(static_cast<Eigen::Index>(i),
              col - static_cast<std::int32_t>(lp.vp_offset()));
}

BasisStructure build_structure(const CanonicalLP& lp, const std::vector<std::int32_t>& basic) {
  const std::size_t m = lp.m();
  BasisStructure s;
  s.unit_sign.assign(m, 0);
  for (std::int32_t col : basic) {
    const std::size_t c = static_cast<std::size_t>(col);
    if (c >= lp.uf_offset() && c < lp.vp_offset()) {
      s.unit_sign[c - lp.uf_offset()] = 1;
    } else if (c >= lp.vf_offset()) {
      s.unit_sign[c - lp.vf_offset()] = -1;
    } else {
      s.dense_cols.push_back(col);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (s.unit_sign[i] == 0) s.dense_rows.push_back(static_cast<std::int32_t>(i));
  }
  if (s.dense_rows.size() != s.dense_cols.size()) {
    throw invariant_error("structurally singular basis in the check-loss program");
  }
  const std::size_t k = s.dense_cols.size();
  s.dense.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t t = 0; t < k; ++t) {
      s.dense(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(t)) =
          dense_entry(lp, s, static_cast<std::size_t>(s.dense_rows[a]), t);
    }
  }
  if (k > 0) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(s.dense);
    const Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
    if (diag.minCoeff() < kPivotTol * std::max(1.0, diag.maxCoeff())) {
      throw invariant_error("numerically singular basis in the check-loss program");
    }
    s.dense_inv = lu.inverse();
  } else {
    s.dense_inv.resize(0, 0);
  }
  return s;
}

struct BasicPoint {
  Eigen::VectorXd dense;  // values of the dense-block basic variables
  Eigen::VectorXd unit;   // values of the row-matched basic variables
};

BasicPoint ftran(const CanonicalLP& lp, const BasisStructure& s, const Eigen::VectorXd& b) {
  const std::size_t m = lp.m();
  const std::size_t k = s.dense_cols.size();
  BasicPoint z;
  z.dense.resize(static_cast<Eigen::Index>(k));
  for (std::size_t a = 0; a < k; ++a) z.dense[static_cast<Eigen::Index>(a)] = b[s.dense_rows[a]];
  if (k > 0) z.dense = (s.dense_inv * z.dense).eval();
  z.unit = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    if (s.unit_sign[i] == 0) continue;
    double corr = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      corr += dense_entry(lp, s, i, t) * z.dense[static_cast<Eigen::Index>(t)];
    }
    z.unit[static_cast<Eigen::Index>(i)] =
        static_cast<double>(s.unit_sign[i]) * (b[static_cast<Eigen::Index>(i)] - corr);
  }
  return z;
}

Eigen::VectorXd dual_prices(const CanonicalLP& lp, const BasisStructure& s) {
  const std::size_t m = lp.m();
  const std::size_t k = s.dense_cols.size();
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    if (s.unit_sign[i] == 1) {
      pi[static_cast<Eigen::Index>(i)] = lp.tau;
    } else if (s.unit_sign[i] == -1) {
      pi[static_cast<Eigen::Index>(i)] = -(1.0 - lp.tau);
    }
  }
  if (k > 0) {
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(k));
    for (std::size_t t = 0; t < k; ++t) {
      double acc = lp.cost(static_cast<std::size_t>(s.dense_cols[t]));
      for (std::size_t i = 0; i < m; ++i) {
        if (s.unit_sign[i] == 0) continue;
        acc -= dense_entry(lp, s, i, t) * pi[static_cast<Eigen::Index>(i)];
      }
      rhs[static_cast<Eigen::Index>(t)] = acc;
    }
    const Eigen::VectorXd pd = s.dense_inv.transpose() * rhs;
    for (std::size_t t = 0; t < k; ++t) pi[s.dense_rows[t]] = pd[static_cast<Eigen::Index>(t)];
  }
  return pi;
}

Eigen::MatrixXd build_beta_map(const CanonicalLP& lp, const BasisStructure& s) {
  const std::size_t n = lp.n;
  const std::size_t p = lp.p;
  const std::size_t k = s.dense_cols.size();
  Eigen::MatrixXd lmap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                               static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t i = static_cast<std::size_t>(s.dense_rows[t]);
    lmap(static_cast<Eigen::Index>(t), lp.free_rows[i]) = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      lmap(static_cast<Eigen::Index>(t), lp.pivot_rows[j]) -=
          lp.w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  const Eigen::MatrixXd z = k > 0 ? Eigen::MatrixXd(s.dense_inv * lmap)
                                  : Eigen::MatrixXd::Zero(0, static_cast<Eigen::Index>(n));
  Eigen::MatrixXd pm = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                             static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < p; ++j) pm(static_cast<Eigen::Index>(j), lp.pivot_rows[j]) = 1.0;
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t c = static_cast<std::size_t>(s.dense_cols[t]);
    if (c < lp.uf_offset()) {
      pm.row(static_cast<Eigen::Index>(c)) -= z.row(static_cast<Eigen::Index>(t));
    } else {
      pm.row(static_cast<Eigen::Index>(c - lp.vp_offset())) += z.row(static_cast<Eigen::Index>(t));
    }
  }
  return lp.xp_inv * pm;
}

bool contains_rhs(const CanonicalLP& lp, const BasisCell& cell, const Eigen::VectorXd& bt,
                  double tol) {
  const std::size_t k = cell.dense_cols.size();
  Eigen::VectorXd zd(static_cast<Eigen::Index>(k));
  for (std::size_t t = 0; t < k; ++t) zd[static_cast<Eigen::Index>(t)] = bt[cell.dense_rows[t]];
  if (k > 0) zd = (cell.dense_inverse * zd).eval();
  for (std::size_t t = 0; t < k; ++t) {
    if (zd[static_cast<Eigen::Index>(t)] < -tol * (1.0 + std::abs(bt[cell.dense_rows[t]]))) {
      return false;
    }
  }
  const std::size_t m = lp.m();
  for (std::size_t i = 0; i < m; ++i) {
    if (cell.unit_sign[i] == 0) continue;
    double corr = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      const std::int32_t col = cell.dense_cols[t];
      const double entry = static_cast<std::size_t>(col) < lp.uf_offset()
                               ? -lp.w(static_cast<Eigen::Index>(i), col)
                               : lp.w(static_cast<Eigen::Index>(i),
                                      col - static_cast<std::int32_t>(lp.vp_offset()));
      corr += entry * zd[static_cast<Eigen::Index>(t)];
    }
    const double value = static_cast<double>(cell.unit_sign[i]) *
                         (bt[static_cast<Eigen::Index>(i)] - corr);
    if (value < -tol * (1.0 + std::abs(bt[static_cast<Eigen::Index>(i)]))) return false;
  }
  return true;
}

// Quasi-random probe sequence over the unit cube in `dim` coordinates, based
// on powers of the generalized golden ratio.
struct ProbeSequence {
  std::vector<double> alpha;
  explicit ProbeSequence(std::size_t dim) {
    double x = 2.0;
    for (int it = 0; it < 64; ++it) x = std::pow(1.0 + x, 1.0 / static_cast<double>(dim + 1));
    alpha.resize(dim);
    double a = 1.0;
    for (std::size_t j = 0; j < dim; ++j) {
      a /= x;
      alpha[j] = a;
    }
  }
  double coordinate(std::uint64_t k, std::size_t j) const {
    const double v = 0.5 + static_cast<double>(k) * alpha[j];
    return v - std::floor(v);
  }
};

// Fixed set of coefficient-space directions used by the support sweep: the
// coordinate axes, plus a circle net for two parameters and sign diagonals
// beyond that.
std::vector<Eigen::VectorXd> sweep_directions(std::size_t p) {
  std::vector<Eigen::VectorXd> dirs;
  for (std::size_t j = 0; j < p; ++j) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    d[static_cast<Eigen::Index>(j)] = 1.0;
    dirs.push_back(d);
    d[static_cast<Eigen::Index>(j)] = -1.0;
    dirs.push_back(d);
  }
  if (p == 2) {
    for (int k = 0; k < 32; ++k) {
      const double a = 2.0 * M_PI * static_cast<double>(k) / 32.0;
      Eigen::VectorXd d(2);
      d << std::cos(a), std::sin(a);
      dirs.push_back(d);
    }
  } else if (p >= 3) {
    const std::uint64_t cap =
        p >= 6 ? 64 : std::uint64_t{1} << p;
    for (std::uint64_t mask = 0; mask < cap; ++mask) {
      Eigen::VectorXd d(static_cast<Eigen::Index>(p));
      for (std::size_t j = 0; j < p; ++j) {
        d[static_cast<Eigen::Index>(j)] = (mask >> j) & 1U ? -1.0 : 1.0;
      }
      dirs.push_back(d / std::sqrt(static_cast<double>(p)));
    }
  }
  return dirs;
}

}  // namespace

double CanonicalLP::cost(std::size_t col) const {
  return col < n ? tau : 1.0 - tau;
}

Eigen::VectorXd CanonicalLP::rhs(const Eigen::VectorXd& y) const {
  Eigen::VectorXd yp(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) yp[static_cast<Eigen::Index>(j)] = y[pivot_rows[j]];
  Eigen::VectorXd out(static_cast<Eigen::Index>(m()));
  const Eigen::VectorXd wy = w * yp;
  for (std::size_t i = 0; i < m(); ++i) {
    out[static_cast<Eigen::Index>(i)] = y[free_rows[i]] - wy[static_cast<Eigen::Index>(i)];
  }
  return out;
}

Eigen::VectorXd CanonicalLP::column(std::size_t col) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m()));
  if (col < uf_offset()) {
    out = -w.col(static_cast<Eigen::Index>(col));
  } else if (col < vp_offset()) {
    out[static_cast<Eigen::Index>(col - uf_offset())] = 1.0;
  } else if (col < vf_offset()) {
    out = w.col(static_cast<Eigen::Index>(col - vp_offset()));
  } else {
    out[static_cast<Eigen::Index>(col - vf_offset())] = -1.0;
  }
  return out;
}

Eigen::VectorXd CanonicalLP::beta_from(const Eigen::VectorXd& y, const Eigen::VectorXd& u_pivot,
                                       const Eigen::VectorXd& v_pivot) const {
  Eigen::VectorXd yp(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) yp[static_cast<Eigen::Index>(j)] = y[pivot_rows[j]];
  return xp_inv * (yp - u_pivot + v_pivot);
}

CanonicalLP make_canonical(const Eigen::MatrixXd& x, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw invariant_error("tau must lie strictly inside (0, 1)");
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t p = static_cast<std::size_t>(x.cols());
  if (p == 0) throw invariant_error("check-loss program needs covariates");
  if (n < p) throw invariant_error("fewer observations than parameters");

  // Row selection by Gaussian elimination with partial pivoting; ties go to
  // the smallest row index so the canonical form is deterministic.
  Eigen::MatrixXd work = x;
  const double scale = std::max(1.0, work.cwiseAbs().maxCoeff());
  std::vector<bool> chosen(n, false);
  CanonicalLP lp;
  lp.tau = tau;
  lp.n = n;
  lp.p = p;
  for (std::size_t k = 0; k < p; ++k) {
    std::size_t best = n;
    double best_abs = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      const double v = std::abs(work(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
      if (v > best_abs + 0.0) {
        best_abs = v;
        best = i;
      }
    }
    if (best == n || best_abs < kPivotTol * scale) {
      throw invariant_error("covariate matrix is rank deficient");
    }
    chosen[best] = true;
    lp.pivot_rows.push_back(static_cast<std::int32_t>(best));
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      const double f = work(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) /
                       work(static_cast<Eigen::Index>(best), static_cast<Eigen::Index>(k));
      work.row(static_cast<Eigen::Index>(i)) -= f * work.row(static_cast<Eigen::Index>(best));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!chosen[i]) lp.free_rows.push_back(static_cast<std::int32_t>(i));
  }

  lp.xp.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) lp.xp.row(static_cast<Eigen::Index>(j)) = x.row(lp.pivot_rows[j]);
  lp.xp_inv = lp.xp.inverse();
  lp.w.resize(static_cast<Eigen::Index>(n - p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n - p; ++i) {
    lp.w.row(static_cast<Eigen::Index>(i)) = x.row(lp.free_rows[i]) * lp.xp_inv;
  }
  return lp;
}

double check_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& beta, double tau) {
  const Eigen::VectorXd r = y - x * beta;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    loss += r[i] >= 0.0 ? tau * r[i] : (tau - 1.0) * r[i];
  }
  return loss;
}

QuantileLpSolution solve_quantile_lp(const CanonicalLP& lp, const Eigen::VectorXd& y,
                                     const SetLpOptions& opt) {
  if (y.size() != static_cast<Eigen::Index>(lp.n)) {
    throw invariant_error("selection length does not match the program");
  }
  const std::size_t m = lp.m();
  const Eigen::VectorXd bt = lp.rhs(y);

  std::vector<std::int32_t> basic;
  basic.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    basic.push_back(static_cast<std::int32_t>(bt[static_cast<Eigen::Index>(i)] >= 0.0
                                                  ? lp.uf_offset() + i
                                                  : lp.vf_offset() + i));
  }
  // The pivot bookkeeping below keeps `basic` sorted; the crash basis mixes
  // the two residual blocks, so establish the order once here.
  std::sort(basic.begin(), basic.end());
  std::vector<bool> is_basic(lp.columns(), false);
  for (std::int32_t c : basic) is_basic[static_cast<std::size_t>(c)] = true;

  QuantileLpSolution sol;
  BasisStructure s = build_structure(lp, basic);
  std::size_t degenerate_streak = 0;
  bool bland = false;

  while (true) {
    if (sol.iterations >= opt.max_iterations) {
      throw invariant_error("check-loss program exceeded the iteration limit");
    }
    const Eigen::VectorXd pi = dual_prices(lp, s);

    // Pricing. Dantzig rule with index tie-breaks; Bland's rule after a
    // run of degenerate steps.
    const Eigen::VectorXd wpi = lp.w.transpose() * pi;  // p entries
    std::int64_t entering = -1;
    double best = -opt.optimality_tol;
    auto consider = [&](std::size_t col, double reduced) {
      if (reduced >= -opt.optimality_tol) return;
      if (bland) {
        if (entering < 0 || static_cast<std::int64_t>(col) < entering) entering = static_cast<std::int64_t>(col);
      } else if (reduced < best) {
        best = reduced;
        entering = static_cast<std::int64_t>(col);
      }
    };
    for (std::size_t j = 0; j < lp.p; ++j) {
      const double sj = wpi[static_cast<Eigen::Index>(j)];
      if (!is_basic[lp.up_offset() + j]) consider(lp.up_offset() + j, lp.tau + sj);
      if (!is_basic[lp.vp_offset() + j]) consider(lp.vp_offset() + j, (1.0 - lp.tau) - sj);
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double pii = pi[static_cast<Eigen::Index>(i)];
      if (!is_basic[lp.uf_offset() + i]) consider(lp.uf_offset() + i, lp.tau - pii);
      if (!is_basic[lp.vf_offset() + i]) consider(lp.vf_offset() + i, (1.0 - lp.tau) + pii);
    }

    if (entering < 0) break;  // optimal

    const BasicPoint z = ftran(lp, s, bt);
    const BasicPoint t = ftran(lp, s, lp.column(static_cast<std::size_t>(entering)));

    // Ratio test over all basic slots; smallest column id wins ties.
    double theta = std::numeric_limits<double>::infinity();
    std::int64_t leaving = -1;
    auto ratio = [&](double zv, double tv, std::int32_t col) {
      if (tv <= 1e-12) return;
      const double r = std::max(zv, 0.0) / tv;
      if (r < theta - 1e-12 || (r < theta + 1e-12 && (leaving < 0 || col < leaving))) {
        theta = std::min(r, theta);
        leaving = col;
      }
    };
    for (std::size_t i = 0; i < m; ++i) {
      if (s.unit_sign[i] == 0) continue;
      const std::int32_t col = static_cast<std::int32_t>(
          s.unit_sign[i] == 1 ? lp.uf_offset() + i : lp.vf_offset() + i);
      ratio(z.unit[static_cast<Eigen::Index>(i)], t.unit[static_cast<Eigen::Index>(i)], col);
    }
    for (std::size_t a = 0; a < s.dense_cols.size(); ++a) {
      ratio(z.dense[static_cast<Eigen::Index>(a)], t.dense[static_cast<Eigen::Index>(a)],
            s.dense_cols[a]);
    }
    if (leaving < 0) {
      throw invariant_error("check-loss program reported an unbounded direction");
    }

    if (theta < 1e-12) {
      if (++degenerate_streak > 50) bland = true;
    } else {
      degenerate_streak = 0;
      bland = false;
    }

    auto it = std::lower_bound(basic.begin(), basic.end(), static_cast<std::int32_t>(leaving));
    basic.erase(it);
    basic.insert(std::lower_bound(basic.begin(), basic.end(),
                                  static_cast<std::int32_t>(entering)),
                 static_cast<std::int32_t>(entering));
    is_basic[static_cast<std::size_t>(leaving)] = false;
    is_basic[static_cast<std::size_t>(entering)] = true;
    s = build_structure(lp, basic);
    ++sol.iterations;
  }

  const BasicPoint z = ftran(lp, s, bt);
  Eigen::VectorXd up = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lp.p));
  Eigen::VectorXd vp = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lp.p));
  double objective = 0.0;
  for (std::size_t a = 0; a < s.dense_cols.size(); ++a) {
    const std::size_t c = static_cast<std::size_t>(s.dense_cols[a]);
    const double v = z.dense[static_cast<Eigen::Index>(a)];
    objective += lp.cost(c) * v;
    if (c < lp.uf_offset()) {
      up[static_cast<Eigen::Index>(c)] = v;
    } else {
      vp[static_cast<Eigen::Index>(c - lp.vp_offset())] = v;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (s.unit_sign[i] == 0) continue;
    objective += (s.unit_sign[i] == 1 ? lp.tau : 1.0 - lp.tau) *
                 std::max(z.unit[static_cast<Eigen::Index>(i)], 0.0);
  }
  sol.beta = lp.beta_from(y, up, vp);
  sol.objective = objective;
  sol.basis = basic;
  sol.unit_sign = s.unit_sign;
  sol.dense_cols = s.dense_cols;
  sol.dense_rows = s.dense_rows;
  sol.dense_inverse = s.dense_inv;
  return sol;
}

bool cell_contains(const CanonicalLP& lp, const BasisCell& cell, const Eigen::VectorXd& y,
                   double tol) {
  return contains_rhs(lp, cell, lp.rhs(y), tol);
}

EnumerationResult enumerate_cells(const IntervalDataset& ds, double tau,
                                  const SetLpOptions& opt) {
  const std::size_t n = ds.n();
  const std::size_t p = ds.p();
  if (p == 0) throw invariant_error("cell enumeration needs covariates");
  if (n <= p) throw invariant_error("need more observations than parameters");
  Eigen::VectorXd lo(static_cast<Eigen::Index>(n)), wid(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const IntervalObs& o = ds.obs(i);
    if (!std::isfinite(o.lower) || !std::isfinite(o.upper)) {
      throw invariant_error("cell enumeration needs bounded outcome intervals");
    }
    lo[static_cast<Eigen::Index>(i)] = o.lower;
    wid[static_cast<Eigen::Index>(i)] = o.upper - o.lower;
  }

  const CanonicalLP lp = make_canonical(ds.covariates(), tau);
  EnumerationResult result;
  std::map<std::vector<std::int32_t>, std::size_t> seen;
  std::vector<Eigen::VectorXd> betas;
  bool truncated = false;

  auto locate = [&](const Eigen::VectorXd& y) -> std::ptrdiff_t {
    const Eigen::VectorXd bt = lp.rhs(y);
    for (std::size_t c = 0; c < result.cells.size(); ++c) {
      if (contains_rhs(lp, result.cells[c], bt, 1e-7)) return static_cast<std::ptrdiff_t>(c);
    }
    return -1;
  };

  // Records the solved cell when new and returns its index; -1 is returned
  // when the cell table is full (the coefficient is still kept).
  auto add_cell_from = [&](const QuantileLpSolution& sol,
                           const Eigen::VectorXd& y) -> std::ptrdiff_t {
    auto it = seen.find(sol.basis);
    if (it != seen.end()) return static_cast<std::ptrdiff_t>(it->second);
    if (result.cells.size() >= opt.max_cells) {
      truncated = true;
      betas.push_back(sol.beta);
      return -1;
    }
    BasisCell cell;
    cell.basis = sol.basis;
    cell.unit_sign = sol.unit_sign;
    cell.dense_cols = sol.dense_cols;
    cell.dense_rows = sol.dense_rows;
    cell.dense_inverse = sol.dense_inverse;
    BasisStructure s;
    s.unit_sign = sol.unit_sign;
    s.dense_cols = sol.dense_cols;
    s.dense_rows = sol.dense_rows;
    s.dense_inv = sol.dense_inverse;
    cell.beta_map = build_beta_map(lp, s);
    cell.witness = y;
    result.cells.push_back(std::move(cell));
    seen.emplace(sol.basis, result.cells.size() - 1);
    return static_cast<std::ptrdiff_t>(result.cells.size() - 1);
  };

  auto solve_and_add = [&](const Eigen::VectorXd& y) -> std::ptrdiff_t {
    const QuantileLpSolution sol = solve_quantile_lp(lp, y, opt);
    ++result.lp_solves;
    result.simplex_iterations += sol.iterations;
    return add_cell_from(sol, y);
  };

  auto sample_beta = [&](std::ptrdiff_t cell_idx, const Eigen::VectorXd& y) {
    if (cell_idx >= 0) betas.push_back(result.cells[static_cast<std::size_t>(cell_idx)].beta_map * y);
  };

  const ProbeSequence seq(n);
  auto probe_point = [&](std::uint64_t k) {
    Eigen::VectorXd y = lo;
    for (std::size_t j = 0; j < n; ++j) {
      if (wid[static_cast<Eigen::Index>(j)] > 0.0) {
        y[static_cast<Eigen::Index>(j)] += wid[static_cast<Eigen::Index>(j)] * seq.coordinate(k, j);
      }
    }
    return y;
  };

  // Both box corners first (the two envelope selections), then the
  // quasi-random walk.
  {
    const std::ptrdiff_t idx = solve_and_add(lo);
    sample_beta(idx, lo);
  }
  {
    const Eigen::VectorXd hi = lo + wid;
    std::ptrdiff_t idx = locate(hi);
    if (idx < 0 && !truncated) idx = solve_and_add(hi);
    sample_beta(idx, hi);
  }
  std::uint64_t k = 1;
  std::size_t covered_streak = 0;
  for (; k <= opt.probe_budget && !truncated; ++k) {
    if (covered_streak >= opt.stop_after_covered) break;
    const Eigen::VectorXd y = probe_point(k);
    std::ptrdiff_t idx = locate(y);
    if (idx < 0) {
      idx = solve_and_add(y);
      covered_streak = 0;
    } else {
      ++covered_streak;
    }
    sample_beta(idx, y);
  }

  // Support sweep. Independent per-coordinate probes average out, so their
  // coefficients cluster near the middle of the region; to reach the
  // boundary, push each fixed direction by iterating the corner selection
  // suggested by the active cell's map, then sample the midpoint-to-corner
  // path.
  {
    const Eigen::VectorXd mid = lo + 0.5 * wid;
    auto solve_record = [&](const Eigen::VectorXd& y) -> Eigen::MatrixXd {
      const std::ptrdiff_t hit = locate(y);
      if (hit >= 0) {
        sample_beta(hit, y);
        return result.cells[static_cast<std::size_t>(hit)].beta_map;
      }
      const QuantileLpSolution sol = solve_quantile_lp(lp, y, opt);
      ++result.lp_solves;
      result.simplex_iterations += sol.iterations;
      const std::ptrdiff_t idx = add_cell_from(sol, y);
      if (idx >= 0) {
        betas.push_back(sol.beta);
        return result.cells[static_cast<std::size_t>(idx)].beta_map;
      }
      BasisStructure s;
      s.unit_sign = sol.unit_sign;
      s.dense_cols = sol.dense_cols;
      s.dense_rows = sol.dense_rows;
      s.dense_inv = sol.dense_inverse;
      return build_beta_map(lp, s);
    };
    // Corner sweep: when few coordinates have positive width, visit every
    // box corner. Slim cells can carry coefficient vertices while occupying
    // almost no volume, which random probing cannot find; the corners pin
    // most of them down deterministically.
    {
      std::vector<std::size_t> active;
      for (std::size_t i = 0; i < n; ++i) {
        if (wid[static_cast<Eigen::Index>(i)] > 0.0) active.push_back(i);
      }
      if (active.size() <= 12) {
        const std::uint64_t corners = std::uint64_t{1} << active.size();
        for (std::uint64_t mask = 0; mask < corners; ++mask) {
          Eigen::VectorXd y = lo;
          for (std::size_t a = 0; a < active.size(); ++a) {
            if ((mask >> a) & 1U) {
              const Eigen::Index ei = static_cast<Eigen::Index>(active[a]);
              y[ei] += wid[ei];
            }
          }
          solve_record(y);
        }
      }
    }

    const std::vector<Eigen::VectorXd> dirs = sweep_directions(p);
    if (n <= 64) {
      for (const Eigen::VectorXd& d : dirs) {
        Eigen::VectorXd y = mid;
        for (int boost = 0; boost < 5; ++boost) {
          const Eigen::MatrixXd map = solve_record(y);
          const Eigen::VectorXd g = map.transpose() * d;
          Eigen::VectorXd next = y;
          for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Index ei = static_cast<Eigen::Index>(i);
            if (g[ei] > 1e-14) {
              next[ei] = lo[ei] + wid[ei];
            } else if (g[ei] < -1e-14) {
              next[ei] = lo[ei];
            }
          }
          if (next == y) break;
          y = next;
        }
        for (int f = 1; f <= 6; ++f) {
          const double t = static_cast<double>(f) / 7.0;
          solve_record(mid + t * (y - mid));
        }
      }
    }

    // Aim at targets around the current cloud and project each target's
    // fitted values into the box. The projected selection is the one
    // minimizing that target's check loss, so the refit lands as close to
    // the target as the intervals allow; a dense target set therefore
    // reproduces, for every target, the nearest point of the coefficient
    // region. Two passes, because the first pass usually enlarges the cloud
    // and with it the target radius.
    {
      const Eigen::MatrixXd& xmat = ds.covariates();
      auto project_target = [&](const Eigen::VectorXd& theta) {
        const Eigen::VectorXd fit = xmat * theta;
        Eigen::VectorXd y(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
          const Eigen::Index ei = static_cast<Eigen::Index>(i);
          y[ei] = std::clamp(fit[ei], lo[ei], lo[ei] + wid[ei]);
        }
        solve_record(y);
      };
      for (int pass = 0; pass < 2; ++pass) {
        Eigen::VectorXd bmin = betas.front();
        Eigen::VectorXd bmax = betas.front();
        for (const Eigen::VectorXd& b : betas) {
          bmin = bmin.cwiseMin(b);
          bmax = bmax.cwiseMax(b);
        }
        const Eigen::VectorXd center = 0.5 * (bmin + bmax);
        Eigen::VectorXd radius = 0.5 * (bmax - bmin);
        const double floor_r = 1e-9 * (1.0 + center.cwiseAbs().maxCoeff());
        for (Eigen::Index j = 0; j < radius.size(); ++j) {
          radius[j] = std::max(radius[j], floor_r);
        }
        for (const Eigen::VectorXd& d : dirs) {
          for (const double t : {0.6, 1.0, 1.5, 2.5, 4.0}) {
            project_target(center + t * radius.cwiseProduct(d));
          }
        }
        if (p == 2) {
          // fill the plane between the ring directions
          for (int a = -4; a <= 4; ++a) {
            for (int b = -4; b <= 4; ++b) {
              Eigen::VectorXd theta(2);
              theta << center[0] + 0.5 * a * radius[0], center[1] + 0.5 * b * radius[1];
              project_target(theta);
            }
          }
        }
      }
    }
  }

  // Cross-cell refinement: sample the segments between witnesses so the
  // coefficient cloud reaches cell boundaries.
  {
    const std::size_t cells_now = result.cells.size();
    std::size_t pairs = 0;
    for (std::size_t a = 0; a + 1 < cells_now && pairs < opt.max_segment_pairs; ++a) {
      for (std::size_t b = a + 1; b < cells_now && pairs < opt.max_segment_pairs; ++b, ++pairs) {
        const Eigen::VectorXd& wa = result.cells[a].witness;
        const Eigen::VectorXd& wb = result.cells[b].witness;
        for (std::size_t sidx = 1; sidx <= opt.segment_samples; ++sidx) {
          const double t = static_cast<double>(sidx) /
                           static_cast<double>(opt.segment_samples + 1);
          const Eigen::VectorXd y = wa + t * (wb - wa);
          std::ptrdiff_t idx = locate(y);
          if (idx < 0 && !truncated) idx = solve_and_add(y);
          sample_beta(idx, y);
        }
      }
    }
  }

  // Per-cell extreme selections: push each coefficient coordinate to its box
  // optimum; keep the point when it stays in the cell.
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const BasisCell& cell = result.cells[c];
    for (std::size_t j = 0; j < p; ++j) {
      for (int dir = 0; dir < 2; ++dir) {
        Eigen::VectorXd y = lo;
        for (std::size_t i = 0; i < n; ++i) {
          const double g = cell.beta_map(static_cast<Eigen::Index>(j),
                                         static_cast<Eigen::Index>(i));
          const bool take_upper = dir == 0 ? g > 0.0 : g < 0.0;
          if (take_upper) y[static_cast<Eigen::Index>(i)] += wid[static_cast<Eigen::Index>(i)];
        }
        if (cell_contains(lp, cell, y)) betas.push_back(cell.beta_map * y);
      }
    }
  }

  // Coverage check on fresh probes; newly found cells are added afterwards
  // but do not change the reported coverage.
  std::size_t covered = 0;
  std::vector<Eigen::VectorXd> uncovered;
  for (std::size_t v = 0; v < opt.validation_probes; ++v, ++k) {
    const Eigen::VectorXd y = probe_point(k);
    const std::ptrdiff_t idx = locate(y);
    if (idx >= 0) {
      ++covered;
      sample_beta(idx, y);
    } else {
      uncovered.push_back(y);
    }
  }
  result.coverage = opt.validation_probes == 0
                        ? 1.0
                        : static_cast<double>(covered) /
                              static_cast<double>(opt.validation_probes);
  for (const Eigen::VectorXd& y : uncovered) {
    std::ptrdiff_t idx = locate(y);
    if (idx < 0 && !truncated) idx = solve_and_add(y);
    sample_beta(idx, y);
  }

  if (truncated) {
    result.status = EnumerationStatus::truncated;
  } else if (result.coverage < 0.999) {
    result.status = EnumerationStatus::low_coverage;
  } else {
    result.status = EnumerationStatus::ok;
  }

  result.beta_samples.resize(static_cast<Eigen::Index>(betas.size()),
                             static_cast<Eigen::Index>(p));
  for (std::size_t r = 0; r < betas.size(); ++r) {
    result.beta_samples.row(static_cast<Eigen::Index>(r)) = betas[r].transpose();
  }
  return result;
}

Eigen::MatrixXd brute_force_lattice(const IntervalDataset& ds, double tau,
                                    std::size_t points_per_coordinate) {
  const std::size_t n = ds.n();
  const std::size_t p = ds.p();
  if (p == 0) throw invariant_error("lattice reference needs covariates");
  if (n <= p) throw invariant_error("need more observations than parameters");
  if (points_per_coordinate < 2) throw invariant_error("lattice needs at least two points per coordinate");

  std::vector<std::size_t> radix(n, 1);
  double total = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const IntervalObs& o = ds.obs(i);
    if (!std::isfinite(o.lower) || !std::isfinite(o.upper)) {
      throw invariant_error("lattice reference needs bounded outcome intervals");
    }
    if (o.width() > 0.0) radix[i] = points_per_coordinate;
    total *= static_cast<double>(radix[i]);
    if (total > 1e6) throw invariant_error("selection lattice exceeds one million points");
  }

  const CanonicalLP lp = make_canonical(ds.covariates(), tau);
  const SetLpOptions opt;
  std::vector<Eigen::VectorXd> unique_betas;
  std::vector<std::size_t> idx(n, 0);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  while (true) {
    for (std::size_t i = 0; i < n; ++i) {
      const IntervalObs& o = ds.obs(i);
      y[static_cast<Eigen::Index>(i)] =
          radix[i] == 1 ? o.lower
                        : o.lower + o.width() * static_cast<double>(idx[i]) /
                              static_cast<double>(radix[i] - 1);
    }
    const QuantileLpSolution sol = solve_quantile_lp(lp, y, opt);
    bool fresh = true;
    for (const Eigen::VectorXd& b : unique_betas) {
      if ((b - sol.beta).cwiseAbs().maxCoeff() <= 1e-9) {
        fresh = false;
        break;
      }
    }
    if (fresh) unique_betas.push_back(sol.beta);

    std::size_t carry = 0;
    while (carry < n) {
      if (++idx[carry] < radix[carry]) break;
      idx[carry] = 0;
      ++carry;
    }
    if (carry == n) break;
  }

  Eigen::MatrixXd out(static_cast<Eigen::Index>(unique_betas.size()),
                      static_cast<Eigen::Index>(p));
  for (std::size_t r = 0; r < unique_betas.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = unique_betas[r].transpose();
  }
  return out;
}

}  // namespace intervalq
