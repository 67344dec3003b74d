#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "intervalq/interval.hpp"

namespace intervalq {

// Check-loss linear program in canonical equality form. The covariate matrix
// is split into an invertible pivot block (rows chosen by partial pivoting)
// and the remaining free rows; the coefficient vector is substituted out, so
// the constraints only involve the residual splits u, v >= 0:
//
//   columns (u_pivot, u_free, v_pivot, v_free),
//   A = [-W : I : +W : -I],  b(y) = y_free - W y_pivot,  W = X_free X_pivot^-1,
//   cost = (tau, ..., tau, 1-tau, ..., 1-tau),
//   beta(y, u, v) = X_pivot^-1 (y_pivot - u_pivot + v_pivot).
struct CanonicalLP {
  double tau = 0.5;
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<std::int32_t> pivot_rows;  // in pivot order
  std::vector<std::int32_t> free_rows;   // original order
  Eigen::MatrixXd xp;                    // pivot block, p x p
  Eigen::MatrixXd xp_inv;
  Eigen::MatrixXd w;                     // (n-p) x p

  std::size_t m() const { return n - p; }
  std::size_t up_offset() const { return 0; }
  std::size_t uf_offset() const { return p; }
  std::size_t vp_offset() const { return p + m(); }
  std::size_t vf_offset() const { return 2 * p + m(); }
  std::size_t columns() const { return 2 * n; }

  double cost(std::size_t col) const;
  Eigen::VectorXd rhs(const Eigen::VectorXd& y) const;
  // Dense constraint column; intended for small instances and tests.
  Eigen::VectorXd column(std::size_t col) const;
  Eigen::VectorXd beta_from(const Eigen::VectorXd& y, const Eigen::VectorXd& u_pivot,
                            const Eigen::VectorXd& v_pivot) const;
};

CanonicalLP make_canonical(const Eigen::MatrixXd& x, double tau);

struct SetLpOptions {
  std::size_t probe_budget = 4096;
  std::size_t stop_after_covered = 512;  // consecutive covered probes ending the scan
  std::size_t max_cells = 256;
  std::size_t validation_probes = 256;
  std::size_t segment_samples = 8;  // interior points sampled per witness pair
  std::size_t max_segment_pairs = 256;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  std::uint64_t max_iterations = 200000;
};

struct QuantileLpSolution {
  Eigen::VectorXd beta;
  double objective = 0.0;
  std::uint64_t iterations = 0;
  std::vector<std::int32_t> basis;  // sorted basic canonical columns
  // Structural description of the optimal basis: each free row either carries
  // its own residual column (sign +1 for u, -1 for v) or is covered by the
  // small dense block of pivot-residual columns.
  std::vector<std::int8_t> unit_sign;
  std::vector<std::int32_t> dense_cols;
  std::vector<std::int32_t> dense_rows;
  Eigen::MatrixXd dense_inverse;  // inverse of the dense block on its rows
};

QuantileLpSolution solve_quantile_lp(const CanonicalLP& lp, const Eigen::VectorXd& y,
                                     const SetLpOptions& opt = {});

double check_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& beta, double tau);

// Region of outcome selections sharing one optimal basis. The coefficient
// vector is linear in y throughout the region: beta(y) = beta_map * y.
struct BasisCell {
  std::vector<std::int32_t> basis;
  std::vector<std::int8_t> unit_sign;
  std::vector<std::int32_t> dense_cols;
  std::vector<std::int32_t> dense_rows;
  Eigen::MatrixXd dense_inverse;
  Eigen::MatrixXd beta_map;  // p x n
  Eigen::VectorXd witness;   // a selection where the basis was optimal
};

enum class EnumerationStatus { ok, low_coverage, truncated };

struct EnumerationResult {
  std::vector<BasisCell> cells;
  Eigen::MatrixXd beta_samples;  // rows are sampled coefficient vectors
  double coverage = 1.0;         // fraction of validation probes in known cells
  EnumerationStatus status = EnumerationStatus::ok;
  std::size_t lp_solves = 0;
  std::uint64_t simplex_iterations = 0;
};

// Walks the box of interval selections with a deterministic low-discrepancy
// sequence, solving the check-loss program at uncovered probes and collecting
// the linear coefficient regions plus a cloud of attained coefficients.
EnumerationResult enumerate_cells(const IntervalDataset& ds, double tau,
                                  const SetLpOptions& opt = {});

// Membership of a selection in a recorded cell (basic feasibility at y).
bool cell_contains(const CanonicalLP& lp, const BasisCell& cell, const Eigen::VectorXd& y,
                   double tol = 1e-7);

// Exhaustive reference: solves the program at every point of a per-coordinate
// lattice over the selection box and returns the deduplicated coefficients.
// Guarded to refuse more than one million lattice points.
Eigen::MatrixXd brute_force_lattice(const IntervalDataset& ds, double tau,
                                    std::size_t points_per_coordinate);

}  // namespace intervalq
