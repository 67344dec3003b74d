#include "intervalq/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace intervalq {

namespace {

double ecdf_of(const std::vector<double>& sorted_values, double t, std::size_t n) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const auto count =
      std::upper_bound(sorted_values.begin(), sorted_values.end(), t) - sorted_values.begin();
  return static_cast<double>(count) / static_cast<double>(n);
}

std::vector<double> relevant_values(const IntervalDataset& ds, Functional which) {
  std::vector<double> v = which == Functional::containment ? ds.uppers() : ds.lowers();
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

double containment_ecdf(const IntervalDataset& ds, double t) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  std::size_t count = 0;
  for (const auto& obs : ds.intervals())
    if (obs.upper <= t) ++count;
  return static_cast<double>(count) / static_cast<double>(ds.n());
}

double capacity_ecdf(const IntervalDataset& ds, double t) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  std::size_t count = 0;
  for (const auto& obs : ds.intervals())
    if (obs.lower <= t) ++count;
  return static_cast<double>(count) / static_cast<double>(ds.n());
}

FunctionalCurve evaluate_curves(const IntervalDataset& ds, const std::vector<double>& grid) {
  FunctionalCurve curve;
  curve.t = grid;
  std::vector<double> lowers = ds.lowers();
  std::vector<double> uppers = ds.uppers();
  std::sort(lowers.begin(), lowers.end());
  std::sort(uppers.begin(), uppers.end());
  curve.containment.reserve(grid.size());
  curve.capacity.reserve(grid.size());
  for (double t : grid) {
    curve.containment.push_back(ecdf_of(uppers, t, ds.n()));
    curve.capacity.push_back(ecdf_of(lowers, t, ds.n()));
  }
  return curve;
}

double sup_deviation(const IntervalDataset& ds, Functional which,
                     const std::function<double(double)>& reference) {
  const std::vector<double> sorted = relevant_values(ds, which);
  const std::size_t n = ds.n();

  std::vector<double> breakpoints;
  breakpoints.reserve(2 * n);
  for (const auto& obs : ds.intervals()) {
    if (std::isfinite(obs.lower)) breakpoints.push_back(obs.lower);
    if (std::isfinite(obs.upper)) breakpoints.push_back(obs.upper);
  }
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  if (breakpoints.empty()) throw invariant_error("no finite endpoints to compare against");

  double sup = 0.0;
  for (double x : breakpoints) {
    const double at = ecdf_of(sorted, x, n);
    sup = std::max(sup, std::abs(at - reference(x)));
    const double left = std::nextafter(x, -std::numeric_limits<double>::infinity());
    const double at_left = ecdf_of(sorted, left, n);
    sup = std::max(sup, std::abs(at_left - reference(left)));
  }
  // With infinite endpoints the empirical curve plateaus below 1; compare the
  // plateau against the reference far in the right tail as well.
  bool any_infinite = false;
  for (const auto& obs : ds.intervals())
    if (std::isinf(obs.lower) || std::isinf(obs.upper)) {
      any_infinite = true;
      break;
    }
  if (any_infinite) {
    const double far = 1e300;
    sup = std::max(sup, std::abs(ecdf_of(sorted, far, n) - reference(far)));
  }
  return sup;
}

}  // namespace intervalq
