#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "intervalq/errors.hpp"

namespace intervalq {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

inline double normal_pdf(double x) {
  return 0.39894228040143267794 * std::exp(-0.5 * x * x);
}

// k-th smallest value, 1-based. Ties need no policy: the k-th order statistic
// of a multiset is unambiguous.
inline double order_statistic(std::vector<double> values, std::size_t k) {
  if (k < 1 || k > values.size()) throw invariant_error("order statistic rank out of range");
  std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
  return values[k - 1];
}

// Left-continuous-inverse empirical quantile: the ceil(q*n)-th smallest value.
inline double empirical_quantile(const std::vector<double>& values, double q) {
  if (values.empty()) throw invariant_error("empirical quantile of empty sample");
  if (q <= 0.0 || q > 1.0) throw invariant_error("quantile level must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return order_statistic(values, std::max<std::size_t>(k, 1));
}

inline double sample_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_std(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = sample_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

inline double interquartile_range(const std::vector<double>& x) {
  return empirical_quantile(x, 0.75) - empirical_quantile(x, 0.25);
}

// Silverman's rule: 0.9 * min(sd, IQR/1.34) * n^(-1/5). When one spread
// measure degenerates to zero the other is used; both zero is an error.
inline double silverman_bandwidth(const std::vector<double>& x) {
  const double sd = sample_std(x);
  const double iqr = interquartile_range(x) / 1.34;
  double spread = 0.0;
  if (sd > 0.0 && iqr > 0.0)
    spread = std::min(sd, iqr);
  else
    spread = std::max(sd, iqr);
  if (spread <= 0.0)
    throw invariant_error("sample has zero spread; bandwidth undefined");
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

// Gaussian kernel density estimate at a single point.
inline double kde_gaussian_at(const std::vector<double>& x, double bandwidth, double point) {
  if (bandwidth <= 0.0) throw invariant_error("kernel bandwidth must be positive");
  double s = 0.0;
  for (double v : x) s += normal_pdf((point - v) / bandwidth);
  return s / (static_cast<double>(x.size()) * bandwidth);
}

}  // namespace intervalq
