#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "intervalq/errors.hpp"

namespace intervalq {

// One interval-valued outcome [lower, upper]. Endpoints may be infinite on at
// most one side each; [−inf, −inf] and [+inf, +inf] are empty in R and rejected.
struct IntervalObs {
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
  bool degenerate() const { return lower == upper; }
};

inline void validate_interval(const IntervalObs& obs, std::size_t row) {
  const std::string at = " at row " + std::to_string(row);
  if (std::isnan(obs.lower) || std::isnan(obs.upper))
    throw invariant_error("interval endpoint is NaN" + at);
  if (obs.lower > obs.upper)
    throw invariant_error("inverted interval (lower > upper)" + at);
  if (std::isinf(obs.lower) && obs.lower == obs.upper)
    throw invariant_error("interval with both endpoints infinite of the same sign" + at);
}

// Sample of interval outcomes with optional covariate rows.
class IntervalDataset {
public:
  explicit IntervalDataset(std::vector<IntervalObs> intervals,
                           Eigen::MatrixXd covariates = Eigen::MatrixXd())
      : intervals_(std::move(intervals)), covariates_(std::move(covariates)) {
    if (intervals_.empty()) throw invariant_error("dataset must contain at least one interval");
    for (std::size_t i = 0; i < intervals_.size(); ++i) validate_interval(intervals_[i], i);
    if (covariates_.size() > 0) {
      if (static_cast<std::size_t>(covariates_.rows()) != intervals_.size())
        throw invariant_error("covariate row count does not match interval count");
      if (!covariates_.allFinite())
        throw invariant_error("covariates must be finite");
    }
    for (Eigen::Index j = 0; j < covariates_.cols(); ++j) {
      if (covariates_.col(j).maxCoeff() == covariates_.col(j).minCoeff()) {
        has_constant_column_ = true;
        break;
      }
    }
  }

  std::size_t n() const { return intervals_.size(); }
  std::size_t p() const { return static_cast<std::size_t>(covariates_.cols()); }
  const IntervalObs& obs(std::size_t i) const { return intervals_[i]; }
  const std::vector<IntervalObs>& intervals() const { return intervals_; }
  const Eigen::MatrixXd& covariates() const { return covariates_; }
  bool has_constant_column() const { return has_constant_column_; }

  std::vector<double> lowers() const {
    std::vector<double> v(intervals_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = intervals_[i].lower;
    return v;
  }
  std::vector<double> uppers() const {
    std::vector<double> v(intervals_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = intervals_[i].upper;
    return v;
  }

private:
  std::vector<IntervalObs> intervals_;
  Eigen::MatrixXd covariates_;
  bool has_constant_column_ = false;
};

// True when every interval is a point; point-identified callers can then fall
// back to classical estimators.
inline bool degenerate_check(const IntervalDataset& ds) {
  for (const auto& obs : ds.intervals())
    if (!obs.degenerate()) return false;
  return true;
}

}  // namespace intervalq
