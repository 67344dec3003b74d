#pragma once

#include <functional>
#include <vector>

#include "intervalq/interval.hpp"

namespace intervalq {

// Which cumulative functional of the interval sample to evaluate. The
// containment curve counts intervals entirely below t (upper <= t); the
// capacity curve counts intervals touching (-inf, t] (lower <= t).
enum class Functional { containment, capacity };

// C~_n(t) = #{i : upper_i <= t} / n. Right-continuous nondecreasing step
// function; t = +inf gives 1 and t = -inf gives 0 by convention.
double containment_ecdf(const IntervalDataset& ds, double t);

// T~_n(t) = #{i : lower_i <= t} / n. Dominates the containment curve.
double capacity_ecdf(const IntervalDataset& ds, double t);

struct FunctionalCurve {
  std::vector<double> t;
  std::vector<double> containment;
  std::vector<double> capacity;
};

FunctionalCurve evaluate_curves(const IntervalDataset& ds, const std::vector<double>& grid);

// sup_t |empirical(t) - reference(t)| for a nondecreasing reference. The
// supremum is scanned over all endpoint breakpoints and their left limits
// (the reference's left limit is taken at the previous representable double).
double sup_deviation(const IntervalDataset& ds, Functional which,
                     const std::function<double(double)>& reference);

}  // namespace intervalq
