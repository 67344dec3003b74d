#pragma once

#include <cstddef>

#include "intervalq/interval.hpp"
#include "intervalq/rng.hpp"

namespace intervalq {

// Benchmark data-generating processes.
//   continuous:  a = 0.5 v + 1.5 w, b = 2.5 v + 1.5 w, v, w ~ U(0,1)
//   discrete:    y ~ N(0, variance 10) binned to (t-1/2, t+1/2], interval [t-1/2, t+1/2]
//   conditional: a = (0.5+x) v + 1.5 w, b = (2.5+x) v + 1.5 w, x ~ N(0,1)
//   parametric:  y = 1 + (1+x) e, x, e ~ U(0,1), binned to width-0.1 cells (t-0.1, t]
enum class DgpKind { continuous, discrete, conditional, parametric };

struct DgpSpec {
  DgpKind kind = DgpKind::continuous;
  std::size_t n = 0;
  double discrete_sd = 3.16227766016837933200;  // sqrt(10)
};

IntervalDataset generate(const DgpSpec& spec, RngState rng);

// Distribution of c1*U1 + c2*U2 (U's independent uniform on (0,1)): a
// trapezoid on [shift, shift + alpha + beta].
struct Trapezoid {
  double alpha = 0.0;  // min(|c1|, |c2|)
  double beta = 0.0;   // max(|c1|, |c2|)
  double shift = 0.0;

  static Trapezoid sum_of_uniforms(double c1, double c2);
  double cdf(double s) const;
  double pdf(double s) const;
  double quantile(double tau) const;
};

// Population quantile sets of the benchmark processes.
IntervalObs continuous_identified_set(double tau);
IntervalObs conditional_identified_set(double tau, double x);
IntervalObs discrete_identified_set(double tau, double sd);

// Shifts both endpoints by delta * width / sqrt(n).
IntervalObs local_alternative(const IntervalObs& theta0, double delta, std::size_t n);

}  // namespace intervalq
