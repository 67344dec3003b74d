#pragma once

#include <cmath>
#include <cstdint>

#include "intervalq/errors.hpp"

namespace intervalq {

// Identifies a reproducible random stream. Streams with distinct ids are
// statistically independent for the same seed, so replications, bootstrap
// resamples and scan points can each own a stream and results do not depend
// on evaluation order.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  RngState with_stream(std::uint64_t s) const { return RngState{seed, s}; }
  RngState substream(std::uint64_t offset) const {
    return RngState{seed, stream * 0x9E3779B97F4A7C15ULL + offset + 1};
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256++ seeded through splitmix64 from (seed, stream). Output and all
// derived variates are identical across platforms: only integer arithmetic
// and explicit IEEE transforms are used, no std::<distribution> involved.
class Rng {
public:
  explicit Rng(RngState state) {
    std::uint64_t x = state.seed ^ (detail::rotl(state.stream, 32) + 0xD1B54A32D192ED03ULL);
    for (auto& word : s_) word = detail::splitmix64(x);
  }
  Rng(std::uint64_t seed, std::uint64_t stream) : Rng(RngState{seed, stream}) {}

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; used where log() must not see zero.
  double uniform01_open() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw invariant_error("Rng::below requires a positive bound");
    const std::uint64_t q = ~std::uint64_t{0} / bound;
    const std::uint64_t limit = q * bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x / q;
  }

  // Standard normal via Box-Muller; the partner draw is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01_open();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace intervalq
