// Deterministic PRNG for reproducible sampled computations (integer-only state).
#pragma once

#include <cstdint>

#include "dfc/scalar.hpp"

namespace dfc {

class Prng {
 public:
  explicit Prng(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  long next_int(long lo, long hi) {  // inclusive bounds
    return lo + long(next_below(std::uint64_t(hi - lo + 1)));
  }

  // Small rational with numerator in [-9,9] and denominator in {1,2,3}.
  Rational next_small_rational() {
    long num = next_int(-9, 9);
    long den = next_int(1, 3);
    Rational r(num, den);
    r.canonicalize();
    return r;
  }

  // Nonzero variant.
  Rational next_small_rational_nonzero() {
    Rational r = next_small_rational();
    while (sgn(r) == 0) r = next_small_rational();
    return r;
  }

  double next_unit_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace dfc
