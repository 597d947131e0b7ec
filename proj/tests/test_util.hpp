#pragma once

#include "dfc/fiber.hpp"
#include "dfc/prng.hpp"

namespace dfc::testutil {

inline DoubleForm<Rational> random_form(Prng& rng, int d, int k, int m,
                                        int max_terms = 6) {
  DoubleForm<Rational> out(d, k, m);
  if (!out.in_range()) return out;
  auto basis = enumerate_basis(d, k, m);
  for (int t = 0; t < max_terms; ++t) {
    const auto& key = basis[rng.next_below(basis.size())];
    out.add(key, rng.next_small_rational());
  }
  return out;
}

inline DoubleForm<Rational> random_symmetric_11(Prng& rng, int d) {
  auto a = random_form(rng, d, 1, 1);
  return a + transpose(a);
}

inline FrameVector<Rational> random_vector(Prng& rng, int d) {
  FrameVector<Rational> x;
  x.comps.reserve(d);
  for (int i = 0; i < d; ++i) x.comps.push_back(rng.next_small_rational());
  return x;
}

}  // namespace dfc::testutil
