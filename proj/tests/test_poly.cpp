#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dfc/poly.hpp"

using namespace dfc;

TEST_CASE("polynomial arithmetic and calculus") {
  auto x = Poly::variable(2, 1);
  auto y = Poly::variable(2, 2);
  auto p = x * y + Poly(2, Rational(3));

  CHECK(p.eval({Rational(2), Rational(5)}) == Rational(13));
  CHECK(p.diff(1) == y);
  CHECK(p.diff(2) == x);
  CHECK(p.diff(1).diff(2) == Poly(2, Rational(1)));

  // integral of x^2 y over the unit square = 1/6
  auto q = x * x * y;
  CHECK(q.integral_box({Rational(1), Rational(1)}) == Rational(1, 6));
  // and over [0,2]x[0,3]: (8/3)*(9/2) = 12
  CHECK(q.integral_box({Rational(2), Rational(3)}) == Rational(12));

  CHECK(p.substitute(1, Rational(0)) == Poly(2, Rational(3)));
  auto r = p.substitute(2, Rational(1, 2));  // x/2 + 3
  CHECK(r.eval({Rational(4), Rational(0)}) == Rational(5));
}

TEST_CASE("constant promotion lets Poly act as a scalar type") {
  auto c = ScalarTraits<Poly>::from_int(-2);
  auto x = Poly::variable(3, 1);
  CHECK((c * x).eval({Rational(5), Rational(0), Rational(0)}) == Rational(-10));
  CHECK((x + c).eval({Rational(5), Rational(0), Rational(0)}) == Rational(3));
  auto half = ScalarTraits<Poly>::one() / ScalarTraits<Poly>::from_int(2);
  CHECK((half * Poly(0, Rational(6))).eval_double({}) == doctest::Approx(3.0));
}

TEST_CASE("drop/insert variable round trip") {
  auto x = Poly::variable(3, 1);
  auto z = Poly::variable(3, 3);
  auto p = x * z;
  auto sub = p.substitute(3, Rational(2));  // 2x, no dependence on axis 3
  auto dropped = sub.drop_variable(3);
  CHECK(dropped.nvars() == 2);
  CHECK(dropped.eval({Rational(3), Rational(7)}) == Rational(6));
  CHECK(dropped.insert_variable(3) == sub);
  CHECK_THROWS_AS(p.drop_variable(3), std::domain_error);
}

TEST_CASE("random polynomials respect the degree cap") {
  Prng rng(5);
  for (int i = 0; i < 20; ++i) {
    auto p = Poly::random(rng, 3, 3);
    CHECK(p.total_degree() <= 3);
  }
}
