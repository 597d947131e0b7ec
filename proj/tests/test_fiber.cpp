#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dfc/fiber.hpp"
#include "test_util.hpp"

using namespace dfc;
using dfc::testutil::random_form;
using dfc::testutil::random_vector;

namespace {

DoubleForm<Rational> basis_form(int d, Index f, Index v) {
  DoubleForm<Rational> a(d, int(f.size()), int(v.size()));
  a.set({std::move(f), std::move(v)}, Rational(1));
  return a;
}

}  // namespace

TEST_CASE("basis enumeration is lexicographic with Pascal-formula sizes") {
  auto b211 = enumerate_basis(2, 1, 1);
  REQUIRE(b211.size() == 4);
  CHECK(b211[0] == MultiIndexPair{{1}, {1}});
  CHECK(b211[1] == MultiIndexPair{{1}, {2}});
  CHECK(b211[2] == MultiIndexPair{{2}, {1}});
  CHECK(b211[3] == MultiIndexPair{{2}, {2}});

  CHECK(enumerate_basis(3, 1, 1).size() == 9);
  CHECK(enumerate_basis(4, 2, 3).size() == 24);  // C(4,2)*C(4,3)
  CHECK_THROWS_AS(enumerate_basis(3, 4, 0), std::domain_error);
}

TEST_CASE("wedge: defining bilinear extension and shuffle signs") {
  // (dx1 (x) dx1) ^ (dx2 (x) dx2) = (dx1^dx2) (x) (dx1^dx2)
  auto a = basis_form(2, {1}, {1});
  auto b = basis_form(2, {2}, {2});
  auto w = wedge(a, b);
  CHECK(w.get({{1, 2}, {1, 2}}) == Rational(1));

  // (dx2 (x) dx1) ^ (dx1 (x) dx2) = -(dx1^dx2) (x) (dx1^dx2)
  auto c = wedge(basis_form(2, {2}, {1}), basis_form(2, {1}, {2}));
  CHECK(c.get({{1, 2}, {1, 2}}) == Rational(-1));

  // g ^ g = 2 (dx1^dx2) (x) (dx1^dx2) in d=2
  auto g = metric_form<Rational>(2);
  auto gg = wedge(g, g);
  CHECK(gg.get({{1, 2}, {1, 2}}) == Rational(2));

  CHECK_THROWS_AS(wedge(a, basis_form(3, {1}, {1})), std::domain_error);
}

TEST_CASE("wedge: graded commutativity and associativity on random triples") {
  Prng rng(42);
  for (int iter = 0; iter < 30; ++iter) {
    int d = int(rng.next_int(2, 4));
    int k1 = int(rng.next_int(0, 1)), m1 = int(rng.next_int(0, 1));
    int k2 = int(rng.next_int(0, 1)), m2 = int(rng.next_int(0, 1));
    int k3 = int(rng.next_int(0, 1)), m3 = int(rng.next_int(0, 1));
    auto a = random_form(rng, d, k1, m1);
    auto b = random_form(rng, d, k2, m2);
    auto c = random_form(rng, d, k3, m3);
    auto ab = wedge(a, b);
    auto ba = wedge(b, a);
    int sign = ((k1 * k2 + m1 * m2) % 2 == 0) ? 1 : -1;
    CHECK(ab == Rational(sign) * ba);
    CHECK(wedge(wedge(a, b), c) == wedge(a, wedge(b, c)));
  }
}

TEST_CASE("transpose: key swap and involution") {
  auto a = basis_form(3, {1, 2}, {3});
  auto at = transpose(a);
  CHECK(at.get({{3}, {1, 2}}) == Rational(1));
  auto g = metric_form<Rational>(3);
  CHECK(transpose(g) == g);

  Prng rng(7);
  for (int iter = 0; iter < 20; ++iter) {
    auto psi = random_form(rng, 3, int(rng.next_int(0, 2)), int(rng.next_int(0, 2)));
    CHECK(transpose(transpose(psi)) == psi);
  }
}

TEST_CASE("inner: orthonormal pairing") {
  auto a = basis_form(2, {1}, {2});
  CHECK(inner(a, a) == Rational(1));
  auto b = basis_form(2, {2}, {1});
  CHECK(inner(a, b) == Rational(0));
  auto g3 = metric_form<Rational>(3);
  CHECK(inner(g3, g3) == Rational(3));
  CHECK_THROWS_AS(inner(a, basis_form(2, {1}, {})), std::domain_error);
}

TEST_CASE("hodge: defining relation, volume, inverse sign, isometry") {
  // d=2: *(dx1 (x) 1) = dx2 (x) 1
  auto dx1 = basis_form(2, {1}, {});
  CHECK(hodge(dx1, Side::Form) == basis_form(2, {2}, {}));

  for (int d = 1; d <= 4; ++d) {
    auto one = scalar_form(d, Rational(1));
    auto vol = hodge(one, Side::Form);
    Index full;
    for (int i = 1; i <= d; ++i) full.push_back(i);
    CHECK(vol.get({full, {}}) == Rational(1));
  }

  Prng rng(3);
  for (int iter = 0; iter < 40; ++iter) {
    int d = int(rng.next_int(2, 4));
    int k = int(rng.next_int(0, d)), m = int(rng.next_int(0, d));
    auto a = random_form(rng, d, k, m);
    auto b = random_form(rng, d, k, m);
    // ** = (-1)^{dk+k} on the form part
    auto twice = hodge(hodge(a, Side::Form), Side::Form);
    int s = ((d * k + k) % 2 == 0) ? 1 : -1;
    CHECK(twice == Rational(s) * a);
    // isometry on both sides
    CHECK(inner(hodge(a, Side::Form), hodge(b, Side::Form)) == inner(a, b));
    CHECK(inner(hodge(a, Side::Vector), hodge(b, Side::Vector)) == inner(a, b));
    // star star_V = star_V star
    CHECK(hodge(hodge(a, Side::Vector), Side::Form) ==
          hodge(hodge(a, Side::Form), Side::Vector));
    // defining relation alpha ^ *beta = (alpha,beta) omega on the form part
    if (m == 0) {
      auto lhs = wedge(a, hodge(b, Side::Form));
      auto omega = hodge(scalar_form(d, Rational(1)), Side::Form);
      CHECK(lhs == inner(a, b) * omega);
    }
  }
}

TEST_CASE("interior: first-slot contraction on either part") {
  auto psi = basis_form(3, {1, 2}, {3});
  auto e1 = basis_vector<Rational>(3, 1);
  auto e3 = basis_vector<Rational>(3, 3);
  CHECK(interior(e1, psi, Side::Form) == basis_form(3, {2}, {3}));
  CHECK(interior(e3, psi, Side::Vector) == basis_form(3, {1, 2}, {}));

  auto g = metric_form<Rational>(3);
  auto e2 = basis_vector<Rational>(3, 2);
  CHECK(interior(e1, interior(e2, g, Side::Vector), Side::Form).is_zero());
  auto one = interior(e1, interior(e1, g, Side::Vector), Side::Form);
  CHECK(one == scalar_form(3, Rational(1)));

  // contraction at degree 0 returns the canonical zero
  CHECK(interior(e1, scalar_form(3, Rational(5)), Side::Form).is_zero());

  // i_X i^V_Y = i^V_Y i_X
  Prng rng(11);
  for (int iter = 0; iter < 20; ++iter) {
    int d = int(rng.next_int(2, 4));
    auto a = random_form(rng, d, int(rng.next_int(1, d)), int(rng.next_int(1, d)));
    auto x = random_vector(rng, d);
    auto y = random_vector(rng, d);
    CHECK(interior(x, interior(y, a, Side::Vector), Side::Form) ==
          interior(y, interior(x, a, Side::Form), Side::Vector));
  }
}

TEST_CASE("lemma: *(alpha ^ omega) = (-1)^k i_{alpha#} * omega") {
  Prng rng(13);
  for (int iter = 0; iter < 30; ++iter) {
    int d = int(rng.next_int(2, 4));
    int k = int(rng.next_int(0, d - 1));
    auto alpha = random_form(rng, d, 1, 0);
    auto omega = random_form(rng, d, k, 0);
    FrameVector<Rational> alpha_sharp;
    for (int i = 1; i <= d; ++i) alpha_sharp.comps.push_back(alpha.get({{i}, {}}));
    auto lhs = hodge(wedge(alpha, omega), Side::Form);
    auto rhs = interior(alpha_sharp, hodge(omega, Side::Form), Side::Form);
    if (k % 2 == 1) rhs = -rhs;
    CHECK(lhs == rhs);
  }
}

TEST_CASE("A-operator family: traces, contractions, dualities") {
  auto g3 = metric_form<Rational>(3);
  // Tr_g g = d
  CHECK(a_operator(g3, g3, AOp::Trace) == scalar_form(3, Rational(3)));

  // i_g annihilates symmetric (1,1) forms
  Prng rng(17);
  auto sym = dfc::testutil::random_symmetric_11(rng, 3);
  CHECK(a_operator(g3, sym, AOp::I).is_zero());

  for (int iter = 0; iter < 25; ++iter) {
    int d = int(rng.next_int(2, 4));
    auto g = metric_form<Rational>(d);
    auto A = dfc::testutil::random_symmetric_11(rng, d);
    int k = int(rng.next_int(0, d)), m = int(rng.next_int(0, d));
    auto psi = random_form(rng, d, k, m);

    // duality (Tr_A psi, phi) = (psi, A ^ phi)
    if (k >= 1 && m >= 1) {
      auto phi = random_form(rng, d, k - 1, m - 1);
      CHECK(inner(a_operator(A, psi, AOp::Trace), phi) ==
            inner(psi, a_operator(A, phi, AOp::Wedge)));
    }
    // duality (i*_A psi, phi) = (psi, i_A phi)
    if (k >= 1 && m + 1 <= d) {
      auto phi = random_form(rng, d, k - 1, m + 1);
      CHECK(inner(a_operator(A, psi, AOp::IStar), phi) ==
            inner(psi, a_operator(A, phi, AOp::I)));
    }
    // transposes: (Tr_A psi)^T = Tr_A psi^T, (i_A psi)^T = i*_A psi^T
    CHECK(transpose(a_operator(A, psi, AOp::Trace)) ==
          a_operator(A, transpose(psi), AOp::Trace));
    CHECK(transpose(a_operator(A, psi, AOp::I)) ==
          a_operator(A, transpose(psi), AOp::IStar));

    // Bianchi sums arise at A = g, and match their alternating-sum form
    CHECK(a_operator(g, psi, AOp::I) == bianchi_direct(psi));
    CHECK(a_operator(g, psi, AOp::IStar) == bianchi_v_direct(psi));
    // Tr_g from the A-family equals the frame contraction formula
    CHECK(a_operator(g, psi, AOp::Trace) == trace_direct(psi));
  }

  auto notsym = basis_form(3, {1}, {2});
  CHECK_THROWS_AS(a_operator(notsym, g3, AOp::Trace), std::domain_error);
}

TEST_CASE("symmetrize") {
  auto a = basis_form(2, {1}, {2});
  auto s = symmetrize(a);
  CHECK(s.get({{1}, {2}}) == Rational(1, 2));
  CHECK(s.get({{2}, {1}}) == Rational(1, 2));
  auto g = metric_form<Rational>(2);
  CHECK(symmetrize(g) == g);

  Prng rng(23);
  for (int iter = 0; iter < 10; ++iter) {
    auto psi = random_form(rng, 3, 2, 2);
    CHECK(symmetrize(symmetrize(psi)) == symmetrize(psi));
    CHECK(transpose(symmetrize(psi)) == symmetrize(psi));
  }
  CHECK_THROWS_AS(symmetrize(basis_form(2, {1}, {})), std::domain_error);
}
