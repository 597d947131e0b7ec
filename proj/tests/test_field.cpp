#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dfc/field.hpp"
#include "dfc/identities.hpp"

using namespace dfc;

namespace {

PolyForm random_pform(Prng& rng, int d, int k, int m, int cap = 3) {
  auto dom = FlatDomain::unit_box(d);
  return random_poly_field(rng, dom, k, m, cap).value;
}

}  // namespace

TEST_CASE("coordinate differential and flatness") {
  int d = 2;
  auto x1 = Poly::variable(d, 1);
  auto x2 = Poly::variable(d, 2);
  PolyForm f(d, 0, 0);
  f.set({{}, {}}, x1 * x2);

  auto df = d_form(f);
  CHECK(df.get({{1}, {}}) == x2);
  CHECK(df.get({{2}, {}}) == x1);

  Prng rng(1);
  for (int iter = 0; iter < 15; ++iter) {
    int dd = int(rng.next_int(2, 3));
    auto psi = random_pform(rng, dd, int(rng.next_int(0, 2)), int(rng.next_int(0, 2)));
    CHECK(d_nabla(d_nabla(psi, Side::Form), Side::Form).is_zero());
    CHECK(d_nabla(d_nabla(psi, Side::Vector), Side::Vector).is_zero());
  }

  // constant metric field is parallel
  auto g = metric_form<Poly>(3);
  CHECK(d_nabla(g, Side::Vector).is_zero());
  CHECK(d_nabla(g, Side::Form).is_zero());
}

TEST_CASE("codifferential: sign formula and adjoint exactness") {
  int d = 2;
  PolyForm tau(d, 1, 0);
  tau.set({{1}, {}}, Poly::variable(d, 1));  // x1 dx1
  auto dt = delta_nabla(tau, Side::Form);
  CHECK(dt.get({{}, {}}) == Poly(d, Rational(-1)));

  Prng rng(2);
  for (int iter = 0; iter < 15; ++iter) {
    int dd = int(rng.next_int(2, 3));
    auto psi = random_pform(rng, dd, int(rng.next_int(0, 2)), int(rng.next_int(0, 2)));
    CHECK(delta_nabla(delta_nabla(psi, Side::Form), Side::Form).is_zero());
    CHECK(delta_nabla(delta_nabla(psi, Side::Vector), Side::Vector).is_zero());

    // delta_V = -Tr_g d - d Tr_g   and   delta = -Tr_g d_V - d_V Tr_g
    auto g = metric_form<Poly>(dd);
    auto trace = [&](const PolyForm& a) { return a_operator(g, a, AOp::Trace); };
    CHECK(delta_nabla(psi, Side::Vector) ==
          -(trace(d_nabla(psi, Side::Form)) + d_nabla(trace(psi), Side::Form)));
    CHECK(delta_nabla(psi, Side::Form) ==
          -(trace(d_nabla(psi, Side::Vector)) + d_nabla(trace(psi), Side::Vector)));
  }
}

TEST_CASE("curl-curl of a scalar is its Hessian") {
  int d = 2;
  PolyForm f(d, 0, 0);
  f.set({{}, {}}, Poly::variable(d, 1) * Poly::variable(d, 2));
  auto h = second_order(f, Op2::CurlCurl);
  CHECK(h.get({{1}, {2}}) == Poly(d, Rational(1)));
  CHECK(h.get({{2}, {1}}) == Poly(d, Rational(1)));
  CHECK(h.get({{1}, {1}}).is_zero());

  Prng rng(3);
  for (int iter = 0; iter < 10; ++iter) {
    int dd = int(rng.next_int(2, 3));
    int k = int(rng.next_int(0, 1)), m = int(rng.next_int(0, 1));
    auto psi = random_pform(rng, dd, k, m);
    // H(psi^T) = (H psi)^T
    CHECK(second_order(transpose(psi), Op2::CurlCurl) ==
          transpose(second_order(psi, Op2::CurlCurl)));
    // (F* psi^T)^T = F psi
    CHECK(transpose(second_order(transpose(psi), Op2::CurlDiv)) ==
          second_order(psi, Op2::DivCurl));
    // exactness: H H = 0 and F H = 0 (flat, no plugin)
    auto hpsi = second_order(psi, Op2::CurlCurl);
    CHECK(second_order(hpsi, Op2::CurlCurl).is_zero());
    CHECK(second_order(hpsi, Op2::DivCurl).is_zero());
  }
}

TEST_CASE("bilaplacian on flat domains is the componentwise squared Laplacian") {
  int d = 2;
  PolyForm f(d, 0, 0);
  auto x1 = Poly::variable(d, 1);
  f.set({{}, {}}, x1 * x1 * x1 * x1);
  auto b = bilaplacian(f);
  CHECK(b.get({{}, {}}) == Poly(d, Rational(24)));

  PolyForm affine(d, 0, 0);
  affine.set({{}, {}}, Poly(d, Rational(1)) + x1);
  CHECK(bilaplacian(affine).is_zero());

  Prng rng(4);
  for (int iter = 0; iter < 8; ++iter) {
    int dd = int(rng.next_int(2, 3));
    int k = int(rng.next_int(0, dd)), m = int(rng.next_int(0, dd));
    auto psi = random_pform(rng, dd, k, m);
    CHECK(bilaplacian(psi) == laplacian_componentwise(laplacian_componentwise(psi)));
  }
}

TEST_CASE("L2 duality of (H,H*) and (F,F*) on compactly supported fields") {
  Prng rng(5);
  auto dom = FlatDomain::unit_box(2);
  auto w = bump_poly(dom, 2);
  for (int iter = 0; iter < 6; ++iter) {
    int k = int(rng.next_int(0, 1)), m = int(rng.next_int(0, 1));
    auto psi = make_field(dom, scale_coeffs(w, random_pform(rng, 2, k, m, 2)));
    auto eta =
        make_field(dom, scale_coeffs(w, random_pform(rng, 2, k + 1, m + 1, 2)));
    CHECK(l2_inner(make_field(dom, second_order(psi.value, Op2::CurlCurl)), eta) ==
          l2_inner(psi, make_field(dom, second_order(eta.value, Op2::DivDiv))));
    auto etaF =
        make_field(dom, scale_coeffs(w, random_pform(rng, 2, k + 1, m == 0 ? 0 : m - 1, 2)));
    if (m >= 1) {
      CHECK(l2_inner(make_field(dom, second_order(psi.value, Op2::DivCurl)), etaF) ==
            l2_inner(psi, make_field(dom, second_order(etaF.value, Op2::CurlDiv))));
    }
  }
}

TEST_CASE("zero-order plugin: validation and effect on the operators") {
  // D = g ^ ., D* = Tr_g, S = Bianchi sum, S* = its transpose-conjugate
  ZeroOrderPlugin plugin;
  plugin.D = [](const DoubleForm<Rational>& a) {
    return a_operator(metric_form<Rational>(a.dim()), a, AOp::Wedge);
  };
  plugin.Dstar = [](const DoubleForm<Rational>& a) {
    return a_operator(metric_form<Rational>(a.dim()), a, AOp::Trace);
  };
  plugin.S = [](const DoubleForm<Rational>& a) {
    return a_operator(metric_form<Rational>(a.dim()), a, AOp::I);
  };
  plugin.Sstar = [](const DoubleForm<Rational>& a) {
    return a_operator(metric_form<Rational>(a.dim()), a, AOp::IStar);
  };
  CHECK_NOTHROW(validate_plugin(plugin, 2));
  CHECK_NOTHROW(validate_plugin(plugin, 3));

  Prng rng(6);
  auto psi = random_pform(rng, 2, 1, 1);
  auto with = second_order(psi, Op2::CurlCurl, &plugin);
  auto without = second_order(psi, Op2::CurlCurl);
  auto diff = with - without;
  CHECK(diff == apply_fiber_map(plugin.D, psi));

  // a non-equivariant D must be rejected
  ZeroOrderPlugin bad = plugin;
  bad.D = [](const DoubleForm<Rational>& a) {
    DoubleForm<Rational> out(a.dim(), a.form_degree() + 1, a.vector_degree() + 1);
    if (!out.in_range()) return out;
    // wedge with an asymmetric (1,1) tensor
    DoubleForm<Rational> t(a.dim(), 1, 1);
    t.set({{1}, {a.dim() > 1 ? 2 : 1}}, Rational(1));
    return wedge(t, a);
  };
  CHECK_THROWS_AS(validate_plugin(bad, 2), std::domain_error);
}
