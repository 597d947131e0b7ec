// Double-form fields on flat box/torus domains with exact polynomial
// coefficients, and the graded differential operators acting on them.
#pragma once

#include <functional>
#include <optional>

#include "dfc/fiber.hpp"
#include "dfc/poly.hpp"

namespace dfc {

enum class DomainKind { Box, Torus };

struct FlatDomain {
  int d = 2;
  DomainKind kind = DomainKind::Box;
  std::vector<Rational> extent;  // per-axis length; default [0,1]^d
  std::vector<int> grid;         // per-axis sample counts (numeric mode)

  static FlatDomain unit_box(int d, std::vector<int> grid = {}) {
    FlatDomain dom;
    dom.d = d;
    dom.kind = DomainKind::Box;
    dom.extent.assign(d, Rational(1));
    if (grid.empty()) grid.assign(d, 0);
    dom.grid = std::move(grid);
    return dom;
  }
  static FlatDomain unit_torus(int d, std::vector<int> grid = {}) {
    auto dom = unit_box(d, std::move(grid));
    dom.kind = DomainKind::Torus;
    return dom;
  }
};

// A bidegree-(k,m) field: a DoubleForm whose coefficients are polynomials in
// the d coordinates.
using PolyForm = DoubleForm<Poly>;

struct PolyField {
  FlatDomain domain;
  PolyForm value;

  int d() const { return domain.d; }
  int k() const { return value.form_degree(); }
  int m() const { return value.vector_degree(); }
};

inline PolyField make_field(const FlatDomain& dom, PolyForm value) {
  if (value.dim() != dom.d) throw std::domain_error("make_field: dimension mismatch");
  return PolyField{dom, std::move(value)};
}

inline PolyField random_poly_field(Prng& rng, const FlatDomain& dom, int k, int m,
                                   int degree_cap = 3, int terms = 3) {
  PolyForm out(dom.d, k, m);
  if (out.in_range()) {
    for (const auto& key : enumerate_basis(dom.d, k, m))
      out.set(key, Poly::random(rng, dom.d, degree_cap, terms));
  }
  return PolyField{dom, out};
}

// --- covariant exterior derivative (flat connection) ----------------------

// Form side: alternated coordinate partials raising k by one.
inline PolyForm d_form(const PolyForm& psi) {
  int d = psi.dim();
  PolyForm out(d, psi.form_degree() + 1, psi.vector_degree());
  if (!out.in_range()) return out;
  Index merged;
  for (const auto& [key, p] : psi.coeffs()) {
    for (int a = 1; a <= d; ++a) {
      Poly q = p.diff(a);
      if (q.is_zero()) continue;
      int s = merge_sign({a}, key.form, merged);
      if (s == 0) continue;
      out.add({merged, key.vec}, s < 0 ? -q : q);
    }
  }
  return out;
}

inline PolyForm d_nabla(const PolyForm& psi, Side side) {
  if (side == Side::Form) return d_form(psi);
  return transpose(d_form(transpose(psi)));
}

// Codifferential via the sign-conjugated Hodge formula; the only
// differentiation kernel is d_form.
inline PolyForm delta_nabla(const PolyForm& psi, Side side) {
  int d = psi.dim();
  if (side == Side::Form) {
    int k = psi.form_degree();
    auto r = hodge(d_form(hodge(psi, Side::Form)), Side::Form);
    if ((d * k + d + 1) % 2 == 1) r = -r;
    return r;
  }
  int m = psi.vector_degree();
  auto r = hodge(d_nabla(hodge(psi, Side::Vector), Side::Vector), Side::Vector);
  if ((d * m + d + 1) % 2 == 1) r = -r;
  return r;
}

// --- zero-order plugin (the tensorial D, S of the extended operators) -----

struct ZeroOrderPlugin {
  // Pointwise constant-coefficient fiber maps; each takes any bidegree.
  using FiberMap = std::function<DoubleForm<Rational>(const DoubleForm<Rational>&)>;
  FiberMap D, Dstar, S, Sstar;

  bool empty() const { return !D; }
};

// Apply a constant fiber map to a polynomial-coefficient form.
inline PolyForm apply_fiber_map(const ZeroOrderPlugin::FiberMap& f, const PolyForm& psi) {
  int d = psi.dim();
  // probe target bidegree
  DoubleForm<Rational> probe(d, psi.form_degree(), psi.vector_degree());
  auto img0 = f(probe);
  PolyForm out(d, img0.form_degree(), img0.vector_degree());
  for (const auto& [key, p] : psi.coeffs()) {
    DoubleForm<Rational> e(d, psi.form_degree(), psi.vector_degree());
    e.set(key, Rational(1));
    auto img = f(e);
    for (const auto& [tkey, c] : img.coeffs()) out.add(tkey, c * p);
  }
  return out;
}

// Registration check: D commutes with transposition, S = (S* o T) o T, and
// both adjoint pairs are metric duals on the canonical basis.
void validate_plugin(const ZeroOrderPlugin& plugin, int d, int k_max = -1);

// --- second-order operators and the bilaplacian ---------------------------

enum class Op2 { CurlCurl, DivDiv, CurlDiv, DivCurl };  // H, H*, F*, F

inline PolyForm second_order(const PolyForm& psi, Op2 which,
                             const ZeroOrderPlugin* plugin = nullptr) {
  Poly half = ScalarTraits<Poly>::from_int(1) / ScalarTraits<Poly>::from_int(2);
  PolyForm r(psi.dim(), 0, 0);
  switch (which) {
    case Op2::CurlCurl:
      r = half * (d_nabla(d_nabla(psi, Side::Form), Side::Vector) +
                  d_nabla(d_nabla(psi, Side::Vector), Side::Form));
      if (plugin && !plugin->empty()) r += apply_fiber_map(plugin->D, psi);
      break;
    case Op2::DivDiv:
      r = half * (delta_nabla(delta_nabla(psi, Side::Vector), Side::Form) +
                  delta_nabla(delta_nabla(psi, Side::Form), Side::Vector));
      if (plugin && !plugin->empty()) r += apply_fiber_map(plugin->Dstar, psi);
      break;
    case Op2::CurlDiv:
      r = half * (d_nabla(delta_nabla(psi, Side::Form), Side::Vector) +
                  delta_nabla(d_nabla(psi, Side::Vector), Side::Form));
      if (plugin && !plugin->empty()) r += apply_fiber_map(plugin->Sstar, psi);
      break;
    case Op2::DivCurl:
      r = half * (d_nabla(delta_nabla(psi, Side::Vector), Side::Form) +
                  delta_nabla(d_nabla(psi, Side::Form), Side::Vector));
      if (plugin && !plugin->empty()) r += apply_fiber_map(plugin->S, psi);
      break;
  }
  return r;
}

inline PolyForm bilaplacian(const PolyForm& psi, const ZeroOrderPlugin* plugin = nullptr) {
  auto comp = [&](Op2 outer, Op2 inner_op) {
    return second_order(second_order(psi, inner_op, plugin), outer, plugin);
  };
  return comp(Op2::CurlCurl, Op2::DivDiv) + comp(Op2::DivDiv, Op2::CurlCurl) +
         comp(Op2::CurlDiv, Op2::DivCurl) + comp(Op2::DivCurl, Op2::CurlDiv);
}

// Componentwise Laplacian (for the flat-case cross-check B = Delta^2).
inline PolyForm laplacian_componentwise(const PolyForm& psi) {
  int d = psi.dim();
  PolyForm out(d, psi.form_degree(), psi.vector_degree());
  for (const auto& [key, p] : psi.coeffs()) {
    Poly acc(d);
    for (int a = 1; a <= d; ++a) acc += p.diff(a).diff(a);
    out.add(key, acc);
  }
  return out;
}

// --- exact L2 pairing over the domain --------------------------------------

inline Rational l2_inner(const PolyField& a, const PolyField& b) {
  if (a.domain.d != b.domain.d) throw std::domain_error("l2_inner: dimension");
  Rational acc(0);
  for (const auto& [key, p] : a.value.coeffs()) {
    Poly q = b.value.get(key);
    if (q.is_zero()) continue;
    acc += (p.promoted(a.domain.d) * q.promoted(a.domain.d)).integral_box(a.domain.extent);
  }
  return acc;
}

// Multiply every coefficient by a scalar polynomial (used to build
// compactly-supported bump fields).
inline PolyForm scale_coeffs(const Poly& w, const PolyForm& psi) {
  PolyForm out(psi.dim(), psi.form_degree(), psi.vector_degree());
  for (const auto& [key, p] : psi.coeffs()) out.add(key, w * p);
  return out;
}

// Bump factor prod_a (x_a (L_a - x_a))^order: vanishes with its first
// (order-1) derivatives on every box face.
inline Poly bump_poly(const FlatDomain& dom, int order = 2) {
  Poly w(dom.d, Rational(1));
  for (int a = 1; a <= dom.d; ++a) {
    Poly xa = Poly::variable(dom.d, a);
    Poly fa = xa * (Poly(dom.d, dom.extent[a - 1]) - xa);
    for (int p = 0; p < order; ++p) w *= fa;
  }
  return w;
}

}  // namespace dfc
