// Grid-sampled double-form fields on flat boxes/tori: second-order central
// differences inside, second-order one-sided at box faces, wrap-around on the
// torus. Stencil sweeps run in parallel over nodes with a serial reference.
#pragma once

#include <map>
#include <vector>

#include "dfc/exec.hpp"
#include "dfc/field.hpp"

namespace dfc {

struct GridLayout {
  std::vector<int> n;       // nodes per axis
  std::vector<long> stride;
  long total = 1;
  std::vector<double> h;    // spacing per axis
  bool periodic = false;

  static GridLayout of(const FlatDomain& dom) {
    GridLayout g;
    g.periodic = dom.kind == DomainKind::Torus;
    g.n = dom.grid;
    g.stride.resize(dom.d);
    g.h.resize(dom.d);
    for (int a = 0; a < dom.d; ++a) {
      if (g.n[a] < 4) throw std::domain_error("GridLayout: need >= 4 nodes per axis");
      g.stride[a] = g.total;
      g.total *= g.n[a];
      double len = to_double(dom.extent[a]);
      g.h[a] = g.periodic ? len / g.n[a] : len / (g.n[a] - 1);
    }
    return g;
  }

  int coord(long node, int axis) const { return int((node / stride[axis]) % n[axis]); }
  long shifted(long node, int axis, int delta) const {
    int c = coord(node, axis) + delta;
    if (periodic) {
      c = (c % n[axis] + n[axis]) % n[axis];
    }
    return node + long(c - coord(node, axis)) * stride[axis];
  }
  double x(long node, int axis) const { return coord(node, axis) * h[axis]; }
};

struct GridField {
  FlatDomain domain;
  int k = 0, m = 0;
  std::map<MultiIndexPair, std::vector<double>> comps;

  int d() const { return domain.d; }
  bool in_range() const { return k >= 0 && k <= d() && m >= 0 && m <= d(); }

  static GridField zeros(const FlatDomain& dom, int k, int m) {
    GridField f{dom, k, m, {}};
    if (!f.in_range()) return f;
    auto layout = GridLayout::of(dom);
    for (const auto& key : enumerate_basis(dom.d, k, m))
      f.comps[key] = std::vector<double>(layout.total, 0.0);
    return f;
  }
};

// First-derivative sweep along one axis: central interior, 3-point one-sided
// of the same order at box ends.
inline void d1_axis(const GridLayout& g, int axis, const std::vector<double>& in,
                    std::vector<double>& out, double scale) {
  const double h = g.h[axis];
  const int n = g.n[axis];
  const bool par = parallel_enabled();
#pragma omp parallel for if (par) schedule(static)
  for (long node = 0; node < g.total; ++node) {
    int c = g.coord(node, axis);
    double v;
    if (g.periodic || (c > 0 && c < n - 1)) {
      v = (in[g.shifted(node, axis, 1)] - in[g.shifted(node, axis, -1)]) / (2 * h);
    } else if (c == 0) {
      v = (-1.5 * in[node] + 2.0 * in[g.shifted(node, axis, 1)] -
           0.5 * in[g.shifted(node, axis, 2)]) / h;
    } else {
      v = (1.5 * in[node] - 2.0 * in[g.shifted(node, axis, -1)] +
           0.5 * in[g.shifted(node, axis, -2)]) / h;
    }
    out[node] += scale * v;
  }
}

inline GridField sample(const PolyField& f, const std::vector<int>& grid) {
  FlatDomain dom = f.domain;
  dom.grid = grid;
  GridField out = GridField::zeros(dom, f.k(), f.m());
  auto layout = GridLayout::of(dom);
  const bool par = parallel_enabled();
  for (auto& [key, vals] : out.comps) {
    Poly p = f.value.get(key).promoted(dom.d);
    auto* vp = &vals;
#pragma omp parallel for if (par) schedule(static)
    for (long node = 0; node < layout.total; ++node) {
      std::vector<double> x(dom.d);
      for (int a = 0; a < dom.d; ++a) x[a] = layout.x(node, a);
      (*vp)[node] = p.eval_double(x);
    }
  }
  return out;
}

// Pointwise application of a constant fiber map (hodge, transpose, ...).
template <class Op>
GridField apply_pointwise(const GridField& f, Op&& op, int k_dst, int m_dst) {
  GridField out = GridField::zeros(f.domain, k_dst, m_dst);
  if (!f.in_range() || !out.in_range()) return out;
  int d = f.d();
  for (const auto& [key, vals] : f.comps) {
    DoubleForm<Rational> e(d, f.k, f.m);
    e.set(key, Rational(1));
    DoubleForm<Rational> img = op(e);
    for (const auto& [tkey, c] : img.coeffs()) {
      double cd = to_double(c);
      auto& dst = out.comps[tkey];
      for (long i = 0; i < long(vals.size()); ++i) dst[i] += cd * vals[i];
    }
  }
  return out;
}

inline GridField transpose(const GridField& f) {
  return apply_pointwise(f, [](const DoubleForm<Rational>& a) { return transpose(a); },
                         f.m, f.k);
}

inline GridField hodge(const GridField& f, Side side) {
  int kd = side == Side::Form ? f.d() - f.k : f.k;
  int md = side == Side::Form ? f.m : f.d() - f.m;
  return apply_pointwise(
      f, [side](const DoubleForm<Rational>& a) { return hodge(a, side); }, kd, md);
}

inline GridField d_form_grid(const GridField& f) {
  GridField out = GridField::zeros(f.domain, f.k + 1, f.m);
  if (!f.in_range() || !out.in_range()) return out;
  auto layout = GridLayout::of(f.domain);
  Index merged;
  for (const auto& [key, vals] : f.comps) {
    for (int a = 1; a <= f.d(); ++a) {
      int s = merge_sign({a}, key.form, merged);
      if (s == 0) continue;
      d1_axis(layout, a - 1, vals, out.comps[{merged, key.vec}], double(s));
    }
  }
  return out;
}

inline GridField d_nabla(const GridField& f, Side side) {
  if (side == Side::Form) return d_form_grid(f);
  return transpose(d_form_grid(transpose(f)));
}

inline GridField delta_nabla(const GridField& f, Side side) {
  int d = f.d();
  int deg = side == Side::Form ? f.k : f.m;
  auto r = hodge(d_nabla(hodge(f, side), side), side);
  if ((d * deg + d + 1) % 2 == 1) {
    for (auto& [key, vals] : r.comps)
      for (auto& v : vals) v = -v;
  }
  return r;
}

inline GridField second_order(const GridField& f, Op2 which) {
  GridField a{f.domain, 0, 0, {}}, b{f.domain, 0, 0, {}};
  switch (which) {
    case Op2::CurlCurl:
      a = d_nabla(d_nabla(f, Side::Form), Side::Vector);
      b = d_nabla(d_nabla(f, Side::Vector), Side::Form);
      break;
    case Op2::DivDiv:
      a = delta_nabla(delta_nabla(f, Side::Vector), Side::Form);
      b = delta_nabla(delta_nabla(f, Side::Form), Side::Vector);
      break;
    case Op2::CurlDiv:
      a = d_nabla(delta_nabla(f, Side::Form), Side::Vector);
      b = delta_nabla(d_nabla(f, Side::Vector), Side::Form);
      break;
    case Op2::DivCurl:
      a = d_nabla(delta_nabla(f, Side::Vector), Side::Form);
      b = delta_nabla(d_nabla(f, Side::Form), Side::Vector);
      break;
  }
  GridField out = GridField::zeros(a.domain, a.k, a.m);
  for (auto& [key, vals] : out.comps) {
    const auto& av = a.comps.at(key);
    const auto& bv = b.comps.at(key);
    for (long i = 0; i < long(vals.size()); ++i) vals[i] = 0.5 * (av[i] + bv[i]);
  }
  return out;
}

// Trapezoid weight of a node (product of per-axis weights).
inline double trapezoid_weight(const GridLayout& g, long node) {
  double w = 1.0;
  for (std::size_t a = 0; a < g.n.size(); ++a) {
    double wa = g.h[a];
    if (!g.periodic) {
      int c = g.coord(node, int(a));
      if (c == 0 || c == g.n[a] - 1) wa *= 0.5;
    }
    w *= wa;
  }
  return w;
}

inline double l2_inner(const GridField& a, const GridField& b) {
  if (a.k != b.k || a.m != b.m) throw std::domain_error("l2_inner(grid): bidegree");
  auto layout = GridLayout::of(a.domain);
  double acc = 0.0;
  for (const auto& [key, av] : a.comps) {
    auto it = b.comps.find(key);
    if (it == b.comps.end()) continue;
    const auto& bv = it->second;
    double local = 0.0;
    const bool par = parallel_enabled();
#pragma omp parallel for if (par) schedule(static) reduction(+ : local)
    for (long node = 0; node < layout.total; ++node)
      local += trapezoid_weight(layout, node) * av[node] * bv[node];
    acc += local;
  }
  return acc;
}

inline double max_norm(const GridField& a) {
  double m = 0.0;
  for (const auto& [key, vals] : a.comps)
    for (double v : vals) m = std::max(m, std::abs(v));
  return m;
}

inline GridField operator-(const GridField& a, const GridField& b) {
  GridField out = a;
  for (auto& [key, vals] : out.comps) {
    const auto& bv = b.comps.at(key);
    for (long i = 0; i < long(vals.size()); ++i) vals[i] -= bv[i];
  }
  return out;
}

}  // namespace dfc
