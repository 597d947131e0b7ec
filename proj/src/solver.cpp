#include "dfc/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "dfc/prng.hpp"

namespace dfc {

namespace {

using Triplet = Eigen::Triplet<double>;

constexpr long kDenseGuardrail = 20000;

// --- one-axis difference operators ----------------------------------------

enum class AxisKind { D1, D2 };

// Stencil rows: interior central, one-sided of order >= 3 at box ends so the
// composed fourth-order operator stays second-order accurate up to the faces.
void axis_stencil(AxisKind kind, int c, int n, bool periodic, double h,
                  std::vector<std::pair<int, double>>& out) {
  out.clear();
  // The one-sided stencils are chosen to reproduce the CENTRAL stencils'
  // leading truncation terms (moments matched through j^5), so the local
  // truncation field stays smooth across the face rows and compositions of
  // the operators remain second-order consistent up to the boundary.
  if (kind == AxisKind::D1) {
    if (periodic || (c > 0 && c < n - 1)) {
      out = {{-1, -0.5 / h}, {1, 0.5 / h}};
    } else if (c == 0) {
      out = {{0, -3.0 / h}, {1, 8.0 / h},  {2, -10.0 / h},
             {3, 7.5 / h},  {4, -3.0 / h}, {5, 0.5 / h}};
    } else {
      out = {{0, 3.0 / h},  {-1, -8.0 / h}, {-2, 10.0 / h},
             {-3, -7.5 / h}, {-4, 3.0 / h}, {-5, -0.5 / h}};
    }
  } else {
    double h2 = h * h;
    if (periodic || (c > 0 && c < n - 1)) {
      out = {{-1, 1.0 / h2}, {0, -2.0 / h2}, {1, 1.0 / h2}};
    } else if (c == 0) {
      out = {{0, 4.0 / h2},   {1, -14.0 / h2}, {2, 20.0 / h2},
             {3, -15.0 / h2}, {4, 6.0 / h2},   {5, -1.0 / h2}};
    } else {
      out = {{0, 4.0 / h2},   {-1, -14.0 / h2}, {-2, 20.0 / h2},
             {-3, -15.0 / h2}, {-4, 6.0 / h2},   {-5, -1.0 / h2}};
    }
  }
}

SpMat axis_op(const GridLayout& g, int axis, AxisKind kind) {
  std::vector<Triplet> trips;
  std::vector<std::pair<int, double>> st;
  for (long node = 0; node < g.total; ++node) {
    int c = g.coord(node, axis);
    axis_stencil(kind, c, g.n[axis], g.periodic, g.h[axis], st);
    for (auto [off, w] : st) trips.emplace_back(node, g.shifted(node, axis, off), w);
  }
  SpMat m(g.total, g.total);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

// --- fiber coefficient blocks ----------------------------------------------

struct FiberBlocks {
  // per target/source key pair, the coefficient of d^2/(dx_a dx_b)
  std::vector<Triplet> entries[10][10];  // [a-1][b-1], d <= 8 is plenty
};

std::vector<MultiIndexPair> basis_or_empty(int d, int k, int m) {
  if (k < 0 || k > d || m < 0 || m > d) return {};
  return enumerate_basis(d, k, m);
}

long key_index(const std::vector<MultiIndexPair>& basis, const MultiIndexPair& key) {
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (basis[i] == key) return long(i);
  return -1;
}

// H  = sum_ab (e_a ^)_form (e_b ^)_vec  d2_ab
// H* = sum_ab (i_{e_a})_form (i_{e_b})_vec d2_ab
// F* = -sum_ab (e_b^T ^)_vec (i_{e_a})_form d2_ab
// F  = -sum_ab (e_a ^)_form (i_{e_b})_vec d2_ab
enum class SecondOrderOp { H, Hstar, Fstar, F };

void fiber_coefficient(SecondOrderOp which, int d, int k, int m, int a, int b,
                       const std::vector<MultiIndexPair>& src,
                       const std::vector<MultiIndexPair>& dst,
                       std::vector<Triplet>& out) {
  out.clear();
  for (std::size_t j = 0; j < src.size(); ++j) {
    DoubleForm<Rational> e(d, k, m);
    e.set(src[j], Rational(1));
    DoubleForm<Rational> img(d, 0, 0);
    auto ea = basis_vector<Rational>(d, a);
    auto eb = basis_vector<Rational>(d, b);
    DoubleForm<Rational> cov_a(d, 1, 0), cov_b(d, 0, 1);
    cov_a.set({{a}, {}}, Rational(1));
    cov_b.set({{}, {b}}, Rational(1));
    switch (which) {
      case SecondOrderOp::H:
        img = wedge(cov_a, wedge(cov_b, e));
        break;
      case SecondOrderOp::Hstar:
        img = interior(ea, interior(eb, e, Side::Vector), Side::Form);
        break;
      case SecondOrderOp::Fstar:
        img = -wedge(cov_b, interior(ea, e, Side::Form));
        break;
      case SecondOrderOp::F:
        img = -wedge(cov_a, interior(eb, e, Side::Vector));
        break;
    }
    for (const auto& [tkey, c] : img.coeffs()) {
      long i = key_index(dst, tkey);
      if (i >= 0) out.emplace_back(i, long(j), to_double(c));
    }
  }
}

void op_target(SecondOrderOp which, int k, int m, int& kd, int& md) {
  switch (which) {
    case SecondOrderOp::H: kd = k + 1; md = m + 1; break;
    case SecondOrderOp::Hstar: kd = k - 1; md = m - 1; break;
    case SecondOrderOp::Fstar: kd = k - 1; md = m + 1; break;
    case SecondOrderOp::F: kd = k + 1; md = m - 1; break;
  }
}

GridOperator assemble_one(const FlatDomain& dom, int k, int m, SecondOrderOp which,
                          const ZeroOrderPlugin* plugin) {
  auto layout = GridLayout::of(dom);
  int d = dom.d;
  int kd, md;
  op_target(which, k, m, kd, md);
  auto src = basis_or_empty(d, k, m);
  auto dst = basis_or_empty(d, kd, md);
  GridOperator op{dom, k, m, kd, md,
                  SpMat(long(dst.size()) * layout.total, long(src.size()) * layout.total)};
  if (src.empty() || dst.empty()) return op;

  // cache the d2 operators per (a,b)
  std::vector<SpMat> d1(d);
  for (int a = 0; a < d; ++a) d1[a] = axis_op(layout, a, AxisKind::D1);

  std::vector<Triplet> trips;
  std::vector<Triplet> fibc;
  for (int a = 1; a <= d; ++a) {
    for (int b = 1; b <= d; ++b) {
      fiber_coefficient(which, d, k, m, a, b, src, dst, fibc);
      if (fibc.empty()) continue;
      SpMat d2 = a == b ? axis_op(layout, a - 1, AxisKind::D2)
                        : SpMat(d1[a - 1] * d1[b - 1]);
      for (const auto& f : fibc) {
        long row0 = f.row() * layout.total;
        long col0 = f.col() * layout.total;
        for (int outer = 0; outer < d2.outerSize(); ++outer)
          for (SpMat::InnerIterator it(d2, outer); it; ++it)
            trips.emplace_back(row0 + it.row(), col0 + it.col(), f.value() * it.value());
      }
    }
  }

  // optional zero-order tensorial blocks (diagonal over nodes)
  if (plugin && !plugin->empty()) {
    const ZeroOrderPlugin::FiberMap* fm = nullptr;
    switch (which) {
      case SecondOrderOp::H: fm = &plugin->D; break;
      case SecondOrderOp::Hstar: fm = &plugin->Dstar; break;
      case SecondOrderOp::F: fm = &plugin->S; break;
      case SecondOrderOp::Fstar: fm = &plugin->Sstar; break;
    }
    for (std::size_t j = 0; j < src.size(); ++j) {
      DoubleForm<Rational> e(d, k, m);
      e.set(src[j], Rational(1));
      auto img = (*fm)(e);
      for (const auto& [tkey, c] : img.coeffs()) {
        long i = key_index(dst, tkey);
        if (i < 0) continue;
        double v = to_double(c);
        for (long node = 0; node < layout.total; ++node)
          trips.emplace_back(i * layout.total + node, long(j) * layout.total + node, v);
      }
    }
  }

  op.mat.setFromTriplets(trips.begin(), trips.end());
  return op;
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::TT: return "TT";
    case Family::NN: return "NN";
    case Family::NT: return "NT";
    case Family::TN: return "TN";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "TT") return Family::TT;
  if (s == "NN") return Family::NN;
  if (s == "NT") return Family::NT;
  if (s == "TN") return Family::TN;
  throw std::domain_error("unknown family: " + s);
}

OperatorSet assemble(const FlatDomain& dom, int k, int m, const ZeroOrderPlugin* plugin) {
  if (plugin && !plugin->empty()) validate_plugin(*plugin, dom.d);
  for (int a = 0; a < dom.d; ++a)
    if (dom.grid[a] < 8)
      throw std::domain_error("assemble: fourth-order solves need grid >= 8 per axis");
  OperatorSet ops;
  ops.domain = dom;
  ops.k = k;
  ops.m = m;
  ops.H = assemble_one(dom, k, m, SecondOrderOp::H, plugin);
  ops.Hstar = assemble_one(dom, k, m, SecondOrderOp::Hstar, plugin);
  ops.Fstar = assemble_one(dom, k, m, SecondOrderOp::Fstar, plugin);
  ops.F = assemble_one(dom, k, m, SecondOrderOp::F, plugin);
  ops.H_from_down = assemble_one(dom, k - 1, m - 1, SecondOrderOp::H, plugin);
  ops.Hstar_from_up = assemble_one(dom, k + 1, m + 1, SecondOrderOp::Hstar, plugin);
  ops.Fstar_from_up = assemble_one(dom, k + 1, m - 1, SecondOrderOp::Fstar, plugin);
  ops.F_from_mixed = assemble_one(dom, k - 1, m + 1, SecondOrderOp::F, plugin);
  ops.B = GridOperator{dom, k, m, k, m,
                       SpMat(ops.H.mat.cols(), ops.H.mat.cols())};
  // B = H H* + H* H + F* F + F F* as a sparse matrix product identity
  ops.B.mat = SpMat(ops.H_from_down.mat * ops.Hstar.mat) +
              SpMat(ops.Hstar_from_up.mat * ops.H.mat) +
              SpMat(ops.Fstar_from_up.mat * ops.F.mat) +
              SpMat(ops.F_from_mixed.mat * ops.Fstar.mat);
  return ops;
}

long grid_unknowns(const FlatDomain& dom, int k, int m) {
  auto layout = GridLayout::of(dom);
  return long(basis_or_empty(dom.d, k, m).size()) * layout.total;
}

Eigen::VectorXd to_vector(const GridField& f) {
  auto layout = GridLayout::of(f.domain);
  auto basis = basis_or_empty(f.d(), f.k, f.m);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(long(basis.size()) * layout.total);
  long off = 0;
  for (const auto& key : basis) {
    const auto& vals = f.comps.at(key);
    for (long i = 0; i < layout.total; ++i) v[off + i] = vals[i];
    off += layout.total;
  }
  return v;
}

GridField from_vector(const FlatDomain& dom, int k, int m, const Eigen::VectorXd& v) {
  GridField f = GridField::zeros(dom, k, m);
  auto layout = GridLayout::of(dom);
  long off = 0;
  for (const auto& key : basis_or_empty(dom.d, k, m)) {
    auto& vals = f.comps.at(key);
    for (long i = 0; i < layout.total; ++i) vals[i] = v[off + i];
    off += layout.total;
  }
  return f;
}

Eigen::VectorXd trapezoid_weights(const FlatDomain& dom, int k, int m) {
  auto layout = GridLayout::of(dom);
  long nb = long(basis_or_empty(dom.d, k, m).size());
  Eigen::VectorXd w(nb * layout.total);
  for (long node = 0; node < layout.total; ++node) {
    double wn = trapezoid_weight(layout, node);
    for (long key = 0; key < nb; ++key) w[key * layout.total + node] = wn;
  }
  return w;
}

namespace {

// --- trace rows -------------------------------------------------------------

struct FaceGeometry {
  Face face;
  FlatDomain bulk_dom;
  FlatDomain face_dom;
  GridLayout bulk;
  GridLayout facelay;
  std::vector<long> bulk_node;  // face node -> bulk node
};

FaceGeometry face_geometry(const FlatDomain& dom, Face face) {
  FaceGeometry g{face, dom, face_domain(dom, face), GridLayout::of(dom),
                 GridLayout::of(face_domain(dom, face)), {}};
  g.bulk_node.resize(g.facelay.total);
  int fixed = face.side == 0 ? 0 : g.bulk.n[face.axis - 1] - 1;
  for (long fnode = 0; fnode < g.facelay.total; ++fnode) {
    long node = 0;
    int fa = 0;
    for (int a = 0; a < dom.d; ++a) {
      int c = (a == face.axis - 1) ? fixed : g.facelay.coord(fnode, fa++);
      node += long(c) * g.bulk.stride[a];
    }
    g.bulk_node[fnode] = node;
  }
  return g;
}

enum class PTag { TT, NT, TN, NN };

// Zeroth-order projection rows: face unknowns (of the projected bidegree)
// from bulk unknowns at bidegree (k,m).

SpMat projection_rows(const FaceGeometry& g, int k, int m, PTag which) {
  int d = g.bulk_dom.d;
  int kd = k - (which == PTag::NT || which == PTag::NN ? 1 : 0);
  int md = m - (which == PTag::TN || which == PTag::NN ? 1 : 0);
  auto src = basis_or_empty(d, k, m);
  auto dst = basis_or_empty(d - 1, kd, md);
  SpMat rows(long(dst.size()) * g.facelay.total, long(src.size()) * g.bulk.total);
  std::vector<Triplet> trips;
  int orient = normal_orientation(g.face);
  for (std::size_t j = 0; j < src.size(); ++j) {
    const auto& key = src[j];
    int pos_f = index_position(key.form, g.face.axis);
    int pos_v = index_position(key.vec, g.face.axis);
    bool want_f = which == PTag::NT || which == PTag::NN;
    bool want_v = which == PTag::TN || which == PTag::NN;
    if ((pos_f != 0) != want_f || (pos_v != 0) != want_v) continue;
    double sign = 1.0;
    Index form = key.form, vec = key.vec;
    if (want_f) {
      sign *= orient * ((pos_f - 1) % 2 == 0 ? 1.0 : -1.0);
      form = index_without(form, g.face.axis);
    }
    if (want_v) {
      sign *= orient * ((pos_v - 1) % 2 == 0 ? 1.0 : -1.0);
      vec = index_without(vec, g.face.axis);
    }
    long i = key_index(dst, {relabel_to_face(g.face, form), relabel_to_face(g.face, vec)});
    if (i < 0) continue;
    for (long fnode = 0; fnode < g.facelay.total; ++fnode)
      trips.emplace_back(i * g.facelay.total + fnode,
                         long(j) * g.bulk.total + g.bulk_node[fnode], sign);
  }
  rows.setFromTriplets(trips.begin(), trips.end());
  return rows;
}

// Inward normal derivative (4-point one-sided), componentwise, shaped as a
// bulk operator whose rows live only at the face nodes so that projections
// can be composed on the left.
SpMat normal_derivative_rows(const FaceGeometry& g, int k, int m) {
  int d = g.bulk_dom.d;
  auto src = basis_or_empty(d, k, m);
  SpMat rows(long(src.size()) * g.bulk.total, long(src.size()) * g.bulk.total);
  std::vector<Triplet> trips;
  int ax = g.face.axis - 1;
  double h = g.bulk.h[ax];
  int step = g.face.side == 0 ? 1 : -1;
  const double c0 = -11.0 / 6 / h, c1 = 3.0 / h, c2 = -1.5 / h, c3 = 1.0 / 3 / h;
  for (std::size_t j = 0; j < src.size(); ++j) {
    long base = long(j) * g.bulk.total;
    for (long fnode = 0; fnode < g.facelay.total; ++fnode) {
      long n0 = g.bulk_node[fnode];
      long row = base + n0;
      trips.emplace_back(row, base + n0, c0);
      trips.emplace_back(row, base + g.bulk.shifted(n0, ax, step), c1);
      trips.emplace_back(row, base + g.bulk.shifted(n0, ax, 2 * step), c2);
      trips.emplace_back(row, base + g.bulk.shifted(n0, ax, 3 * step), c3);
    }
  }
  rows.setFromTriplets(trips.begin(), trips.end());
  return rows;
}

// First-order operator on the face lattice: d0, dV0, delta0, deltaV0 at the
// given face bidegree.
enum class FaceOp { D, DV, Delta, DeltaV };

SpMat face_first_order(const FaceGeometry& g, int k, int m, FaceOp which) {
  int df = g.face_dom.d;
  bool is_d = which == FaceOp::D || which == FaceOp::DV;
  Side side = (which == FaceOp::D || which == FaceOp::Delta) ? Side::Form : Side::Vector;
  int kd = k, md = m;
  if (is_d) {
    (side == Side::Form ? kd : md) += 1;
  } else {
    (side == Side::Form ? kd : md) -= 1;
  }
  auto src = basis_or_empty(df, k, m);
  auto dst = basis_or_empty(df, kd, md);
  SpMat out(long(dst.size()) * g.facelay.total, long(src.size()) * g.facelay.total);
  if (src.empty() || dst.empty()) return out;
  std::vector<SpMat> d1(df);
  for (int a = 0; a < df; ++a) d1[a] = axis_op(g.facelay, a, AxisKind::D1);
  std::vector<Triplet> trips;
  for (int a = 1; a <= df; ++a) {
    // fiber factor for axis a
    for (std::size_t j = 0; j < src.size(); ++j) {
      DoubleForm<Rational> e(df, k, m);
      e.set(src[j], Rational(1));
      DoubleForm<Rational> img(df, 0, 0);
      if (is_d) {
        DoubleForm<Rational> cov(df, side == Side::Form ? 1 : 0, side == Side::Form ? 0 : 1);
        if (side == Side::Form)
          cov.set({{a}, {}}, Rational(1));
        else
          cov.set({{}, {a}}, Rational(1));
        img = wedge(cov, e);
      } else {
        img = -interior(basis_vector<Rational>(df, a), e, side);
      }
      for (const auto& [tkey, c] : img.coeffs()) {
        long i = key_index(dst, tkey);
        if (i < 0) continue;
        double v = to_double(c);
        for (int outer = 0; outer < d1[a - 1].outerSize(); ++outer)
          for (SpMat::InnerIterator it(d1[a - 1], outer); it; ++it)
            trips.emplace_back(i * g.facelay.total + it.row(),
                               long(j) * g.facelay.total + it.col(), v * it.value());
      }
    }
  }
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

enum class TraceOp { Ptt, Ptn, Pnt, Pnn, T, Tstar, F, Fstar };

// Trace rows of one boundary operator on one face, from bulk unknowns at
// bidegree (k,m). First-order operators use the flat expansions
//   T  = Ptt grad_r - d0 Pnt - dV0 Ptn        T* = Pnn grad_r - delta0 Ptn - deltaV0 Pnt
//   F* = Pnt grad_r - dV0 Pnn - delta0 Ptt    F  = Ptn grad_r - d0 Pnn - deltaV0 Ptt
SpMat trace_rows(const FaceGeometry& g, int k, int m, TraceOp op) {
  switch (op) {
    case TraceOp::Ptt: return projection_rows(g, k, m, PTag::TT);
    case TraceOp::Ptn: return projection_rows(g, k, m, PTag::TN);
    case TraceOp::Pnt: return projection_rows(g, k, m, PTag::NT);
    case TraceOp::Pnn: return projection_rows(g, k, m, PTag::NN);
    default: break;
  }
  SpMat nd = normal_derivative_rows(g, k, m);
  switch (op) {
    case TraceOp::T:
      return SpMat(projection_rows(g, k, m, PTag::TT) * nd) -
             SpMat(face_first_order(g, k - 1, m, FaceOp::D) *
                   projection_rows(g, k, m, PTag::NT)) -
             SpMat(face_first_order(g, k, m - 1, FaceOp::DV) *
                   projection_rows(g, k, m, PTag::TN));
    case TraceOp::Tstar:
      return SpMat(projection_rows(g, k, m, PTag::NN) * nd) -
             SpMat(face_first_order(g, k, m - 1, FaceOp::Delta) *
                   projection_rows(g, k, m, PTag::TN)) -
             SpMat(face_first_order(g, k - 1, m, FaceOp::DeltaV) *
                   projection_rows(g, k, m, PTag::NT));
    case TraceOp::Fstar:
      return SpMat(projection_rows(g, k, m, PTag::NT) * nd) -
             SpMat(face_first_order(g, k - 1, m - 1, FaceOp::DV) *
                   projection_rows(g, k, m, PTag::NN)) -
             SpMat(face_first_order(g, k, m, FaceOp::Delta) *
                   projection_rows(g, k, m, PTag::TT));
    case TraceOp::F:
      return SpMat(projection_rows(g, k, m, PTag::TN) * nd) -
             SpMat(face_first_order(g, k - 1, m - 1, FaceOp::D) *
                   projection_rows(g, k, m, PTag::NN)) -
             SpMat(face_first_order(g, k, m, FaceOp::DeltaV) *
                   projection_rows(g, k, m, PTag::TT));
    default:
      throw std::logic_error("trace_rows: unreachable");
  }
}

// sqrt(face trapezoid weight) row scaling.
SpMat face_weighted(const FaceGeometry& g, const SpMat& rows) {
  long per_key = g.facelay.total;
  Eigen::VectorXd w(rows.rows());
  for (long r = 0; r < rows.rows(); ++r)
    w[r] = std::sqrt(trapezoid_weight(g.facelay, r % per_key));
  return SpMat(w.asDiagonal() * rows);
}

struct FamilyOps {
  std::vector<TraceOp> first_layer;   // six zeroth/first-order operators
  std::vector<TraceOp> second_trace;  // trace part of the two second-layer rows
  const GridOperator* second_op[2];   // interior operator they compose with
};

FamilyOps family_ops(const OperatorSet& ops, Family family) {
  switch (family) {
    case Family::TT:
      return {{TraceOp::Ptt, TraceOp::Ptn, TraceOp::Pnt, TraceOp::T, TraceOp::Fstar,
               TraceOp::F},
              {TraceOp::Ptt, TraceOp::T},
              {&ops.Hstar, &ops.Hstar}};
    case Family::NN:
      return {{TraceOp::Pnn, TraceOp::Ptn, TraceOp::Pnt, TraceOp::Tstar, TraceOp::Fstar,
               TraceOp::F},
              {TraceOp::Pnn, TraceOp::Tstar},
              {&ops.H, &ops.H}};
    case Family::NT:
      return {{TraceOp::Pnt, TraceOp::Pnn, TraceOp::Ptt, TraceOp::Fstar, TraceOp::T,
               TraceOp::Tstar},
              {TraceOp::Pnt, TraceOp::Fstar},
              {&ops.F, &ops.F}};
    case Family::TN:
      return {{TraceOp::Ptn, TraceOp::Pnn, TraceOp::Ptt, TraceOp::F, TraceOp::T,
               TraceOp::Tstar},
              {TraceOp::Ptn, TraceOp::F},
              {&ops.Fstar, &ops.Fstar}};
  }
  throw std::logic_error("family_ops: unreachable");
}

std::string trace_op_name(TraceOp op) {
  switch (op) {
    case TraceOp::Ptt: return "Ptt";
    case TraceOp::Ptn: return "Ptn";
    case TraceOp::Pnt: return "Pnt";
    case TraceOp::Pnn: return "Pnn";
    case TraceOp::T: return "T";
    case TraceOp::Tstar: return "Tstar";
    case TraceOp::F: return "F";
    case TraceOp::Fstar: return "Fstar";
  }
  return "?";
}

SpMat vstack(const std::vector<SpMat>& blocks, long cols) {
  long rows = 0;
  long nnz = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    nnz += b.nonZeros();
  }
  std::vector<Triplet> trips;
  trips.reserve(nnz);
  long off = 0;
  for (const auto& b : blocks) {
    for (int outer = 0; outer < b.outerSize(); ++outer)
      for (SpMat::InnerIterator it(b, outer); it; ++it)
        trips.emplace_back(off + it.row(), it.col(), it.value());
    off += b.rows();
  }
  SpMat out(rows, cols);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

ConstraintSet constraint_rows(const OperatorSet& ops, Family family, int layers) {
  if (ops.domain.kind == DomainKind::Torus)
    throw std::domain_error("constraint_rows: torus has no boundary");
  ConstraintSet cs;
  cs.family = family;
  cs.layers = layers;
  auto fam = family_ops(ops, family);
  long cols = ops.H.mat.cols();

  std::vector<SpMat> blocks;
  long off = 0;
  auto push = [&](const std::string& name, const SpMat& block) {
    if (block.rows() == 0) return;
    cs.block_names.push_back(name);
    cs.block_offset.push_back(off);
    cs.block_rows.push_back(block.rows());
    off += block.rows();
    blocks.push_back(block);
  };

  for (const auto& face : all_faces(ops.domain)) {
    auto g = face_geometry(ops.domain, face);
    for (auto op : fam.first_layer) {
      auto rows = trace_rows(g, ops.k, ops.m, op);
      push(trace_op_name(op) + "@f" + std::to_string(face.axis) +
               std::to_string(face.side),
           face_weighted(g, rows));
    }
    if (layers >= 2) {
      for (int j = 0; j < 2; ++j) {
        const GridOperator* inner = fam.second_op[j];
        auto tr = trace_rows(g, inner->k_dst, inner->m_dst, fam.second_trace[j]);
        if (tr.rows() == 0 || inner->mat.rows() == 0) continue;
        SpMat composed = SpMat(tr * inner->mat);
        push(trace_op_name(fam.second_trace[j]) + "*Op@f" + std::to_string(face.axis) +
                 std::to_string(face.side),
             face_weighted(g, composed));
      }
    }
  }
  cs.rows = vstack(blocks, cols);
  return cs;
}

Eigen::VectorXd boundary_data(const ConstraintSet& cs, const OperatorSet& ops,
                              const GridField& bc_field) {
  (void)ops;
  return cs.rows * to_vector(bc_field);
}

namespace {

// --- least-squares system --------------------------------------------------

struct LsqSystem {
  SpMat A;             // weighted stacked system
  Eigen::VectorXd b;   // weighted rhs
  long unknowns = 0;
};

// The bilaplacian rows are collocated at nodes at least two layers away from
// every face, where all composed stencils are centered; the two boundary
// layers are governed by the replaced boundary-operator rows.
double interior_row_weight(const GridLayout& layout, const FlatDomain& dom, long node) {
  if (dom.kind == DomainKind::Box) {
    for (int a = 0; a < dom.d; ++a) {
      int c = layout.coord(node, a);
      if (c < 2 || c > layout.n[a] - 3) return 0.0;
    }
  }
  return std::sqrt(trapezoid_weight(layout, node));
}

SpMat interior_rows(const OperatorSet& ops) {
  auto layout = GridLayout::of(ops.domain);
  long nb = ops.B.mat.rows() / layout.total;
  Eigen::VectorXd scale = Eigen::VectorXd::Zero(ops.B.mat.rows());
  for (long node = 0; node < layout.total; ++node) {
    double w = interior_row_weight(layout, ops.domain, node);
    for (long key = 0; key < nb; ++key) scale[key * layout.total + node] = w;
  }
  SpMat weighted = scale.asDiagonal() * ops.B.mat;
  weighted.prune(0.0);
  return weighted;
}

Eigen::VectorXd interior_rhs(const OperatorSet& ops, const Eigen::VectorXd& chi) {
  auto layout = GridLayout::of(ops.domain);
  long nb = chi.size() / layout.total;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(chi.size());
  for (long node = 0; node < layout.total; ++node) {
    double w = interior_row_weight(layout, ops.domain, node);
    for (long key = 0; key < nb; ++key)
      out[key * layout.total + node] = w * chi[key * layout.total + node];
  }
  return out;
}

// Undivided fourth-difference smoothing rows: O(h^4) on smooth fields (two
// orders below the bilaplacian rows' truncation), but they price node-scale
// noise, which the quadrature-weighted least-squares objective otherwise
// tolerates inside the boundary layers.
SpMat smoothing_rows(const OperatorSet& ops) {
  auto layout = GridLayout::of(ops.domain);
  long nb = ops.B.mat.cols() / layout.total;
  std::vector<Triplet> trips;
  long row = 0;
  for (int a = 0; a < ops.domain.d; ++a) {
    int n = layout.n[a];
    // h^{-3/2}: the smooth-field residual h^{4-3/2} stays strictly below the
    // O(h^2) truncation of the bilaplacian rows, while node-scale noise is
    // still priced at h^{-3/2} >> O(1)
    double w = 1.0 / std::pow(layout.h[a], 1.5);
    for (long key = 0; key < nb; ++key) {
      long base = key * layout.total;
      for (long node = 0; node < layout.total; ++node) {
        int c = layout.coord(node, a);
        if (!layout.periodic && (c < 2 || c > n - 3)) continue;
        double ws = w * std::sqrt(trapezoid_weight(layout, node));
        trips.emplace_back(row, base + layout.shifted(node, a, -2), ws);
        trips.emplace_back(row, base + layout.shifted(node, a, -1), -4.0 * ws);
        trips.emplace_back(row, base + node, 6.0 * ws);
        trips.emplace_back(row, base + layout.shifted(node, a, 1), -4.0 * ws);
        trips.emplace_back(row, base + layout.shifted(node, a, 2), ws);
        ++row;
      }
    }
  }
  SpMat out(row, ops.B.mat.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

LsqSystem build_system(const OperatorSet& ops, Family family, const Eigen::VectorXd& chi,
                       const std::optional<GridField>& bc, const ConstraintSet& cs) {
  LsqSystem sys;
  sys.unknowns = ops.B.mat.cols();
  SpMat top = interior_rows(ops);
  SpMat smooth = smoothing_rows(ops);
  sys.A = vstack({top, cs.rows, smooth}, sys.unknowns);
  sys.b = Eigen::VectorXd::Zero(sys.A.rows());
  sys.b.head(top.rows()) = interior_rhs(ops, chi);
  if (bc)
    sys.b.segment(top.rows(), cs.rows.rows()) = cs.rows * to_vector(*bc);
  return sys;
}

// Near-kernel of the SPD normal matrix by shift-inverted subspace iteration.
struct IterativeKernel {
  std::vector<Eigen::VectorXd> basis;  // euclidean-orthonormal
  std::vector<double> ritz;
};

IterativeKernel near_kernel(const SpMat& N,
                            const Eigen::SimplicialLDLT<SpMat>& factor, int q,
                            double threshold) {
  long n = N.rows();
  q = int(std::min<long>(q, n));
  Prng rng(1234567);
  Eigen::MatrixXd X(n, q);
  for (long i = 0; i < n; ++i)
    for (int j = 0; j < q; ++j) X(i, j) = rng.next_unit_double() - 0.5;
  auto orthonormalize = [&](Eigen::MatrixXd& M) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    M = qr.householderQ() * Eigen::MatrixXd::Identity(n, M.cols());
  };
  orthonormalize(X);
  for (int it = 0; it < 50; ++it) {
    X = factor.solve(X);
    orthonormalize(X);
  }
  Eigen::MatrixXd T = X.transpose() * (N * X);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (T + T.transpose()));
  IterativeKernel out;
  for (int j = 0; j < q; ++j) {
    double theta = eig.eigenvalues()[j];
    if (theta < threshold) {
      out.basis.push_back(X * eig.eigenvectors().col(j));
      out.ritz.push_back(theta);
    }
  }
  return out;
}

// Volume-weighted energy rows: the four second-order operators stacked with
// the first-layer boundary rows. Its kernel is the discrete biharmonic
// R-module, which is what solves must be deflated by.
SpMat energy_rows(const OperatorSet& ops, Family family) {
  auto layout = GridLayout::of(ops.domain);
  std::vector<SpMat> blocks;
  for (const GridOperator* op : {&ops.H, &ops.Hstar, &ops.Fstar, &ops.F}) {
    if (op->mat.rows() == 0) continue;
    Eigen::VectorXd s(op->mat.rows());
    for (long r = 0; r < op->mat.rows(); ++r)
      s[r] = std::sqrt(trapezoid_weight(layout, r % layout.total));
    blocks.push_back(SpMat(s.asDiagonal() * op->mat));
  }
  if (ops.domain.kind == DomainKind::Box) {
    auto cs = constraint_rows(ops, family, 1);
    if (cs.rows.rows() > 0) blocks.push_back(cs.rows);
  }
  return vstack(blocks, ops.B.mat.cols());
}

// Discrete biharmonic module by shift-inverted subspace iteration on the
// energy normal matrix; its kernel eigenvalues are exact zeros (rounding
// noise), far below any physical mode.
std::vector<Eigen::VectorXd> iterative_kernel_basis(const OperatorSet& ops,
                                                    Family family, int probe) {
  SpMat A = energy_rows(ops, family);
  SpMat M = SpMat(SpMat(A.transpose()) * A);
  double scale = 0.0;
  for (long i = 0; i < M.rows(); ++i) scale += M.coeff(i, i);
  scale /= double(M.rows());
  // small shift so the inverse iteration is well-posed on the exact kernel
  SpMat shifted = M;
  SpMat diag(M.rows(), M.rows());
  std::vector<Triplet> dt;
  for (long i = 0; i < M.rows(); ++i) dt.emplace_back(i, i, 1e-13 * scale);
  diag.setFromTriplets(dt.begin(), dt.end());
  shifted += diag;
  Eigen::SimplicialLDLT<SpMat> factor(shifted);
  if (factor.info() != Eigen::Success)
    throw NumericError("energy-matrix factorization failed");
  auto kern = near_kernel(M, factor, probe, 1e-12 * scale);
  return kern.basis;
}

struct NormalSolver {
  using SpMatLd = Eigen::SparseMatrix<long double>;
  using VecLd = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

  Csr A_csr, At_csr;
  Eigen::VectorXd sinv;  // 1/sqrt(diag(A^T A))
  Eigen::SimplicialLDLT<SpMatLd> factor;  // extended precision: the double
                                          // factor caps the attainable depth
  std::vector<Eigen::VectorXd> kernel_basis;  // euclidean-orthonormal, x-space
  long rows = 0, cols = 0;

  void init(const SpMat& A, std::vector<Eigen::VectorXd> kernel) {
    rows = A.rows();
    cols = A.cols();
    A_csr = Csr::from_eigen(A);
    At_csr = Csr::from_eigen(SpMat(A.transpose()));
    SpMat N = SpMat(SpMat(A.transpose()) * A);
    sinv.resize(cols);
    for (long i = 0; i < cols; ++i) {
      double di = N.coeff(i, i);
      sinv[i] = di > 0 ? 1.0 / std::sqrt(di) : 1.0;
    }
    SpMat nscaled = SpMat(sinv.asDiagonal() * N * sinv.asDiagonal());
    SpMatLd nld = nscaled.cast<long double>();
    for (auto kvec : kernel) {
      for (const auto& prev : kernel_basis) kvec -= prev.dot(kvec) * prev;
      double nrm = kvec.norm();
      if (nrm > 1e-12) kernel_basis.push_back(kvec / nrm);
    }
    long double shift = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      SpMatLd shifted = nld;
      if (shift > 0) {
        std::vector<Eigen::Triplet<long double>> dt;
        for (long i = 0; i < cols; ++i) dt.emplace_back(i, i, shift);
        SpMatLd diag(cols, cols);
        diag.setFromTriplets(dt.begin(), dt.end());
        shifted += diag;
      }
      factor.compute(shifted);
      if (factor.info() == Eigen::Success) break;
      shift = shift == 0.0 ? 1e-18 : 100.0 * shift;
    }
    if (factor.info() != Eigen::Success)
      throw NumericError("normal-equation factorization failed");
  }

  void deflate(Eigen::VectorXd& v) const {
    for (const auto& kvec : kernel_basis) v -= kvec.dot(v) * kvec;
  }

  Eigen::VectorXd precond(const Eigen::VectorXd& g) const {
    VecLd z = factor.solve(VecLd(g.cwiseProduct(sinv).cast<long double>()));
    return z.cast<double>().cwiseProduct(sinv);
  }

  // y = A x and g = A^T r with extended-precision carries: the residual of
  // h^-4-scaled rows must be tracked below the double rounding floor.
  void apply_ld(const Csr& m, const double* x, long double* y) const {
    const bool par = parallel_enabled();
#pragma omp parallel for if (par) schedule(static)
    for (long r = 0; r < m.rows; ++r) {
      long double acc = 0.0;
      for (long p = m.ptr[r]; p < m.ptr[r + 1]; ++p)
        acc += (long double)m.val[p] * x[m.idx[p]];
      y[r] = acc;
    }
  }
  void apply_t_ld(const Csr& m, const long double* x, double* y) const {
    const bool par = parallel_enabled();
#pragma omp parallel for if (par) schedule(static)
    for (long r = 0; r < m.rows; ++r) {
      long double acc = 0.0;
      for (long p = m.ptr[r]; p < m.ptr[r + 1]; ++p)
        acc += (long double)m.val[p] * (double)x[m.idx[p]];
      y[r] = double(acc);
    }
  }

  // CG on the normal equations in least-squares (CGLS) form: gradients are
  // evaluated through A and A^T products with a long-double residual carry,
  // so the accuracy floor scales with cond(A) in extended precision rather
  // than cond(A)^2 in double. History records |A^T r| / |A^T b|.
  Eigen::VectorXd pcg(const Eigen::VectorXd& b, double tol, int max_iter,
                      std::vector<double>& history) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
    std::vector<long double> r_ld(rows), q_ld(rows);
    for (long i = 0; i < rows; ++i) r_ld[i] = b[i];
    Eigen::VectorXd g(cols);
    apply_t_ld(At_csr, r_ld.data(), g.data());
    deflate(g);
    double gb = g.norm();
    history.clear();
    history.push_back(1.0);
    if (gb == 0.0) return x;
    Eigen::VectorXd z = precond(g);
    deflate(z);
    Eigen::VectorXd p = z;
    double gz = g.dot(z);
    double best = 1.0;
    int stagnant = 0;
    for (int it = 0; it < max_iter; ++it) {
      apply_ld(A_csr, p.data(), q_ld.data());
      long double qq_ld = 0.0;
      for (long i = 0; i < rows; ++i) qq_ld += q_ld[i] * q_ld[i];
      double qq = double(qq_ld);
      if (qq == 0.0) break;
      double alpha = gz / qq;
      x += alpha * p;
      for (long i = 0; i < rows; ++i) r_ld[i] -= (long double)alpha * q_ld[i];
      if ((it + 1) % 10 == 0) {  // refresh against recursion drift
        apply_ld(A_csr, x.data(), q_ld.data());
        for (long i = 0; i < rows; ++i) r_ld[i] = (long double)b[i] - q_ld[i];
      }
      apply_t_ld(At_csr, r_ld.data(), g.data());
      deflate(g);
      double rel = g.norm() / gb;
      history.push_back(rel);
      if (rel < tol) return x;
      if (rel < 0.995 * best) {
        best = rel;
        stagnant = 0;
      } else if (++stagnant >= 40) {
        // stagnation at the attainable floor for this conditioning; accept
        // when the floor is far below discretization level
        if (best <= 1e-6) return x;
        throw NumericError("conjugate gradient stagnated above tolerance", history);
      }
      z = precond(g);
      deflate(z);
      double gz_new = g.dot(z);
      p = z + (gz_new / gz) * p;
      gz = gz_new;
    }
    throw NumericError("conjugate gradient did not reach tolerance", history);
  }
};

Eigen::VectorXd weighted_project_out(const std::vector<Eigen::VectorXd>& basis,
                                     const Eigen::VectorXd& w, Eigen::VectorXd v,
                                     double* removed = nullptr) {
  // basis assumed W-orthonormalized
  double rem2 = 0.0;
  for (const auto& kvec : basis) {
    double c = kvec.dot(w.cwiseProduct(v));
    v -= c * kvec;
    rem2 += c * c;
  }
  if (removed) *removed = std::sqrt(rem2);
  return v;
}

std::vector<Eigen::VectorXd> w_orthonormalize(std::vector<Eigen::VectorXd> basis,
                                              const Eigen::VectorXd& w) {
  std::vector<Eigen::VectorXd> out;
  for (auto v : basis) {
    for (const auto& u : out) v -= u.dot(w.cwiseProduct(v)) * u;
    double nrm = std::sqrt(v.dot(w.cwiseProduct(v)));
    if (nrm > 1e-12) out.push_back(v / nrm);
  }
  return out;
}

}  // namespace

KernelInfo kernel_dimension(const OperatorSet& ops, Family family,
                            bool with_boundary_rows, double threshold_override) {
  long n = ops.B.mat.cols();
  if (n > kDenseGuardrail)
    throw ResourceError("kernel_dimension: dense eigensolve refused above 20000 unknowns");

  // energy rows: the four second-order operators, volume-weighted
  auto layout = GridLayout::of(ops.domain);
  auto wsqrt = [&](const GridOperator& op) {
    long nb = op.mat.rows() / std::max<long>(layout.total, 1);
    Eigen::VectorXd s(op.mat.rows());
    for (long r = 0; r < op.mat.rows(); ++r)
      s[r] = std::sqrt(trapezoid_weight(layout, r % layout.total));
    (void)nb;
    return SpMat(s.asDiagonal() * op.mat);
  };
  std::vector<SpMat> blocks;
  for (const GridOperator* op : {&ops.H, &ops.Hstar, &ops.Fstar, &ops.F})
    if (op->mat.rows() > 0) blocks.push_back(wsqrt(*op));
  if (with_boundary_rows && ops.domain.kind == DomainKind::Box) {
    auto cs = constraint_rows(ops, family, 1);
    if (cs.rows.rows() > 0) blocks.push_back(cs.rows);
  }
  SpMat A = vstack(blocks, n);
  // L2-normalized spectrum: eigenvalues of M v = lambda W v, realized through
  // the mass-scaled matrix W^-1/2 M W^-1/2 (W = trapezoid weights)
  Eigen::VectorXd wv = trapezoid_weights(ops.domain, ops.k, ops.m);
  Eigen::VectorXd winv_sqrt = wv.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd M = Eigen::MatrixXd(SpMat(A.transpose()) * A);
  M = winv_sqrt.asDiagonal() * M * winv_sqrt.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  Eigen::VectorXd ev = eig.eigenvalues();
  double evmax = std::max(ev.maxCoeff(), 1e-300);

  KernelInfo info;
  // median of the nonzero part of the spectrum
  std::vector<double> nz;
  for (long i = 0; i < ev.size(); ++i)
    if (ev[i] > 1e-12 * evmax) nz.push_back(ev[i]);
  if (nz.empty()) {
    info.conclusive = false;
    return info;
  }
  std::sort(nz.begin(), nz.end());
  info.median_nonzero = nz[nz.size() / 2];
  info.threshold =
      threshold_override > 0 ? threshold_override : 1e-6 * info.median_nonzero;
  for (long i = 0; i < ev.size(); ++i) {
    if (ev[i] < info.threshold) {
      ++info.dim;
      info.small_eigenvalues.push_back(ev[i]);
    }
  }
  // spectral gap sanity: the largest kernel eigenvalue must be well separated
  if (info.dim > 0) {
    double top_kernel = info.small_eigenvalues.back();
    double bottom_rest = info.threshold;
    for (long i = 0; i < ev.size(); ++i)
      if (ev[i] >= info.threshold) {
        bottom_rest = ev[i];
        break;
      }
    if (top_kernel > 1e-3 * bottom_rest) info.conclusive = false;
  }

  // kernel basis via shift-inverted subspace iteration on the sparse system
  if (info.dim > 0 && info.conclusive) {
    SpMat N = SpMat(A.transpose()) * A;
    double scale = 0.0;
    for (long i = 0; i < N.rows(); ++i) scale += N.coeff(i, i);
    scale /= double(N.rows());
    SpMat shifted = N;
    std::vector<Triplet> dt;
    for (long i = 0; i < N.rows(); ++i) dt.emplace_back(i, i, 1e-11 * scale);
    SpMat diag(N.rows(), N.rows());
    diag.setFromTriplets(dt.begin(), dt.end());
    shifted += diag;
    Eigen::SimplicialLDLT<SpMat> factor(shifted);
    // basis extraction on the euclidean matrix, where the kernel Ritz values
    // are pure rounding noise
    auto kern = near_kernel(N, factor, info.dim + 4, 1e-10 * scale);
    Eigen::VectorXd w = trapezoid_weights(ops.domain, ops.k, ops.m);
    info.basis = w_orthonormalize(kern.basis, w);
    if (int(info.basis.size()) != info.dim) info.conclusive = false;
  }
  return info;
}

SolveResult solve(const OperatorSet& ops, Family family, const GridField& chi,
                  const SolveOptions& opts) {
  auto cs = constraint_rows(ops, family, 2);
  Eigen::VectorXd chivec = to_vector(chi);
  auto sys = build_system(ops, family, chivec, opts.bc, cs);

  NormalSolver ns;
  ns.init(sys.A, iterative_kernel_basis(ops, family, 12));

  double removed = 0.0;
  // report the kernel component of the data (Fredholm compatibility)
  Eigen::VectorXd w = trapezoid_weights(ops.domain, ops.k, ops.m);
  auto wbasis = w_orthonormalize(ns.kernel_basis, w);
  weighted_project_out(wbasis, w, chivec, &removed);

  SolveResult res;
  Eigen::VectorXd x = ns.pcg(sys.b, opts.tol, opts.max_iterations, res.residual_history);
  res.relative_residual = res.residual_history.back();
  res.iterations = int(res.residual_history.size()) - 1;
  res.kernel_dim = int(ns.kernel_basis.size());
  res.kernel_component_removed = removed;
  res.psi = from_vector(ops.domain, ops.k, ops.m, x);
  return res;
}

SolveResult green_apply(const OperatorSet& ops, Family family, const GridField& psi,
                        const SolveOptions& opts) {
  // rhs = (Id - P_R) psi, with P_R the projection onto the detected kernel
  auto cs = constraint_rows(ops, family, 2);
  Eigen::VectorXd psivec = to_vector(psi);
  auto sys0 = build_system(ops, family, psivec, std::nullopt, cs);
  NormalSolver ns;
  ns.init(sys0.A, iterative_kernel_basis(ops, family, 12));

  Eigen::VectorXd w = trapezoid_weights(ops.domain, ops.k, ops.m);
  auto wbasis = w_orthonormalize(ns.kernel_basis, w);
  double removed = 0.0;
  Eigen::VectorXd chivec = weighted_project_out(wbasis, w, psivec, &removed);

  auto sys = build_system(ops, family, chivec, std::nullopt, cs);

  SolveResult res;
  Eigen::VectorXd x = ns.pcg(sys.b, opts.tol, opts.max_iterations, res.residual_history);
  res.relative_residual = res.residual_history.back();
  res.iterations = int(res.residual_history.size()) - 1;
  res.kernel_dim = int(ns.kernel_basis.size());
  res.kernel_component_removed = removed;
  res.psi = from_vector(ops.domain, ops.k, ops.m, x);
  return res;
}

// Fourth-order differentiation of a discrete solve is unstable on the node
// layers adjacent to the faces, where one-sided rows amplify node-scale
// solution noise by h^-4. The decomposition parts are smooth L2 fields, so
// the affected strip is rebuilt by a least-squares linear extension along the
// inward normal; fitting over six interior layers averages the residual
// noise down instead of amplifying it.
static void extrapolate_boundary_strip(const FlatDomain& dom, Eigen::VectorXd& v,
                                       int strip = 3) {
  if (dom.kind != DomainKind::Box) return;
  auto layout = GridLayout::of(dom);
  long nb = v.size() / layout.total;
  const int fitn = 6;
  for (int a = 0; a < dom.d; ++a) {
    int n = layout.n[a];
    if (n < 2 * (strip + fitn)) continue;
    for (long key = 0; key < nb; ++key) {
      long base = key * layout.total;
      for (long node = 0; node < layout.total; ++node) {
        int c = layout.coord(node, a);
        if (c >= strip && c <= n - 1 - strip) continue;
        // later axes must already be interior: the sweep never sources from
        // still-unclean strip values (corners are completed by the last axis)
        bool later_clean = true;
        for (int b = a + 1; b < dom.d && later_clean; ++b) {
          int cb = layout.coord(node, b);
          later_clean = cb >= strip && cb <= layout.n[b] - 1 - strip;
        }
        if (!later_clean) continue;
        int dir = c < strip ? +1 : -1;
        int edge = c < strip ? c : n - 1 - c;
        double sy = 0, sty = 0;
        for (int j = 0; j < fitn; ++j) {
          double val = v[base + layout.shifted(node, a, dir * (strip - edge + j))];
          sy += val;
          sty += j * val;
        }
        // least-squares line through the six samples at t = 0..5
        double slope = (fitn * sty - 15.0 * sy) / (fitn * 55.0 - 225.0);
        double intercept = (sy - slope * 15.0) / fitn;
        double t = -double(strip - edge);
        v[base + node] = intercept + slope * t;
      }
    }
  }
}

namespace {

// One part of the decomposition, computed from its defining variational
// characterization: the W-orthogonal projection of psi onto
// { Op alpha : alpha in ker(first trace pair) }, i.e. a penalized
// least-squares fit of the potential alpha. The fit is a second-order
// problem, so no fourth-order differentiation of a discrete solve occurs.
Eigen::VectorXd project_onto_image(const OperatorSet& ops, const GridOperator& op,
                                   TraceOp t0, TraceOp t1, const Eigen::VectorXd& psi,
                                   double tol) {
  if (op.mat.rows() == 0) return Eigen::VectorXd::Zero(psi.size());
  auto layout = GridLayout::of(ops.domain);
  Eigen::VectorXd s(op.mat.rows());
  for (long r = 0; r < op.mat.rows(); ++r)
    s[r] = std::sqrt(trapezoid_weight(layout, r % layout.total));
  SpMat top = SpMat(s.asDiagonal() * op.mat);

  std::vector<SpMat> blocks = {top};
  const double rho = 1e3;  // constraint penalty: O(rho^-2) projection bias
  for (const auto& face : all_faces(ops.domain)) {
    auto g = face_geometry(ops.domain, face);
    for (TraceOp t : {t0, t1}) {
      auto rows = trace_rows(g, op.k_src, op.m_src, t);
      if (rows.rows() == 0) continue;
      blocks.push_back(SpMat(rho * face_weighted(g, rows)));
    }
  }
  SpMat A = vstack(blocks, op.mat.cols());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(A.rows());
  b.head(top.rows()) = s.cwiseProduct(psi);

  NormalSolver ns;
  ns.init(A, {});
  std::vector<double> history;
  Eigen::VectorXd alpha = ns.pcg(b, tol, 800, history);
  return op.mat * alpha;
}

}  // namespace

DecompositionResult decompose(const FlatDomain& dom, const GridField& psi, double tol) {
  auto ops = assemble(dom, psi.k, psi.m);
  Eigen::VectorXd pv = to_vector(psi);

  DecompositionResult out{GridField::zeros(dom, psi.k, psi.m),
                          GridField::zeros(dom, psi.k, psi.m),
                          GridField::zeros(dom, psi.k, psi.m),
                          GridField::zeros(dom, psi.k, psi.m),
                          GridField::zeros(dom, psi.k, psi.m),
                          Eigen::Matrix<double, 5, 5>::Zero(),
                          0.0};

  // Alternating projections: the four image spaces are mutually orthogonal
  // only up to discretization, so a few Gauss-Seidel sweeps shrink the
  // coverage defect geometrically in the mutual angles.
  Eigen::VectorXd ee = Eigen::VectorXd::Zero(pv.size());
  Eigen::VectorXd cc = ee, ec = ee, ce = ee;
  Eigen::VectorXd rem = pv;
  for (int sweep = 0; sweep < 3; ++sweep) {
    Eigen::VectorXd d;
    d = project_onto_image(ops, ops.H_from_down, TraceOp::Ptt, TraceOp::T, rem, tol);
    ee += d;
    rem -= d;
    d = project_onto_image(ops, ops.Hstar_from_up, TraceOp::Pnn, TraceOp::Tstar, rem, tol);
    cc += d;
    rem -= d;
    d = project_onto_image(ops, ops.F_from_mixed, TraceOp::Ptn, TraceOp::F, rem, tol);
    ec += d;
    rem -= d;
    d = project_onto_image(ops, ops.Fstar_from_up, TraceOp::Pnt, TraceOp::Fstar, rem, tol);
    ce += d;
    rem -= d;
  }
  out.ee = from_vector(dom, psi.k, psi.m, ee);
  out.cc = from_vector(dom, psi.k, psi.m, cc);
  out.ec = from_vector(dom, psi.k, psi.m, ec);
  out.ce = from_vector(dom, psi.k, psi.m, ce);

  // The biharmonic part is the projection of the remainder onto the discrete
  // module ker(H, H*, F*, F), realized as a strongly penalized least-squares
  // projection; the reconstruction residual |psi - sum of parts| is then the
  // distance of the remainder from the module.
  Eigen::VectorXd w = trapezoid_weights(dom, psi.k, psi.m);
  {
    auto layout = GridLayout::of(dom);
    std::vector<SpMat> blocks;
    for (const GridOperator* op : {&ops.H, &ops.Hstar, &ops.Fstar, &ops.F}) {
      if (op->mat.rows() == 0) continue;
      Eigen::VectorXd s(op->mat.rows());
      for (long r = 0; r < op->mat.rows(); ++r)
        s[r] = std::sqrt(trapezoid_weight(layout, r % layout.total));
      blocks.push_back(SpMat(s.asDiagonal() * op->mat));
    }
    SpMat D = vstack(blocks, rem.size());
    SpMat M0 = SpMat(D.transpose()) * D;
    double trace_w = w.sum();
    double trace_m = 0;
    for (long i = 0; i < M0.rows(); ++i) trace_m += M0.coeff(i, i);
    double beta = trace_m > 0 ? 1e4 * trace_w / trace_m : 0.0;
    SpMat lhs = SpMat(w.asDiagonal().toDenseMatrix().sparseView()) + SpMat(beta * M0);
    Eigen::SimplicialLDLT<SpMat> proj(lhs);
    if (proj.info() == Eigen::Success) {
      Eigen::VectorXd z = proj.solve(Eigen::VectorXd(w.cwiseProduct(rem)));
      out.bh = from_vector(dom, psi.k, psi.m, z);
      Eigen::VectorXd miss = rem - z;
      double pn = std::sqrt(pv.dot(w.cwiseProduct(pv)));
      out.residual =
          pn > 0 ? std::sqrt(miss.dot(w.cwiseProduct(miss))) / pn : miss.norm();
    } else {
      out.bh = from_vector(dom, psi.k, psi.m, rem);
      out.residual = std::numeric_limits<double>::quiet_NaN();
    }
  }

  std::vector<Eigen::VectorXd> parts = {to_vector(out.ee), to_vector(out.cc),
                                        to_vector(out.ec), to_vector(out.ce),
                                        to_vector(out.bh)};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      out.gram(i, j) = parts[i].dot(w.cwiseProduct(parts[j]));
  return out;
}

BhSplitReport bh_split(const OperatorSet& ops, Family family) {
  BhSplitReport rep;
  auto bh = kernel_dimension(ops, family, false);   // discrete BH, no boundary rows
  auto bhr = kernel_dimension(ops, family, true);   // BH_R
  rep.conclusive = bh.conclusive && bhr.conclusive;
  rep.dim_bh = bh.dim;
  rep.dim_bh_family = bhr.dim;
  if (!rep.conclusive) return rep;

  Eigen::VectorXd w = trapezoid_weights(ops.domain, ops.k, ops.m);
  // complement of BH_R inside BH: project the BH basis off BH_R
  std::vector<Eigen::VectorXd> complement;
  for (const auto& v : bh.basis) {
    Eigen::VectorXd r = weighted_project_out(bhr.basis, w, v);
    for (const auto& u : complement) r -= u.dot(w.cwiseProduct(r)) * u;
    double nrm = std::sqrt(r.dot(w.cwiseProduct(r)));
    if (nrm > 1e-6) complement.push_back(r / nrm);
  }
  rep.dim_complement = int(complement.size());
  rep.max_cross = 0.0;
  for (const auto& u : bhr.basis)
    for (const auto& v : complement)
      rep.max_cross = std::max(rep.max_cross, std::abs(u.dot(w.cwiseProduct(v))));
  return rep;
}

double h2_norm_squared(const OperatorSet& ops, const Eigen::VectorXd& v) {
  auto layout = GridLayout::of(ops.domain);
  Eigen::VectorXd w = trapezoid_weights(ops.domain, ops.k, ops.m);
  double acc = v.dot(w.cwiseProduct(v));
  long nb = v.size() / layout.total;
  std::vector<SpMat> d1(ops.domain.d), d2(ops.domain.d);
  for (int a = 0; a < ops.domain.d; ++a) {
    d1[a] = axis_op(layout, a, AxisKind::D1);
    d2[a] = axis_op(layout, a, AxisKind::D2);
  }
  for (long key = 0; key < nb; ++key) {
    Eigen::VectorXd comp = v.segment(key * layout.total, layout.total);
    Eigen::VectorXd wn = w.segment(key * layout.total, layout.total);
    for (int a = 0; a < ops.domain.d; ++a) {
      Eigen::VectorXd da = d1[a] * comp;
      acc += da.dot(wn.cwiseProduct(da));
      for (int b = 0; b < ops.domain.d; ++b) {
        Eigen::VectorXd dab = b == a ? Eigen::VectorXd(d2[a] * comp)
                                     : Eigen::VectorXd(d1[b] * da);
        acc += dab.dot(wn.cwiseProduct(dab));
      }
    }
  }
  return acc;
}

KornResult korn_constant(const OperatorSet& ops, Family family, int samples,
                         std::uint64_t seed) {
  auto kern = kernel_dimension(ops, family, true);
  Eigen::VectorXd w = trapezoid_weights(ops.domain, ops.k, ops.m);
  Prng rng(seed);
  KornResult res;
  res.samples = samples;
  res.kernel_dim = kern.dim;

  auto denergy2 = [&](const Eigen::VectorXd& v) {
    double acc = 0.0;
    for (const GridOperator* op : {&ops.H, &ops.Hstar, &ops.Fstar, &ops.F}) {
      if (op->mat.rows() == 0) continue;
      Eigen::VectorXd y = op->mat * v;
      Eigen::VectorXd wt = trapezoid_weights(ops.domain, op->k_dst, op->m_dst);
      acc += y.dot(wt.cwiseProduct(y));
    }
    return acc;
  };

  for (int s = 0; s < samples; ++s) {
    // random smooth field obeying every first-layer condition: polynomial
    // times the squared bump (values and first derivatives vanish on faces)
    auto f = random_poly_field(rng, ops.domain, ops.k, ops.m, 2);
    auto bumped = PolyField{ops.domain, scale_coeffs(bump_poly(ops.domain, 2), f.value)};
    Eigen::VectorXd v = to_vector(sample(bumped, ops.domain.grid));
    double h2 = h2_norm_squared(ops, v);
    double denom = denergy2(v);
    for (const auto& kvec : kern.basis) {
      double c = kvec.dot(w.cwiseProduct(v));
      denom += c * c;
    }
    if (denom <= 0) continue;
    res.constant = std::max(res.constant, h2 / denom);
  }
  return res;
}

}  // namespace dfc
