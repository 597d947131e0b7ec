#include "dfc/symbol.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <limits>

#include "dfc/exec.hpp"

namespace dfc {

namespace {

constexpr Complex kI{0.0, 1.0};

std::vector<MultiIndexPair> basis_or_empty(int d, int k, int m) {
  if (k < 0 || k > d || m < 0 || m > d) return {};
  return enumerate_basis(d, k, m);
}

// Dense matrix of a fiber operator given by a lambda on DoubleForm<double>.
template <class Op>
CMatrix fiber_matrix(int d, int ks, int ms, int kd, int md, Op&& op) {
  auto src = basis_or_empty(d, ks, ms);
  auto dst = basis_or_empty(d, kd, md);
  CMatrix out = CMatrix::Zero(long(dst.size()), long(src.size()));
  for (std::size_t j = 0; j < src.size(); ++j) {
    DoubleForm<double> e(d, ks, ms);
    e.set(src[j], 1.0);
    auto img = op(e);
    for (std::size_t i = 0; i < dst.size(); ++i) {
      double v = img.get(dst[i]);
      if (v != 0.0) out(long(i), long(j)) = v;
    }
  }
  return out;
}

SymbolOperator annotate(int ds, int ks, int ms, int dd, int kd, int md, CMatrix mat) {
  return SymbolOperator{ds, ks, ms, dd, kd, md, std::move(mat)};
}

}  // namespace

SymbolOperator compose(const SymbolOperator& a, const SymbolOperator& b) {
  if (a.d_src != b.d_dst || a.k_src != b.k_dst || a.m_src != b.m_dst)
    throw std::domain_error("SymbolOperator compose: bidegree mismatch");
  return annotate(b.d_src, b.k_src, b.m_src, a.d_dst, a.k_dst, a.m_dst, a.mat * b.mat);
}

SymbolPolynomial compose(const SymbolPolynomial& a, const SymbolPolynomial& b) {
  SymbolPolynomial out;
  int deg = a.degree() + b.degree();
  for (int j = 0; j <= deg; ++j) {
    SymbolOperator acc = SymbolOperator::zero(
        b.coeff[0].d_src, b.coeff[0].k_src, b.coeff[0].m_src, a.coeff[0].d_dst,
        a.coeff[0].k_dst, a.coeff[0].m_dst);
    for (int i = std::max(0, j - b.degree()); i <= std::min(j, a.degree()); ++i) {
      auto term = compose(a.coeff[i], b.coeff[j - i]);
      acc.mat += term.mat;
    }
    out.coeff.push_back(std::move(acc));
  }
  return out;
}

SymbolPolynomial add(const SymbolPolynomial& a, const SymbolPolynomial& b) {
  SymbolPolynomial out;
  int deg = std::max(a.degree(), b.degree());
  for (int j = 0; j <= deg; ++j) {
    const SymbolOperator& proto = j <= a.degree() ? a.coeff[j] : b.coeff[j];
    SymbolOperator acc = SymbolOperator::zero(proto.d_src, proto.k_src, proto.m_src,
                                              proto.d_dst, proto.k_dst, proto.m_dst);
    if (j <= a.degree()) acc.mat += a.coeff[j].mat;
    if (j <= b.degree()) acc.mat += b.coeff[j].mat;
    out.coeff.push_back(std::move(acc));
  }
  return out;
}

SymbolPolynomial scale(Complex c, const SymbolPolynomial& a) {
  SymbolPolynomial out = a;
  for (auto& co : out.coeff) co.mat *= c;
  return out;
}

CMatrix evaluate(const SymbolPolynomial& p, Complex xi_d) {
  CMatrix out = p.coeff[0].mat;
  Complex pw = 1.0;
  for (int j = 1; j <= p.degree(); ++j) {
    pw *= xi_d;
    out += pw * p.coeff[j].mat;
  }
  return out;
}

namespace {

// --- primitive fiber maps (normal axis = d, face fiber dimension d-1) -----

// Wedge by the tangential covector xi on either part (bulk fiber).
CMatrix wedge_xi(int d, int k, int m, const std::vector<double>& xi, Side side) {
  int kd = side == Side::Form ? k + 1 : k;
  int md = side == Side::Form ? m : m + 1;
  return fiber_matrix(d, k, m, kd, md, [&](const DoubleForm<double>& e) {
    DoubleForm<double> cov(d, side == Side::Form ? 1 : 0, side == Side::Form ? 0 : 1);
    for (int a = 1; a <= d - 1; ++a) {
      if (xi[a - 1] == 0.0) continue;
      if (side == Side::Form)
        cov.add({{a}, {}}, xi[a - 1]);
      else
        cov.add({{}, {a}}, xi[a - 1]);
    }
    return wedge(cov, e);
  });
}

CMatrix interior_xi(int d, int k, int m, const std::vector<double>& xi, Side side) {
  int kd = side == Side::Form ? k - 1 : k;
  int md = side == Side::Form ? m : m - 1;
  return fiber_matrix(d, k, m, kd, md, [&](const DoubleForm<double>& e) {
    FrameVector<double> x;
    x.comps.assign(d, 0.0);
    for (int a = 1; a <= d - 1; ++a) x.comps[a - 1] = xi[a - 1];
    return interior(x, e, side);
  });
}

CMatrix wedge_dr(int d, int k, int m, Side side) {
  int kd = side == Side::Form ? k + 1 : k;
  int md = side == Side::Form ? m : m + 1;
  return fiber_matrix(d, k, m, kd, md, [&](const DoubleForm<double>& e) {
    DoubleForm<double> cov(d, side == Side::Form ? 1 : 0, side == Side::Form ? 0 : 1);
    if (side == Side::Form)
      cov.add({{d}, {}}, 1.0);
    else
      cov.add({{}, {d}}, 1.0);
    return wedge(cov, e);
  });
}

CMatrix interior_dr(int d, int k, int m, Side side) {
  int kd = side == Side::Form ? k - 1 : k;
  int md = side == Side::Form ? m : m - 1;
  return fiber_matrix(d, k, m, kd, md, [&](const DoubleForm<double>& e) {
    FrameVector<double> x;
    x.comps.assign(d, 0.0);
    x.comps[d - 1] = 1.0;
    return interior(x, e, side);
  });
}

enum class Proj { TT, NT, TN, NN };

// Projection matrices from the bulk fiber Lambda^{k,m}(R^d) onto the face
// fibers over axes 1..d-1 (face x_d = 0, inward normal +e_d).
CMatrix projection_matrix(int d, int k, int m, Proj which) {
  int dk = k, dm = m;
  if (which == Proj::NT || which == Proj::NN) dk -= 1;
  if (which == Proj::TN || which == Proj::NN) dm -= 1;
  auto src = basis_or_empty(d, k, m);
  auto dst = basis_or_empty(d - 1, dk, dm);
  CMatrix out = CMatrix::Zero(long(dst.size()), long(src.size()));
  auto find_dst = [&](const MultiIndexPair& key) -> long {
    for (std::size_t i = 0; i < dst.size(); ++i)
      if (dst[i] == key) return long(i);
    return -1;
  };
  for (std::size_t j = 0; j < src.size(); ++j) {
    const auto& key = src[j];
    int pos_f = index_position(key.form, d);
    int pos_v = index_position(key.vec, d);
    bool has_f = pos_f != 0, has_v = pos_v != 0;
    bool want_f = which == Proj::NT || which == Proj::NN;
    bool want_v = which == Proj::TN || which == Proj::NN;
    if (has_f != want_f || has_v != want_v) continue;
    double sign = 1.0;
    Index form = key.form, vec = key.vec;
    if (want_f) {
      sign *= (pos_f - 1) % 2 == 0 ? 1.0 : -1.0;
      form = index_without(form, d);
    }
    if (want_v) {
      sign *= (pos_v - 1) % 2 == 0 ? 1.0 : -1.0;
      vec = index_without(vec, d);
    }
    long i = find_dst({form, vec});  // face keys never contain axis d
    if (i >= 0) out(i, long(j)) = sign;
  }
  return out;
}

SymbolPolynomial proj_poly(int d, int k, int m, Proj which) {
  int dk = k - (which == Proj::NT || which == Proj::NN ? 1 : 0);
  int dm = m - (which == Proj::TN || which == Proj::NN ? 1 : 0);
  SymbolPolynomial p;
  p.coeff.push_back(annotate(d, k, m, d - 1, dk, dm, projection_matrix(d, k, m, which)));
  return p;
}

// First-order interior symbols as degree-1 polynomials (bulk fiber).
SymbolPolynomial d_poly(int d, int k, int m, const std::vector<double>& xi, Side side) {
  int kd = side == Side::Form ? k + 1 : k;
  int md = side == Side::Form ? m : m + 1;
  SymbolPolynomial p;
  p.coeff.push_back(annotate(d, k, m, d, kd, md, kI * wedge_xi(d, k, m, xi, side)));
  p.coeff.push_back(annotate(d, k, m, d, kd, md, kI * wedge_dr(d, k, m, side)));
  return p;
}

SymbolPolynomial delta_poly(int d, int k, int m, const std::vector<double>& xi, Side side) {
  int kd = side == Side::Form ? k - 1 : k;
  int md = side == Side::Form ? m : m - 1;
  SymbolPolynomial p;
  p.coeff.push_back(annotate(d, k, m, d, kd, md, -kI * interior_xi(d, k, m, xi, side)));
  p.coeff.push_back(annotate(d, k, m, d, kd, md, -kI * interior_dr(d, k, m, side)));
  return p;
}

// Face-intrinsic first-order symbols (degree 0 in xi_d).
SymbolPolynomial face_d_poly(int d, int k, int m, const std::vector<double>& xi, Side side) {
  int df = d - 1;
  int kd = side == Side::Form ? k + 1 : k;
  int md = side == Side::Form ? m : m + 1;
  SymbolPolynomial p;
  p.coeff.push_back(annotate(
      df, k, m, df, kd, md,
      kI * fiber_matrix(df, k, m, kd, md, [&](const DoubleForm<double>& e) {
        DoubleForm<double> cov(df, side == Side::Form ? 1 : 0, side == Side::Form ? 0 : 1);
        for (int a = 1; a <= df; ++a) {
          if (xi[a - 1] == 0.0) continue;
          if (side == Side::Form)
            cov.add({{a}, {}}, xi[a - 1]);
          else
            cov.add({{}, {a}}, xi[a - 1]);
        }
        return wedge(cov, e);
      })));
  return p;
}

SymbolPolynomial face_delta_poly(int d, int k, int m, const std::vector<double>& xi,
                                 Side side) {
  int df = d - 1;
  int kd = side == Side::Form ? k - 1 : k;
  int md = side == Side::Form ? m : m - 1;
  SymbolPolynomial p;
  p.coeff.push_back(
      annotate(df, k, m, df, kd, md,
               -kI * fiber_matrix(df, k, m, kd, md, [&](const DoubleForm<double>& e) {
                 FrameVector<double> x;
                 x.comps.assign(df, 0.0);
                 for (int a = 0; a < df; ++a) x.comps[a] = xi[a];
                 return interior(x, e, side);
               })));
  return p;
}

}  // namespace

SymbolPolynomial interior_symbol(InteriorOp op, int d, int k, int m,
                                 const std::vector<double>& xi) {
  auto mean = [](const SymbolPolynomial& a, const SymbolPolynomial& b) {
    return scale(0.5, add(a, b));
  };
  switch (op) {
    case InteriorOp::D:
      return d_poly(d, k, m, xi, Side::Form);
    case InteriorOp::Delta:
      return delta_poly(d, k, m, xi, Side::Form);
    case InteriorOp::DV:
      return d_poly(d, k, m, xi, Side::Vector);
    case InteriorOp::DeltaV:
      return delta_poly(d, k, m, xi, Side::Vector);
    case InteriorOp::H:
      return mean(compose(d_poly(d, k + 1, m, xi, Side::Vector),
                          d_poly(d, k, m, xi, Side::Form)),
                  compose(d_poly(d, k, m + 1, xi, Side::Form),
                          d_poly(d, k, m, xi, Side::Vector)));
    case InteriorOp::Hstar:
      return mean(compose(delta_poly(d, k, m - 1, xi, Side::Form),
                          delta_poly(d, k, m, xi, Side::Vector)),
                  compose(delta_poly(d, k - 1, m, xi, Side::Vector),
                          delta_poly(d, k, m, xi, Side::Form)));
    case InteriorOp::Fstar:
      return mean(compose(d_poly(d, k - 1, m, xi, Side::Vector),
                          delta_poly(d, k, m, xi, Side::Form)),
                  compose(delta_poly(d, k, m + 1, xi, Side::Form),
                          d_poly(d, k, m, xi, Side::Vector)));
    case InteriorOp::F:
      return mean(compose(d_poly(d, k, m - 1, xi, Side::Form),
                          delta_poly(d, k, m, xi, Side::Vector)),
                  compose(delta_poly(d, k + 1, m, xi, Side::Vector),
                          d_poly(d, k, m, xi, Side::Form)));
    case InteriorOp::B: {
      auto H_km = interior_symbol(InteriorOp::H, d, k, m, xi);
      auto H_dn = interior_symbol(InteriorOp::H, d, k - 1, m - 1, xi);
      auto Hs_km = interior_symbol(InteriorOp::Hstar, d, k, m, xi);
      auto Hs_up = interior_symbol(InteriorOp::Hstar, d, k + 1, m + 1, xi);
      auto F_km = interior_symbol(InteriorOp::F, d, k, m, xi);
      auto F_mx = interior_symbol(InteriorOp::F, d, k - 1, m + 1, xi);
      auto Fs_km = interior_symbol(InteriorOp::Fstar, d, k, m, xi);
      auto Fs_up = interior_symbol(InteriorOp::Fstar, d, k + 1, m - 1, xi);
      return add(add(compose(H_dn, Hs_km), compose(Hs_up, H_km)),
                 add(compose(Fs_up, F_km), compose(F_mx, Fs_km)));
    }
  }
  throw std::logic_error("interior_symbol: unreachable");
}

namespace {

// First-order boundary symbols, built from the commutator definitions.
SymbolPolynomial boundary_T(int d, int k, int m, const std::vector<double>& xi) {
  auto half = Complex(0.5, 0.0);
  auto a = compose(proj_poly(d, k + 1, m, Proj::NT), d_poly(d, k, m, xi, Side::Form));
  auto b = compose(face_d_poly(d, k - 1, m, xi, Side::Form), proj_poly(d, k, m, Proj::NT));
  auto c = compose(proj_poly(d, k, m + 1, Proj::TN), d_poly(d, k, m, xi, Side::Vector));
  auto e = compose(face_d_poly(d, k, m - 1, xi, Side::Vector), proj_poly(d, k, m, Proj::TN));
  return add(scale(half, add(a, scale(-1.0, b))), scale(half, add(c, scale(-1.0, e))));
}

SymbolPolynomial boundary_Tstar(int d, int k, int m, const std::vector<double>& xi) {
  auto half = Complex(0.5, 0.0);
  auto a = compose(proj_poly(d, k - 1, m, Proj::TN), delta_poly(d, k, m, xi, Side::Form));
  auto b = compose(face_delta_poly(d, k, m - 1, xi, Side::Form), proj_poly(d, k, m, Proj::TN));
  auto c = compose(proj_poly(d, k, m - 1, Proj::NT), delta_poly(d, k, m, xi, Side::Vector));
  auto e = compose(face_delta_poly(d, k - 1, m, xi, Side::Vector), proj_poly(d, k, m, Proj::NT));
  return scale(-1.0, add(scale(half, add(a, b)), scale(half, add(c, e))));
}

SymbolPolynomial boundary_Fstar(int d, int k, int m, const std::vector<double>& xi) {
  auto half = Complex(0.5, 0.0);
  auto a = compose(proj_poly(d, k, m + 1, Proj::NN), d_poly(d, k, m, xi, Side::Vector));
  auto b = compose(face_d_poly(d, k - 1, m - 1, xi, Side::Vector), proj_poly(d, k, m, Proj::NN));
  auto c = compose(proj_poly(d, k - 1, m, Proj::TT), delta_poly(d, k, m, xi, Side::Form));
  auto e = compose(face_delta_poly(d, k, m, xi, Side::Form), proj_poly(d, k, m, Proj::TT));
  return add(scale(half, add(a, scale(-1.0, b))), scale(-0.5, add(c, e)));
}

SymbolPolynomial boundary_F(int d, int k, int m, const std::vector<double>& xi) {
  auto half = Complex(0.5, 0.0);
  auto a = compose(proj_poly(d, k + 1, m, Proj::NN), d_poly(d, k, m, xi, Side::Form));
  auto b = compose(face_d_poly(d, k - 1, m - 1, xi, Side::Form), proj_poly(d, k, m, Proj::NN));
  auto c = compose(proj_poly(d, k, m - 1, Proj::TT), delta_poly(d, k, m, xi, Side::Vector));
  auto e = compose(face_delta_poly(d, k, m, xi, Side::Vector), proj_poly(d, k, m, Proj::TT));
  return add(scale(half, add(a, scale(-1.0, b))), scale(-0.5, add(c, e)));
}

}  // namespace

std::string boundary_set_name(BoundarySet s) {
  switch (s) {
    case BoundarySet::TT: return "TT";
    case BoundarySet::NN: return "NN";
    case BoundarySet::NT: return "NT";
    case BoundarySet::TN: return "TN";
    case BoundarySet::STT: return "STT";
    case BoundarySet::SNN: return "SNN";
  }
  return "?";
}

std::vector<std::string> boundary_symbol_names(BoundarySet set) {
  switch (set) {
    case BoundarySet::TT:
      return {"Ptt", "Ptn", "Pnt", "T", "Fstar", "F", "Ptt_Hstar", "T_Hstar"};
    case BoundarySet::NN:
      return {"Pnn", "Ptn", "Pnt", "Tstar", "Fstar", "F", "Pnn_H", "Tstar_H"};
    case BoundarySet::NT:
      return {"Pnt", "Pnn", "Ptt", "Fstar", "T", "Tstar", "Pnt_F", "Fstar_F"};
    case BoundarySet::TN:
      return {"Ptn", "Pnn", "Ptt", "F", "T", "Tstar", "Ptn_Fstar", "F_Fstar"};
    case BoundarySet::STT:
      return {"Ptt", "Pnt", "T", "Fstar", "Ptt_Hstar", "T_Hstar"};
    case BoundarySet::SNN:
      return {"Pnn", "Pnt", "Tstar", "Fstar", "Pnn_H", "Tstar_H"};
  }
  return {};
}

std::vector<SymbolPolynomial> boundary_symbols(BoundarySet set, int d, int k, int m,
                                               const std::vector<double>& xi) {
  auto Hs = interior_symbol(InteriorOp::Hstar, d, k, m, xi);
  auto Hi = interior_symbol(InteriorOp::H, d, k, m, xi);
  auto Fi = interior_symbol(InteriorOp::F, d, k, m, xi);
  auto Fsi = interior_symbol(InteriorOp::Fstar, d, k, m, xi);
  switch (set) {
    case BoundarySet::TT:
    case BoundarySet::STT: {
      std::vector<SymbolPolynomial> full = {
          proj_poly(d, k, m, Proj::TT),
          proj_poly(d, k, m, Proj::TN),
          proj_poly(d, k, m, Proj::NT),
          boundary_T(d, k, m, xi),
          boundary_Fstar(d, k, m, xi),
          boundary_F(d, k, m, xi),
          compose(proj_poly(d, k - 1, m - 1, Proj::TT), Hs),
          compose(boundary_T(d, k - 1, m - 1, xi), Hs)};
      if (set == BoundarySet::TT) return full;
      return {full[0], full[2], full[3], full[4], full[6], full[7]};
    }
    case BoundarySet::NN:
    case BoundarySet::SNN: {
      std::vector<SymbolPolynomial> full = {
          proj_poly(d, k, m, Proj::NN),
          proj_poly(d, k, m, Proj::TN),
          proj_poly(d, k, m, Proj::NT),
          boundary_Tstar(d, k, m, xi),
          boundary_Fstar(d, k, m, xi),
          boundary_F(d, k, m, xi),
          compose(proj_poly(d, k + 1, m + 1, Proj::NN), Hi),
          compose(boundary_Tstar(d, k + 1, m + 1, xi), Hi)};
      if (set == BoundarySet::NN) return full;
      return {full[0], full[2], full[3], full[4], full[6], full[7]};
    }
    case BoundarySet::NT:
      return {proj_poly(d, k, m, Proj::NT),
              proj_poly(d, k, m, Proj::NN),
              proj_poly(d, k, m, Proj::TT),
              boundary_Fstar(d, k, m, xi),
              boundary_T(d, k, m, xi),
              boundary_Tstar(d, k, m, xi),
              compose(proj_poly(d, k + 1, m - 1, Proj::NT), Fi),
              compose(boundary_Fstar(d, k + 1, m - 1, xi), Fi)};
    case BoundarySet::TN:
      return {proj_poly(d, k, m, Proj::TN),
              proj_poly(d, k, m, Proj::NN),
              proj_poly(d, k, m, Proj::TT),
              boundary_F(d, k, m, xi),
              boundary_T(d, k, m, xi),
              boundary_Tstar(d, k, m, xi),
              compose(proj_poly(d, k - 1, m + 1, Proj::TN), Fsi),
              compose(boundary_F(d, k - 1, m + 1, xi), Fsi)};
  }
  return {};
}

namespace {

// M+ substitution at |xi| = 1: xi_d^j sigma evaluated at s=0 contributes
// (-i)^j (omega0 - j lambda0).
void mplus_block(const SymbolPolynomial& p, CMatrix& omega_cols, CMatrix& lambda_cols) {
  long rows = p.coeff[0].mat.rows();
  long cols = p.coeff[0].mat.cols();
  omega_cols = CMatrix::Zero(rows, cols);
  lambda_cols = CMatrix::Zero(rows, cols);
  Complex pw = 1.0;
  for (int j = 0; j <= p.degree(); ++j) {
    omega_cols += pw * p.coeff[j].mat;
    lambda_cols -= double(j) * pw * p.coeff[j].mat;
    pw *= Complex(0.0, -1.0);
  }
}

// Symmetric-coordinate injection for Lambda^{k,k}(dim): columns are e_II and
// e_IJ + e_JI (I < J).
CMatrix symmetric_injection(int dim, int k) {
  auto basis = basis_or_empty(dim, k, k);
  std::vector<std::pair<long, long>> cols;  // (idx(I,J), idx(J,I)) with I <= J
  auto find = [&](const MultiIndexPair& key) -> long {
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (basis[i] == key) return long(i);
    return -1;
  };
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis[i].form <= basis[i].vec) {
      long j = find({basis[i].vec, basis[i].form});
      cols.push_back({long(i), j});
    }
  }
  CMatrix out = CMatrix::Zero(long(basis.size()), long(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out(cols[c].first, long(c)) = 1.0;
    if (cols[c].second != cols[c].first) out(cols[c].second, long(c)) = 1.0;
  }
  return out;
}

// Selection of the (I <= J) coordinates of a symmetric-valued output.
CMatrix symmetric_selection(int dim, int k) {
  auto basis = basis_or_empty(dim, k, k);
  std::vector<long> rows;
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (basis[i].form <= basis[i].vec) rows.push_back(long(i));
  CMatrix out = CMatrix::Zero(long(rows.size()), long(basis.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(long(r), rows[r]) = 1.0;
  return out;
}

}  // namespace

LSSystem ls_system(int d, int k, int m, BoundarySet set, const std::vector<double>& xi) {
  if (int(xi.size()) != d - 1) throw std::domain_error("ls_system: xi must be tangential");
  double norm2 = 0.0;
  for (double c : xi) norm2 += c * c;
  if (std::abs(norm2 - 1.0) > 1e-12)
    throw std::domain_error("ls_system: xi must be a unit covector");
  if (is_symmetric_set(set) && k != m)
    throw std::domain_error("ls_system: symmetric sets require k == m");

  auto ops = boundary_symbols(set, d, k, m, xi);
  auto names = boundary_symbol_names(set);

  CMatrix inj;  // source restriction (symmetric sets)
  if (is_symmetric_set(set)) inj = symmetric_injection(d, k);

  LSSystem sys;
  sys.d = d;
  sys.k = k;
  sys.m = m;
  sys.set = set;
  sys.xi = xi;

  std::vector<CMatrix> blocks;
  long total_rows = 0;
  for (std::size_t j = 0; j < ops.size(); ++j) {
    CMatrix wcols, lcols;
    mplus_block(ops[j], wcols, lcols);
    if (is_symmetric_set(set)) {
      // restrict the source; project symmetric-valued targets
      wcols = wcols * inj;
      lcols = lcols * inj;
      bool symmetric_target =
          ops[j].coeff[0].k_dst == ops[j].coeff[0].m_dst &&
          (names[j] == "Ptt" || names[j] == "T" || names[j] == "Tstar" ||
           names[j] == "Pnn" || names[j] == "Ptt_Hstar" || names[j] == "T_Hstar" ||
           names[j] == "Pnn_H" || names[j] == "Tstar_H");
      if (symmetric_target) {
        CMatrix sel = symmetric_selection(d - 1, ops[j].coeff[0].k_dst);
        wcols = sel * wcols;
        lcols = sel * lcols;
      }
    }
    CMatrix block(wcols.rows(), wcols.cols() + lcols.cols());
    block << wcols, lcols;
    sys.row_block.push_back(total_rows);
    sys.block_rows.push_back(block.rows());
    total_rows += block.rows();
    blocks.push_back(std::move(block));
  }

  long cols = blocks.empty() ? 0 : blocks[0].cols();
  sys.xi_matrix = CMatrix::Zero(total_rows, cols);
  for (std::size_t j = 0; j < blocks.size(); ++j)
    sys.xi_matrix.middleRows(sys.row_block[j], sys.block_rows[j]) = blocks[j];
  return sys;
}

DimensionAudit dimension_audit(int d, int k, int m, BoundarySet set) {
  DimensionAudit audit;
  auto names = boundary_symbol_names(set);
  // target dimensions per operator
  auto dim_full = [&](int kk, int mm) { return fiber_dim(d - 1, kk, mm); };
  auto dim_sym = [&](int kk) {
    long c = binomial(d - 1, kk);
    return (kk < 0 || kk > d - 1) ? 0L : c * (c + 1) / 2;
  };
  std::vector<long> dims;
  switch (set) {
    case BoundarySet::TT:
      dims = {dim_full(k, m),     dim_full(k, m - 1),     dim_full(k - 1, m),
              dim_full(k, m),     dim_full(k - 1, m),     dim_full(k, m - 1),
              dim_full(k - 1, m - 1), dim_full(k - 1, m - 1)};
      break;
    case BoundarySet::NN:
      dims = {dim_full(k - 1, m - 1), dim_full(k, m - 1), dim_full(k - 1, m),
              dim_full(k - 1, m - 1), dim_full(k - 1, m), dim_full(k, m - 1),
              dim_full(k, m),         dim_full(k, m)};
      break;
    case BoundarySet::NT:
      dims = {dim_full(k - 1, m), dim_full(k - 1, m - 1), dim_full(k, m),
              dim_full(k - 1, m), dim_full(k, m),         dim_full(k - 1, m - 1),
              dim_full(k, m - 1), dim_full(k, m - 1)};
      break;
    case BoundarySet::TN:
      dims = {dim_full(k, m - 1), dim_full(k - 1, m - 1), dim_full(k, m),
              dim_full(k, m - 1), dim_full(k, m),         dim_full(k - 1, m - 1),
              dim_full(k - 1, m), dim_full(k - 1, m)};
      break;
    case BoundarySet::STT:
      dims = {dim_sym(k), dim_full(k - 1, k), dim_sym(k),
              dim_full(k - 1, k), dim_sym(k - 1), dim_sym(k - 1)};
      break;
    case BoundarySet::SNN:
      dims = {dim_sym(k - 1), dim_full(k - 1, k), dim_sym(k - 1),
              dim_full(k - 1, k), dim_sym(k), dim_sym(k)};
      break;
  }
  for (std::size_t j = 0; j < dims.size(); ++j)
    audit.rows.push_back({names[j], dims[j]});
  for (long v : dims) audit.total += v;
  if (is_symmetric_set(set)) {
    long c = binomial(d, k);
    audit.expected = c * (c + 1);
  } else {
    audit.expected = 2 * fiber_dim(d, k, m);
  }
  return audit;
}

std::vector<std::vector<Rational>> unit_tangential_samples(int d, int count,
                                                           std::uint64_t seed) {
  int ambient = d - 1;  // sphere lives in the face-tangent space
  std::vector<std::vector<Rational>> out;
  if (ambient < 1 || count <= 0) return out;
  // the signed coordinate axes first
  for (int a = 0; a < ambient && long(out.size()) < count; ++a) {
    for (int s = 0; s < 2 && long(out.size()) < count; ++s) {
      std::vector<Rational> v(ambient, Rational(0));
      v[a] = s == 0 ? Rational(1) : Rational(-1);
      out.push_back(std::move(v));
    }
  }
  if (ambient == 1) {  // the unit sphere has only two points
    int i = 0;
    while (long(out.size()) < count) {
      out.push_back({i % 2 == 0 ? Rational(1) : Rational(-1)});
      ++i;
    }
    return out;
  }
  // rational stereographic images of a seeded Kronecker sequence in [-2,2]^{ambient-1}
  Prng rng(seed);
  std::vector<double> gamma(ambient - 1);
  double g = 1.0;
  for (int i = 0; i < ambient - 1; ++i) {
    g = std::pow(1.0 + g, 1.0 / (ambient));  // generalized golden ratios
    gamma[i] = 1.0 / (1.0 + g);
  }
  std::vector<double> phase(ambient - 1);
  for (auto& p : phase) p = rng.next_unit_double();
  long idx = 1;
  while (long(out.size()) < count) {
    std::vector<Rational> u(ambient - 1);
    for (int i = 0; i < ambient - 1; ++i) {
      double t = phase[i] + idx * gamma[i];
      t -= std::floor(t);                      // in [0,1)
      long num = std::lround((4.0 * t - 2.0) * 4096.0);
      u[i] = Rational(num, 4096);
      u[i].canonicalize();
    }
    ++idx;
    Rational usq(0);
    for (const auto& c : u) usq += c * c;
    Rational denom = usq + 1;
    std::vector<Rational> x(ambient);
    for (int i = 0; i < ambient - 1; ++i) x[i] = 2 * u[i] / denom;
    x[ambient - 1] = (Rational(1) - usq) / denom;
    out.push_back(std::move(x));
  }
  return out;
}

EllipticityReport check_regular_ellipticity(int d, int k, int m, BoundarySet set,
                                            int n_samples, std::uint64_t seed,
                                            double threshold) {
  EllipticityReport rep;
  rep.d = d;
  rep.k = k;
  rep.m = m;
  rep.set = set;
  rep.samples = n_samples;
  rep.threshold = threshold;
  auto audit = dimension_audit(d, k, m, set);
  rep.dims_match = audit.match();
  rep.min_sigma = std::numeric_limits<double>::infinity();
  rep.min_sigma_pb = std::numeric_limits<double>::infinity();

  auto samples = unit_tangential_samples(d, n_samples, seed);
  rep.detail.resize(samples.size());
  const bool par = parallel_enabled();
#pragma omp parallel for if (par) schedule(dynamic)
  for (long s = 0; s < long(samples.size()); ++s) {
    std::vector<double> xi(samples[s].size());
    for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = to_double(samples[s][i]);
    auto sys = ls_system(d, k, m, set, xi);
    double sigma;
    if (sys.xi_matrix.rows() == 0) {
      sigma = std::numeric_limits<double>::infinity();  // zero module: nothing to check
    } else {
      Eigen::JacobiSVD<CMatrix> svd(sys.xi_matrix);
      sigma = svd.singularValues().minCoeff();
    }
    // interior symbol check: P_B at probed covectors xi + xi_d dr
    auto pb = interior_symbol(InteriorOp::B, d, k, m, xi);
    double pb_min = std::numeric_limits<double>::infinity();
    for (double xid : {0.0, 0.5, 1.0, 2.0}) {
      auto mat = evaluate(pb, Complex(xid, 0.0));
      if (mat.rows() == 0) continue;
      double zeta4 = (1.0 + xid * xid) * (1.0 + xid * xid);
      Eigen::JacobiSVD<CMatrix> svd(mat);
      pb_min = std::min(pb_min, svd.singularValues().minCoeff() / zeta4);
    }
    rep.detail[s] = {xi, sigma, pb_min};
  }
  for (const auto& smp : rep.detail) {
    rep.min_sigma = std::min(rep.min_sigma, smp.min_sigma);
    rep.min_sigma_pb = std::min(rep.min_sigma_pb, smp.min_sigma_pb);
  }
  rep.pass = rep.dims_match && rep.min_sigma >= threshold && rep.min_sigma_pb >= threshold;
  return rep;
}

ProofTrace proof_trace_tt(int d, int k, int m, const std::vector<double>& xi, double tol) {
  ProofTrace trace;
  auto sys = ls_system(d, k, m, BoundarySet::TT, xi);
  long n = fiber_dim(d, k, m);

  // zeroth-order rows: the first three blocks (Ptt, Ptn, Pnt)
  long zrows = sys.block_rows[0] + sys.block_rows[1] + sys.block_rows[2];
  CMatrix zw = sys.xi_matrix.block(0, 0, zrows, n);       // omega0 columns
  CMatrix zl = sys.xi_matrix.block(0, n, zrows, n);       // lambda0 columns
  trace.zeroth_lambda_free = zl.norm() < tol;
  if (zrows > 0) {
    Eigen::JacobiSVD<CMatrix> svd(zw);
    trace.zeroth_block_rank_gap = svd.singularValues().minCoeff();
  } else {
    trace.zeroth_block_rank_gap = std::numeric_limits<double>::infinity();
  }

  // reduced operator 4 Id + (i_xi o xi^)(iV_xi o xiT^) + (xi^ i_xi)(xiT^ iV_xi)
  // acting on the nn-projection fiber Lambda^{k-1,m-1}(face)
  int df = d - 1, kf = k - 1, mf = m - 1;
  long nf = fiber_dim(df, kf, mf);
  trace.reduced_min_eig = std::numeric_limits<double>::infinity();
  if (nf > 0) {
    auto wf = [&](int kk, int mm, Side side) {
      return annotate(df, kk, mm, df, kk + (side == Side::Form ? 1 : 0),
                      mm + (side == Side::Form ? 0 : 1),
                      fiber_matrix(df, kk, mm,
                                   kk + (side == Side::Form ? 1 : 0),
                                   mm + (side == Side::Form ? 0 : 1),
                                   [&](const DoubleForm<double>& e) {
                                     DoubleForm<double> cov(df, side == Side::Form ? 1 : 0,
                                                            side == Side::Form ? 0 : 1);
                                     for (int a = 1; a <= df; ++a) {
                                       if (xi[a - 1] == 0.0) continue;
                                       if (side == Side::Form)
                                         cov.add({{a}, {}}, xi[a - 1]);
                                       else
                                         cov.add({{}, {a}}, xi[a - 1]);
                                     }
                                     return wedge(cov, e);
                                   }));
    };
    auto ixf = [&](int kk, int mm, Side side) {
      return annotate(df, kk, mm, df, kk - (side == Side::Form ? 1 : 0),
                      mm - (side == Side::Form ? 0 : 1),
                      fiber_matrix(df, kk, mm,
                                   kk - (side == Side::Form ? 1 : 0),
                                   mm - (side == Side::Form ? 0 : 1),
                                   [&](const DoubleForm<double>& e) {
                                     FrameVector<double> x;
                                     x.comps.assign(df, 0.0);
                                     for (int a = 0; a < df; ++a) x.comps[a] = xi[a];
                                     return interior(x, e, side);
                                   }));
    };
    // (i_xi o xi^) and (xi^ o i_xi) on the form part; their V-counterparts
    auto A1 = compose(ixf(kf + 1, mf, Side::Form), wf(kf, mf, Side::Form)).mat;
    auto A2 = compose(ixf(kf, mf + 1, Side::Vector), wf(kf, mf, Side::Vector)).mat;
    auto B1 = compose(wf(kf - 1, mf, Side::Form), ixf(kf, mf, Side::Form)).mat;
    auto B2 = compose(wf(kf, mf - 1, Side::Vector), ixf(kf, mf, Side::Vector)).mat;
    CMatrix G = 4.0 * CMatrix::Identity(nf, nf) + A1 * A2 + B1 * B2;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (G + G.adjoint()));
    trace.reduced_min_eig = eig.eigenvalues().minCoeff();
  }

  trace.pass = trace.zeroth_lambda_free &&
               trace.zeroth_block_rank_gap > 0.5 &&  // projections: exact rank, sigma = 1
               trace.reduced_min_eig >= 4.0 - 2.0 - tol;
  return trace;
}

}  // namespace dfc
