#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include "dfc/symbol.hpp"

using namespace dfc;

namespace {

std::vector<double> unit_xi(int d, std::uint64_t seed = 3) {
  auto pts = unit_tangential_samples(d, 8, seed);
  std::vector<double> xi(pts.back().size());
  for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = to_double(pts.back()[i]);
  return xi;
}

double max_abs(const CMatrix& m) { return m.rows() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("interior symbols: composition rule reproduces P_B = |zeta|^4 Id") {
  for (int d : {2, 3, 4}) {
    auto xi = unit_xi(d);
    for (int k = 0; k <= d; ++k) {
      for (int m = 0; m <= d; ++m) {
        auto pb = interior_symbol(InteriorOp::B, d, k, m, xi);
        for (double xid : {0.0, 0.7, -1.3}) {
          auto mat = evaluate(pb, Complex(xid, 0.0));
          if (mat.rows() == 0) continue;
          double z4 = (1.0 + xid * xid) * (1.0 + xid * xid);
          CMatrix expect = z4 * CMatrix::Identity(mat.rows(), mat.cols());
          CHECK(max_abs(mat - expect) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("P_H example: d=2, (0,0), xi = dx1 maps 1 to -dx1 (x) dx1") {
  std::vector<double> xi = {1.0};
  auto ph = interior_symbol(InteriorOp::H, 2, 0, 0, xi);
  auto mat = evaluate(ph, Complex(0.0, 0.0));
  REQUIRE(mat.rows() == 4);  // (1,1) fiber of R^2
  REQUIRE(mat.cols() == 1);
  // basis order: (1,1),(1,2),(2,1),(2,2)
  CHECK(std::abs(mat(0, 0) - Complex(-1.0, 0.0)) < 1e-14);
  CHECK(std::abs(mat(1, 0)) < 1e-14);
  CHECK(std::abs(mat(2, 0)) < 1e-14);
  CHECK(std::abs(mat(3, 0)) < 1e-14);
}

namespace {

// Independent face-fiber matrices built straight from the fiber algebra.
template <class Op>
CMatrix face_op_matrix(int df, int ks, int ms, int kd, int md, Op&& op) {
  auto basis_of = [&](int dd, int kk, int mm) {
    std::vector<MultiIndexPair> b;
    if (kk >= 0 && kk <= dd && mm >= 0 && mm <= dd) b = enumerate_basis(dd, kk, mm);
    return b;
  };
  auto src = basis_of(df, ks, ms);
  auto dst = basis_of(df, kd, md);
  CMatrix out = CMatrix::Zero(long(dst.size()), long(src.size()));
  for (std::size_t j = 0; j < src.size(); ++j) {
    DoubleForm<double> e(df, ks, ms);
    e.set(src[j], 1.0);
    auto img = op(e);
    for (std::size_t i = 0; i < dst.size(); ++i) out(long(i), long(j)) = img.get(dst[i]);
  }
  return out;
}

CMatrix face_wedge(int df, int k, int m, const std::vector<double>& xi, Side side) {
  return face_op_matrix(df, k, m, side == Side::Form ? k + 1 : k,
                        side == Side::Form ? m : m + 1,
                        [&](const DoubleForm<double>& e) {
                          DoubleForm<double> cov(df, side == Side::Form ? 1 : 0,
                                                 side == Side::Form ? 0 : 1);
                          for (int a = 1; a <= df; ++a) {
                            if (side == Side::Form)
                              cov.add({{a}, {}}, xi[a - 1]);
                            else
                              cov.add({{}, {a}}, xi[a - 1]);
                          }
                          return wedge(cov, e);
                        });
}

CMatrix face_interior(int df, int k, int m, const std::vector<double>& xi, Side side) {
  return face_op_matrix(df, k, m, side == Side::Form ? k - 1 : k,
                        side == Side::Form ? m : m - 1,
                        [&](const DoubleForm<double>& e) {
                          FrameVector<double> x;
                          x.comps.assign(df, 0.0);
                          for (int a = 0; a < df; ++a) x.comps[a] = xi[a];
                          return interior(x, e, side);
                        });
}

CMatrix poly_coeff(const SymbolPolynomial& p, int j) {
  if (j <= p.degree()) return p.coeff[j].mat;
  return CMatrix::Zero(p.coeff[0].mat.rows(), p.coeff[0].mat.cols());
}

// acc += sign * a * b when the shapes chain; skip silently otherwise (zero
// modules appear as empty matrices).
void acc_prod(CMatrix& acc, double sign, const CMatrix& a, const CMatrix& b) {
  if (a.rows() == 0 || b.rows() == 0 || a.cols() != b.rows()) return;
  if (acc.rows() != a.rows() || acc.cols() != b.cols()) return;
  acc += sign * (a * b);
}

}  // namespace

TEST_CASE("first-order boundary symbols match the closed forms") {
  // -i P_T      = Ptt xi_d - xi ^ Pnt - xi^T ^ Ptn
  // -i P_F*     = Pnt xi_d - xi^T ^ Pnn + i_xi Ptt
  // -i P_F      = Ptn xi_d - xi  ^ Pnn + iV_xi Ptt
  // P_{Ptt H*}  = -(Pnn xi_d^2 + i_xi Ptn xi_d + iV_xi Pnt xi_d + i_xi iV_xi Ptt)
  Complex mi(0, -1);
  for (int d : {2, 3}) {
    auto xi = unit_xi(d, 11);
    int df = d - 1;
    for (int k = 0; k <= d; ++k) {
      for (int m = 0; m <= d; ++m) {
        auto tt_ops = boundary_symbols(BoundarySet::TT, d, k, m, xi);
        auto nn_ops = boundary_symbols(BoundarySet::NN, d, k, m, xi);
        CMatrix ptt = tt_ops[0].coeff[0].mat;
        CMatrix ptn = tt_ops[1].coeff[0].mat;
        CMatrix pnt = tt_ops[2].coeff[0].mat;
        CMatrix pnn = nn_ops[0].coeff[0].mat;

        const auto& T = tt_ops[3];
        if (T.coeff[0].mat.rows() > 0) {
          CMatrix c0 = mi * poly_coeff(T, 0), c1 = mi * poly_coeff(T, 1);
          CHECK(max_abs(c1 - ptt) < 1e-12);
          CMatrix e0 = CMatrix::Zero(c0.rows(), c0.cols());
          acc_prod(e0, -1, face_wedge(df, k - 1, m, xi, Side::Form), pnt);
          acc_prod(e0, -1, face_wedge(df, k, m - 1, xi, Side::Vector), ptn);
          CHECK(max_abs(c0 - e0) < 1e-12);
        }
        const auto& Fst = tt_ops[4];
        if (Fst.coeff[0].mat.rows() > 0) {
          CMatrix c0 = mi * poly_coeff(Fst, 0), c1 = mi * poly_coeff(Fst, 1);
          CHECK(max_abs(c1 - pnt) < 1e-12);
          CMatrix e0 = CMatrix::Zero(c0.rows(), c0.cols());
          acc_prod(e0, -1, face_wedge(df, k - 1, m - 1, xi, Side::Vector), pnn);
          acc_prod(e0, +1, face_interior(df, k, m, xi, Side::Form), ptt);
          CHECK(max_abs(c0 - e0) < 1e-12);
        }
        const auto& Fo = tt_ops[5];
        if (Fo.coeff[0].mat.rows() > 0) {
          CMatrix c0 = mi * poly_coeff(Fo, 0), c1 = mi * poly_coeff(Fo, 1);
          CHECK(max_abs(c1 - ptn) < 1e-12);
          CMatrix e0 = CMatrix::Zero(c0.rows(), c0.cols());
          acc_prod(e0, -1, face_wedge(df, k - 1, m - 1, xi, Side::Form), pnn);
          acc_prod(e0, +1, face_interior(df, k, m, xi, Side::Vector), ptt);
          CHECK(max_abs(c0 - e0) < 1e-12);
        }
        const auto& ptt_hs = tt_ops[6];
        if (ptt_hs.coeff[0].mat.rows() > 0) {
          CMatrix h0 = poly_coeff(ptt_hs, 0), h1 = poly_coeff(ptt_hs, 1),
                  h2 = poly_coeff(ptt_hs, 2);
          CHECK(max_abs(h2 + pnn) < 1e-12);
          CMatrix e1 = CMatrix::Zero(h1.rows(), h1.cols());
          acc_prod(e1, -1, face_interior(df, k, m - 1, xi, Side::Form), ptn);
          acc_prod(e1, -1, face_interior(df, k - 1, m, xi, Side::Vector), pnt);
          CHECK(max_abs(h1 - e1) < 1e-12);
          CMatrix e0 = CMatrix::Zero(h0.rows(), h0.cols());
          if (ptt.rows() > 0)
            acc_prod(e0, -1, face_interior(df, k, m - 1, xi, Side::Form),
                     CMatrix(face_interior(df, k, m, xi, Side::Vector) * ptt));
          CHECK(max_abs(h0 - e0) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("LS system shapes and dimension audit") {
  auto xi3 = unit_xi(3);
  auto sys = ls_system(3, 1, 1, BoundarySet::TT, xi3);
  CHECK(sys.xi_matrix.rows() == 18);
  CHECK(sys.xi_matrix.cols() == 18);

  auto audit = dimension_audit(3, 1, 1, BoundarySet::TT);
  CHECK(audit.total == 18);
  CHECK(audit.expected == 18);
  CHECK(audit.match());

  auto audit2 = dimension_audit(2, 0, 0, BoundarySet::TT);
  CHECK(audit2.total == 2);
  CHECK(audit2.match());

  auto audit3 = dimension_audit(3, 1, 1, BoundarySet::STT);
  CHECK(audit3.total == 12);  // C(3,1) (C(3,1)+1)
  CHECK(audit3.match());

  for (int d : {2, 3, 4})
    for (int k = 0; k <= d; ++k)
      for (int m = 0; m <= d; ++m)
        for (auto set : {BoundarySet::TT, BoundarySet::NN, BoundarySet::NT,
                         BoundarySet::TN}) {
          auto a = dimension_audit(d, k, m, set);
          CHECK(a.match());
          auto s = ls_system(d, k, m, set, unit_xi(d));
          CHECK(s.xi_matrix.rows() == a.total);
          CHECK(s.xi_matrix.cols() == 2 * fiber_dim(d, k, m));
        }
}

TEST_CASE("scalar case: boundary sets reduce to the Dirichlet/Neumann pairs") {
  // for (k,m) = (0,0) only Ptt and T rows survive in TT (Dirichlet pair) and
  // only Pnn H, Tstar H rows survive in NN; everything else vanishes.
  auto xi = unit_xi(2);
  auto names_tt = boundary_symbol_names(BoundarySet::TT);
  auto tt = boundary_symbols(BoundarySet::TT, 2, 0, 0, xi);
  for (std::size_t j = 0; j < tt.size(); ++j) {
    long rows = tt[j].coeff[0].mat.rows();
    bool surviving = names_tt[j] == "Ptt" || names_tt[j] == "T";
    CHECK((surviving ? rows > 0 : rows == 0));
  }
  auto names_nn = boundary_symbol_names(BoundarySet::NN);
  auto nn = boundary_symbols(BoundarySet::NN, 2, 0, 0, xi);
  for (std::size_t j = 0; j < nn.size(); ++j) {
    long rows = nn[j].coeff[0].mat.rows();
    bool surviving = names_nn[j] == "Pnn_H" || names_nn[j] == "Tstar_H";
    CHECK((surviving ? rows > 0 : rows == 0));
  }
  // NT and TN reduce to the Dirichlet pair as well
  for (auto set : {BoundarySet::NT, BoundarySet::TN}) {
    auto names = boundary_symbol_names(set);
    auto ops = boundary_symbols(set, 2, 0, 0, xi);
    for (std::size_t j = 0; j < ops.size(); ++j) {
      long rows = ops[j].coeff[0].mat.rows();
      bool surviving = names[j] == "Ptt" || names[j] == "T";
      CHECK((surviving ? rows > 0 : rows == 0));
    }
  }
}

TEST_CASE("regular ellipticity: PASS cases and a corrupted system") {
  auto rep = check_regular_ellipticity(2, 1, 1, BoundarySet::TT, 4, 1);
  CHECK(rep.pass);
  CHECK(rep.min_sigma > 1e-4);

  for (auto set : {BoundarySet::NN, BoundarySet::NT, BoundarySet::TN})
    CHECK(check_regular_ellipticity(2, 1, 1, set, 4, 1).pass);

  CHECK(check_regular_ellipticity(3, 1, 1, BoundarySet::SNN, 4, 1).pass);
  CHECK(check_regular_ellipticity(3, 1, 1, BoundarySet::STT, 4, 1).pass);
  CHECK(check_regular_ellipticity(3, 2, 1, BoundarySet::NT, 4, 1).pass);

  // dropping the T H* block leaves more columns than rows: singular
  auto xi = unit_xi(3);
  auto sys = ls_system(3, 1, 1, BoundarySet::TT, xi);
  long rows_wo_last = sys.row_block.back();
  CMatrix crippled = sys.xi_matrix.topRows(rows_wo_last);
  Eigen::JacobiSVD<CMatrix> svd(crippled.transpose() * crippled);
  CHECK(svd.singularValues().minCoeff() < 1e-12);
}

TEST_CASE("ellipticity across bidegrees at d=2,3") {
  for (int d : {2, 3})
    for (int k = 0; k <= d; ++k)
      for (int m = 0; m <= d; ++m)
        for (auto set : {BoundarySet::TT, BoundarySet::NN, BoundarySet::NT,
                         BoundarySet::TN}) {
          auto rep = check_regular_ellipticity(d, k, m, set, 6, 5);
          CHECK(rep.pass);
        }
}

TEST_CASE("proof trace at (3,1,1): eliminations and the reduced operator") {
  auto pts = unit_tangential_samples(3, 16, 9);
  for (const auto& p : pts) {
    std::vector<double> xi(p.size());
    for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = to_double(p[i]);
    auto trace = proof_trace_tt(3, 1, 1, xi);
    CHECK(trace.zeroth_lambda_free);
    CHECK(trace.zeroth_block_rank_gap == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(trace.reduced_min_eig >= 2.0 - 1e-6);
    CHECK(trace.pass);
  }
}

TEST_CASE("tangential samples are exactly unit rationals") {
  for (int d : {2, 3, 4}) {
    auto pts = unit_tangential_samples(d, 20, 7);
    CHECK(pts.size() == 20);
    for (const auto& p : pts) {
      Rational n2(0);
      for (const auto& c : p) n2 += c * c;
      CHECK(n2 == Rational(1));
    }
  }
  // determinism
  auto a = unit_tangential_samples(3, 10, 42);
  auto b = unit_tangential_samples(3, 10, 42);
  CHECK(a == b);
}
