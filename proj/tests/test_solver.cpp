#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dfc/solver.hpp"

using namespace dfc;

namespace {

PolyField clamped_plate_solution(const FlatDomain& dom) {
  auto x = Poly::variable(2, 1);
  auto y = Poly::variable(2, 2);
  Poly p = x * (Poly(2, Rational(1)) - x) * y * (Poly(2, Rational(1)) - y);
  p = p * p;
  PolyForm pf(2, 0, 0);
  pf.set({{}, {}}, p);
  return PolyField{dom, pf};
}

}  // namespace

TEST_CASE("B interior rows equal the squared discrete Laplacian (scalar)") {
  // The composition H* H collapses, for scalars, to sum_ab d2_ab d2_ab; the
  // oracle re-assembles that squared-Laplacian stencil from the same 1-D
  // kernels by hand and compares each interior row.
  int n = 16;
  auto dom = FlatDomain::unit_box(2, {n, n});
  auto ops = assemble(dom, 0, 0);
  auto layout = GridLayout::of(dom);
  double h = layout.h[0];
  long node = 8 * layout.stride[1] + 8 * layout.stride[0];

  Eigen::VectorXd row = Eigen::VectorXd::Zero(ops.B.mat.cols());
  for (int outer = 0; outer < ops.B.mat.outerSize(); ++outer)
    for (SpMat::InnerIterator it(ops.B.mat, outer); it; ++it)
      if (it.row() == node) row[it.col()] += it.value();

  // hand-assembled: S_x^2 + S_y^2 + 2 (D1x D1y)^2 on a far-interior node
  std::map<std::pair<int, int>, double> st;
  auto add = [&](int dx, int dy, double v) { st[{dx, dy}] += v; };
  double h2 = h * h, h4 = h2 * h2;
  // S^2 per axis: [1 -4 6 -4 1]/h^4
  for (auto [axis_dx, axis_dy] : {std::pair{1, 0}, std::pair{0, 1}}) {
    add(-2 * axis_dx, -2 * axis_dy, 1.0 / h4);
    add(-1 * axis_dx, -1 * axis_dy, -4.0 / h4);
    add(0, 0, 6.0 / h4);
    add(1 * axis_dx, 1 * axis_dy, -4.0 / h4);
    add(2 * axis_dx, 2 * axis_dy, 1.0 / h4);
  }
  // 2 (D1x D1y)^2 = 2 * outer([1 0 -2 0 1]/(4h^2)) in each axis
  double c[5] = {1.0, 0.0, -2.0, 0.0, 1.0};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (c[i] != 0.0 && c[j] != 0.0)
        add(i - 2, j - 2, 2.0 * c[i] * c[j] / (16.0 * h4));

  auto at = [&](int dx, int dy) {
    return layout.shifted(layout.shifted(node, 0, dx), 1, dy);
  };
  for (const auto& [off, v] : st) {
    CHECK(row[at(off.first, off.second)] == doctest::Approx(v).epsilon(1e-10));
  }
  // no extra entries beyond the hand stencil
  double extra = 0.0;
  for (long cidx = 0; cidx < row.size(); ++cidx) {
    if (row[cidx] == 0.0) continue;
    int cx = layout.coord(cidx % layout.total, 0) - 8;
    int cy = layout.coord(cidx % layout.total, 1) - 8;
    if (!st.count({cx, cy})) extra = std::max(extra, std::abs(row[cidx]));
  }
  CHECK(extra == 0.0);
}

TEST_CASE("B equals the four-composition matrix identity") {
  auto dom = FlatDomain::unit_box(2, {10, 10});
  auto ops = assemble(dom, 1, 1);
  SpMat rebuilt = SpMat(ops.H_from_down.mat * ops.Hstar.mat) +
                  SpMat(ops.Hstar_from_up.mat * ops.H.mat) +
                  SpMat(ops.Fstar_from_up.mat * ops.F.mat) +
                  SpMat(ops.F_from_mixed.mat * ops.Fstar.mat);
  SpMat diff = rebuilt - ops.B.mat;
  double m = 0;
  for (int o = 0; o < diff.outerSize(); ++o)
    for (SpMat::InnerIterator it(diff, o); it; ++it) m = std::max(m, std::abs(it.value()));
  CHECK(m == 0.0);
}

TEST_CASE("assembled operators match polynomial-mode operators away from faces") {
  Prng rng(5);
  auto dom = FlatDomain::unit_box(2, {20, 20});
  auto f = random_poly_field(rng, dom, 1, 1, 3);
  auto ops = assemble(dom, 1, 1);
  auto layout = GridLayout::of(dom);

  auto hf_exact = sample(PolyField{dom, second_order(f.value, Op2::CurlCurl)}, {20, 20});
  Eigen::VectorXd hv = ops.H.mat * to_vector(sample(f, {20, 20}));
  Eigen::VectorXd he = to_vector(hf_exact);
  double err = 0;
  long nb = hv.size() / layout.total;
  for (long node = 0; node < layout.total; ++node) {
    int cx = layout.coord(node, 0), cy = layout.coord(node, 1);
    if (cx < 2 || cy < 2 || cx > 17 || cy > 17) continue;
    for (long key = 0; key < nb; ++key)
      err = std::max(err, std::abs(hv[key * layout.total + node] -
                                   he[key * layout.total + node]));
  }
  // degree-3 coefficients: centered kernels are exact
  CHECK(err < 1e-9);
}

TEST_CASE("adjointness of assembled pairs on compactly supported fields") {
  Prng rng(15);
  auto dom = FlatDomain::unit_box(2);
  auto w = bump_poly(dom, 2);
  auto psi = PolyField{dom, scale_coeffs(w, random_poly_field(rng, dom, 0, 0, 2).value)};
  auto eta = PolyField{dom, scale_coeffs(w, random_poly_field(rng, dom, 1, 1, 2).value)};
  double prev = -1;
  for (int n : {16, 32, 64}) {
    std::vector<int> grid = {n, n};
    FlatDomain dd = dom;
    dd.grid = grid;
    auto ops = assemble(dd, 0, 0);
    Eigen::VectorXd pv = to_vector(sample(psi, grid));
    Eigen::VectorXd ev = to_vector(sample(eta, grid));
    Eigen::VectorXd w0 = trapezoid_weights(dd, 0, 0);
    Eigen::VectorXd w1 = trapezoid_weights(dd, 1, 1);
    double lhs = (ops.H.mat * pv).dot(w1.cwiseProduct(ev));
    double rhs = pv.dot(w0.cwiseProduct(ops.Hstar_from_up.mat * ev));
    double err = std::abs(lhs - rhs);
    // bump^2 fields keep every one-sided row inactive: the pairing is exact
    // up to rounding, so the decay check carries an absolute floor
    if (prev > 0) CHECK(err < std::max(prev / 3.0, 1e-15));
    prev = err;
  }
}

TEST_CASE("clamped plate: manufactured-solution convergence") {
  std::vector<double> errs;
  for (int n : {16, 32}) {
    auto dom = FlatDomain::unit_box(2, {n, n});
    auto truth_field = clamped_plate_solution(dom);
    auto chi = sample(PolyField{dom, bilaplacian(truth_field.value)}, {n, n});
    auto truth = sample(truth_field, {n, n});
    auto ops = assemble(dom, 0, 0);
    auto res = solve(ops, Family::TT, chi, {});
    CHECK(res.relative_residual <= 1e-8);
    errs.push_back(max_norm(res.psi - truth) / max_norm(truth));
  }
  CHECK(std::log2(errs[0] / errs[1]) > 1.8);
  CHECK(errs[1] < 1e-2);
}

TEST_CASE("solve reports and removes the kernel component (NN scalar)") {
  int n = 24;
  auto dom = FlatDomain::unit_box(2, {n, n});
  auto ops = assemble(dom, 0, 0);
  // chi = constant: lies in the affine kernel direction
  GridField chi = GridField::zeros(dom, 0, 0);
  for (auto& [key, vals] : chi.comps)
    for (auto& v : vals) v = 1.0;
  auto res = solve(ops, Family::NN, chi, {});
  CHECK(res.kernel_dim == 3);
  CHECK(res.kernel_component_removed > 0.5);  // the constant bulk removed
  CHECK(res.relative_residual <= 1e-8);
}

TEST_CASE("kernel dimensions: NN affine kernel, TT trivial kernel") {
  auto dom24 = FlatDomain::unit_box(2, {24, 24});
  auto ops24 = assemble(dom24, 0, 0);
  auto nn = kernel_dimension(ops24, Family::NN);
  CHECK(nn.dim == 3);
  CHECK(nn.conclusive);
  REQUIRE(nn.basis.size() == 3);

  auto tt = kernel_dimension(ops24, Family::TT);
  CHECK(tt.dim == 0);
  CHECK(tt.conclusive);

  // refinement stability with the coarse threshold
  auto dom48 = FlatDomain::unit_box(2, {48, 48});
  auto ops48 = assemble(dom48, 0, 0);
  CHECK(kernel_dimension(ops48, Family::NN, true, nn.threshold).dim == 3);
  CHECK(kernel_dimension(ops48, Family::TT, true, tt.threshold).dim == 0);

  // guardrail
  auto big = FlatDomain::unit_box(2, {160, 160});
  auto ops_big = assemble(big, 0, 0);
  CHECK_THROWS_AS(kernel_dimension(ops_big, Family::TT), ResourceError);
}

TEST_CASE("green operator contract") {
  Prng rng(8);
  int n = 24;
  auto dom = FlatDomain::unit_box(2, {n, n});
  auto ops = assemble(dom, 0, 0);
  auto psi = sample(random_poly_field(rng, dom, 0, 0, 3), {n, n});

  auto g = green_apply(ops, Family::NN, psi, {});
  CHECK(g.kernel_dim == 3);
  // kernel input is annihilated
  GridField affine = GridField::zeros(dom, 0, 0);
  auto layout = GridLayout::of(dom);
  for (auto& [key, vals] : affine.comps)
    for (long node = 0; node < layout.total; ++node)
      vals[node] = 1.0 + 2.0 * layout.x(node, 0);
  auto gk = green_apply(ops, Family::NN, affine, {});
  double scale = max_norm(g.psi);
  CHECK(max_norm(gk.psi) < 1e-6 * std::max(1.0, scale));
  CHECK(gk.kernel_component_removed > 0.9);

  // linearity within solver tolerance
  auto g2 = green_apply(ops, Family::TT, psi, {});
  GridField two_psi = psi;
  for (auto& [key, vals] : two_psi.comps)
    for (auto& v : vals) v *= 2.0;
  auto g3 = green_apply(ops, Family::TT, two_psi, {});
  GridField diff = g3.psi;
  {
    Eigen::VectorXd dv = to_vector(g3.psi) - 2.0 * to_vector(g2.psi);
    diff = from_vector(dom, 0, 0, dv);
  }
  CHECK(max_norm(diff) < 1e-7 * max_norm(g3.psi));
}

TEST_CASE("transpose equivariance of the green operators at (1,1)") {
  Prng rng(12);
  int n = 24;
  auto dom = FlatDomain::unit_box(2, {n, n});
  auto ops = assemble(dom, 1, 1);
  auto psi = sample(random_poly_field(rng, dom, 1, 1, 3), {n, n});
  auto psi_t = transpose(psi);
  SolveOptions so;
  so.tol = 1e-12;
  so.max_iterations = 3000;
  Eigen::VectorXd w = trapezoid_weights(dom, 1, 1);

  auto check_pair = [&](Family r, Family r_partner) {
    auto a = green_apply(ops, r, psi_t, so);
    auto b = green_apply(ops, r_partner, psi, so);
    Eigen::VectorXd diff = to_vector(transpose(a.psi)) - to_vector(b.psi);
    double err = std::sqrt(diff.dot(w.cwiseProduct(diff)));
    CHECK(err < 1e-7);  // 10x the default solver tolerance
  };
  check_pair(Family::TT, Family::TT);
  check_pair(Family::NN, Family::NN);
  check_pair(Family::NT, Family::TN);
}

TEST_CASE("biharmonic module split (scalar, d=2)") {
  auto dom = FlatDomain::unit_box(2, {16, 16});
  auto ops = assemble(dom, 0, 0);
  auto nn = bh_split(ops, Family::NN);
  CHECK(nn.conclusive);
  CHECK(nn.dim_bh == 3);          // affine fields
  CHECK(nn.dim_bh_family == 3);   // all of them satisfy NN conditions
  CHECK(nn.dim_complement == 0);

  auto tt = bh_split(ops, Family::TT);
  CHECK(tt.conclusive);
  CHECK(tt.dim_bh == 3);
  CHECK(tt.dim_bh_family == 0);
  CHECK(tt.dim_complement == 3);
  CHECK(tt.max_cross < 1e-8);
}

TEST_CASE("korn constant: finite, scale-invariant, kernel-aware") {
  auto dom = FlatDomain::unit_box(2, {20, 20});
  auto ops = assemble(dom, 0, 0);
  auto tt = korn_constant(ops, Family::TT, 6, 99);
  CHECK(tt.constant > 0.0);
  CHECK(std::isfinite(tt.constant));
  auto tt2 = korn_constant(ops, Family::TT, 6, 99);
  CHECK(tt.constant == tt2.constant);  // deterministic

  auto nn = korn_constant(ops, Family::NN, 6, 99);
  CHECK(nn.kernel_dim == 3);
  CHECK(std::isfinite(nn.constant));
}

TEST_CASE("assemble guardrails") {
  auto small = FlatDomain::unit_box(2, {6, 6});
  CHECK_THROWS_AS(assemble(small, 0, 0), std::domain_error);
}
