#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dfc/gridfield.hpp"
#include "dfc/sparse.hpp"
#include "dfc/prng.hpp"

using namespace dfc;

TEST_CASE("serial and parallel kernels agree") {
  Prng rng(9);
  int n = 200, m = 160;
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < 12; ++t)
      trips.emplace_back(i, rng.next_below(m), rng.next_unit_double() - 0.5);
  Eigen::SparseMatrix<double> A(n, m);
  A.setFromTriplets(trips.begin(), trips.end());
  Csr csr = Csr::from_eigen(A);

  Eigen::VectorXd x = Eigen::VectorXd::Random(m);
  Eigen::VectorXd y1(n), y2(n);
  spmv_serial(csr, x.data(), y1.data());
  spmv_parallel(csr, x.data(), y2.data());
  // identical per-row summation order: bitwise equal
  CHECK((y1 - y2).cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd ye = A * x;
  CHECK((y1 - ye).cwiseAbs().maxCoeff() < 1e-12 * ye.cwiseAbs().maxCoeff());

  Eigen::VectorXd a = Eigen::VectorXd::Random(10000);
  Eigen::VectorXd b = Eigen::VectorXd::Random(10000);
  double d1 = dot_serial(a.data(), b.data(), a.size());
  double d2 = dot_parallel(a.data(), b.data(), a.size());
  CHECK(d1 == doctest::Approx(d2).epsilon(1e-13));

  Eigen::VectorXd c1 = a, c2 = a;
  axpy_serial(0.37, b.data(), c1.data(), a.size());
  axpy_parallel(0.37, b.data(), c2.data(), a.size());
  CHECK((c1 - c2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grid stencil sweeps match between execution modes") {
  auto dom = FlatDomain::unit_box(2, {24, 24});
  Prng rng(4);
  auto f = sample(random_poly_field(rng, dom, 1, 1, 3), {24, 24});
  GridField serial_result{dom, 0, 0, {}}, parallel_result{dom, 0, 0, {}};
  {
    SerialScope scope;
    serial_result = d_nabla(f, Side::Form);
  }
  set_parallel(true);
  parallel_result = d_nabla(f, Side::Form);
  CHECK(max_norm(serial_result - parallel_result) == 0.0);
}
