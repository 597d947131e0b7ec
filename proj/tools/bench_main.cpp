// Benchmark comparing the serial reference kernels against the OpenMP
// variants: CSR matvec, dot products, grid stencil sweeps and the
// ellipticity sample sweep.
#include <chrono>
#include <cstdio>

#include "dfc/solver.hpp"
#include "dfc/symbol.hpp"

using namespace dfc;

namespace {

template <class F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %8.3f ms   parallel %8.3f ms   speedup %.2fx\n", name,
              serial * 1e3, parallel * 1e3, serial / parallel);
}

}  // namespace

int main() {
  std::printf("kernel benchmark (serial reference vs OpenMP)\n");

  // CSR matvec on the assembled bilaplacian
  int n = 96;
  auto dom = FlatDomain::unit_box(2, {n, n});
  auto ops = assemble(dom, 1, 1);
  Csr bmat = Csr::from_eigen(ops.B.mat);
  Eigen::VectorXd x = Eigen::VectorXd::Random(bmat.cols);
  Eigen::VectorXd y(bmat.rows);
  report("spmv (B at (1,1), 96^2)",
         time_best_of(5, [&] { spmv_serial(bmat, x.data(), y.data()); }),
         time_best_of(5, [&] { spmv_parallel(bmat, x.data(), y.data()); }));

  Eigen::VectorXd a = Eigen::VectorXd::Random(1 << 20);
  Eigen::VectorXd b = Eigen::VectorXd::Random(1 << 20);
  volatile double sink = 0.0;
  report("dot (2^20)",
         time_best_of(9, [&] { sink = dot_serial(a.data(), b.data(), a.size()); }),
         time_best_of(9, [&] { sink = dot_parallel(a.data(), b.data(), a.size()); }));
  (void)sink;

  // grid stencil sweep: d of a (1,1) field at 128^2
  auto fdom = FlatDomain::unit_box(2, {128, 128});
  Prng rng(3);
  auto field = sample(random_poly_field(rng, fdom, 1, 1, 3), {128, 128});
  double t_serial, t_parallel;
  {
    SerialScope scope;
    t_serial = time_best_of(5, [&] { auto r = d_nabla(field, Side::Form); });
  }
  set_parallel(true);
  t_parallel = time_best_of(5, [&] { auto r = d_nabla(field, Side::Form); });
  report("grid stencil d (128^2)", t_serial, t_parallel);

  // ellipticity sweep, parallel over samples
  {
    SerialScope scope;
    t_serial = time_best_of(2, [&] {
      check_regular_ellipticity(3, 1, 1, BoundarySet::TT, 16, 1);
    });
  }
  set_parallel(true);
  t_parallel = time_best_of(2, [&] {
    check_regular_ellipticity(3, 1, 1, BoundarySet::TT, 16, 1);
  });
  report("ellipticity sweep (16 xi)", t_serial, t_parallel);

  return 0;
}
