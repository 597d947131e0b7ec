// CSR kernels used inside the iterative solver, with serial reference
// implementations kept for testing and benchmarking; Eigen handles assembly,
// products and factorizations.
#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "dfc/exec.hpp"

namespace dfc {

struct Csr {
  long rows = 0, cols = 0;
  std::vector<long> ptr;
  std::vector<long> idx;
  std::vector<double> val;

  static Csr from_eigen(const Eigen::SparseMatrix<double>& m) {
    Eigen::SparseMatrix<double, Eigen::RowMajor> rm = m;
    rm.makeCompressed();
    Csr out;
    out.rows = rm.rows();
    out.cols = rm.cols();
    out.ptr.assign(rm.outerIndexPtr(), rm.outerIndexPtr() + rm.rows() + 1);
    out.idx.assign(rm.innerIndexPtr(), rm.innerIndexPtr() + rm.nonZeros());
    out.val.assign(rm.valuePtr(), rm.valuePtr() + rm.nonZeros());
    return out;
  }
};

// y = A x. Rows accumulate in long double: the normal-equation solver needs
// residuals of h^-4-scaled operators evaluated below the double rounding
// floor, and the per-row summation order stays deterministic either way.
inline void spmv_serial(const Csr& a, const double* x, double* y) {
  for (long r = 0; r < a.rows; ++r) {
    long double acc = 0.0;
    for (long p = a.ptr[r]; p < a.ptr[r + 1]; ++p)
      acc += (long double)a.val[p] * x[a.idx[p]];
    y[r] = double(acc);
  }
}

inline void spmv_parallel(const Csr& a, const double* x, double* y) {
#pragma omp parallel for schedule(static)
  for (long r = 0; r < a.rows; ++r) {
    long double acc = 0.0;
    for (long p = a.ptr[r]; p < a.ptr[r + 1]; ++p)
      acc += (long double)a.val[p] * x[a.idx[p]];
    y[r] = double(acc);
  }
}

inline void spmv(const Csr& a, const double* x, double* y) {
  if (parallel_enabled())
    spmv_parallel(a, x, y);
  else
    spmv_serial(a, x, y);
}

inline double dot_serial(const double* a, const double* b, long n) {
  double acc = 0.0;
  for (long i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline double dot_parallel(const double* a, const double* b, long n) {
  double acc = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : acc)
  for (long i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline double dot(const double* a, const double* b, long n) {
  return parallel_enabled() ? dot_parallel(a, b, n) : dot_serial(a, b, n);
}

inline void axpy_serial(double alpha, const double* x, double* y, long n) {
  for (long i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline void axpy_parallel(double alpha, const double* x, double* y, long n) {
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline void axpy(double alpha, const double* x, double* y, long n) {
  if (parallel_enabled())
    axpy_parallel(alpha, x, y, n);
  else
    axpy_serial(alpha, x, y, n);
}

}  // namespace dfc
