// Principal-symbol calculus in the boundary fiber and the executable
// Lopatinskij-Shapiro verifier for the double bilaplacian's four boundary
// sets (plus the symmetric variants).
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "dfc/fiber.hpp"
#include "dfc/prng.hpp"

namespace dfc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

inline long fiber_dim(int d, int k, int m) {
  if (k < 0 || k > d || m < 0 || m > d) return 0;
  return binomial(d, k) * binomial(d, m);
}

// A linear fiber map annotated with its source/target bidegrees. The fiber
// dimension may differ between source (bulk, dim d) and target (face, d-1).
struct SymbolOperator {
  int d_src = 0, k_src = 0, m_src = 0;
  int d_dst = 0, k_dst = 0, m_dst = 0;
  CMatrix mat;  // rows fiber_dim(dst), cols fiber_dim(src)

  static SymbolOperator zero(int ds, int ks, int ms, int dd, int kd, int md) {
    SymbolOperator s{ds, ks, ms, dd, kd, md,
                     CMatrix::Zero(fiber_dim(dd, kd, md), fiber_dim(ds, ks, ms))};
    return s;
  }
};

SymbolOperator compose(const SymbolOperator& a, const SymbolOperator& b);  // a o b

// Polynomial in the normal covector component xi_d with SymbolOperator
// coefficients (all sharing bidegrees).
struct SymbolPolynomial {
  std::vector<SymbolOperator> coeff;  // coeff[j] multiplies xi_d^j

  int degree() const { return int(coeff.size()) - 1; }
  const SymbolOperator& at(int j) const { return coeff[j]; }
};

SymbolPolynomial compose(const SymbolPolynomial& a, const SymbolPolynomial& b);
SymbolPolynomial add(const SymbolPolynomial& a, const SymbolPolynomial& b);
SymbolPolynomial scale(Complex c, const SymbolPolynomial& a);
CMatrix evaluate(const SymbolPolynomial& p, Complex xi_d);

enum class InteriorOp { D, Delta, DV, DeltaV, H, Hstar, Fstar, F, B };

// Interior principal symbols at covector xi + xi_d dr; xi is tangential
// (components along axes 1..d-1), the normal axis is d.
SymbolPolynomial interior_symbol(InteriorOp op, int d, int k, int m,
                                 const std::vector<double>& xi);

enum class BoundarySet { TT, NN, NT, TN, STT, SNN };

inline bool is_symmetric_set(BoundarySet s) {
  return s == BoundarySet::STT || s == BoundarySet::SNN;
}

std::string boundary_set_name(BoundarySet s);

// The eight (six, for symmetric sets) boundary-operator symbols of the set,
// as polynomials in xi_d, in the paper's listed order.
std::vector<SymbolPolynomial> boundary_symbols(BoundarySet set, int d, int k, int m,
                                               const std::vector<double>& xi);
std::vector<std::string> boundary_symbol_names(BoundarySet set);

struct LSSystem {
  int d = 0, k = 0, m = 0;
  BoundarySet set = BoundarySet::TT;
  std::vector<double> xi;       // unit tangential covector, d-1 components
  Eigen::MatrixXcd xi_matrix;   // the Xi map on (omega0, lambda0) coordinates
  std::vector<long> row_block;  // first row of each operator block
  std::vector<long> block_rows; // rows per operator block
};

// Assembles Xi: (omega0, lambda0) -> stacked boundary-symbol evaluations on
// M+ = { omega0 e^{-|xi|s} + lambda0 s e^{-|xi|s} }, |xi| = 1.
LSSystem ls_system(int d, int k, int m, BoundarySet set, const std::vector<double>& xi);

struct DimensionAuditRow {
  std::string op;
  long dim = 0;
};
struct DimensionAudit {
  std::vector<DimensionAuditRow> rows;
  long total = 0;
  long expected = 0;  // 2 C(d,k) C(d,m), or C(d,k)(C(d,k)+1) for symmetric sets
  bool match() const { return total == expected; }
};
DimensionAudit dimension_audit(int d, int k, int m, BoundarySet set);

// Deterministic unit tangential covectors: signed coordinate axes followed by
// a seeded low-discrepancy sequence mapped onto the sphere by a rational
// stereographic chart (the points are exactly unit-norm rationals).
std::vector<std::vector<Rational>> unit_tangential_samples(int d, int count,
                                                           std::uint64_t seed);

struct EllipticitySample {
  std::vector<double> xi;
  double min_sigma = 0.0;
  double min_sigma_pb = 0.0;  // min sigma of P_B over probed covectors, scaled by |zeta|^4
};

struct EllipticityReport {
  int d = 0, k = 0, m = 0;
  BoundarySet set = BoundarySet::TT;
  int samples = 0;
  double min_sigma = 0.0;     // over all samples
  double min_sigma_pb = 0.0;  // over all probed covectors, relative to |zeta|^4
  double threshold = 1e-8;
  bool pass = false;
  bool dims_match = false;
  std::vector<EllipticitySample> detail;
};

EllipticityReport check_regular_ellipticity(int d, int k, int m, BoundarySet set,
                                            int n_samples, std::uint64_t seed,
                                            double threshold = 1e-8);

// Reproduction of the proof's elimination steps for the TT system.
struct ProofTrace {
  double zeroth_block_rank_gap = 0.0;  // smallest singular value of the
                                       // zeroth-order rows acting on omega0
  bool zeroth_lambda_free = false;     // those rows do not touch lambda0
  double reduced_min_eig = 0.0;        // min eigenvalue of the reduced operator
  bool pass = false;
};
ProofTrace proof_trace_tt(int d, int k, int m, const std::vector<double>& xi,
                          double tol = 1e-6);

}  // namespace dfc
