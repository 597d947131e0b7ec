// Finite-difference realization of the double bilaplacian on flat boxes with
// the four boundary-condition families: discrete Green operators, biharmonic
// kernels, the five-way orthogonal decomposition, and the Korn-type constant.
#pragma once

#include <Eigen/Sparse>
#include <optional>

#include "dfc/boundary.hpp"
#include "dfc/gridfield.hpp"
#include "dfc/sparse.hpp"

namespace dfc {

using SpMat = Eigen::SparseMatrix<double>;

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  std::vector<double> residual_history;
  explicit NumericError(const std::string& what, std::vector<double> hist = {})
      : std::runtime_error(what), residual_history(std::move(hist)) {}
};

enum class Family { TT, NN, NT, TN };
std::string family_name(Family f);
Family family_from_string(const std::string& s);

// Sparse operator between stacked grid unknowns (component-major: unknown
// index = key_index * n_nodes + node).
struct GridOperator {
  FlatDomain domain;
  int k_src = 0, m_src = 0, k_dst = 0, m_dst = 0;
  SpMat mat;
};

struct OperatorSet {
  FlatDomain domain;
  int k = 0, m = 0;
  GridOperator H, Hstar, Fstar, F;  // at source (k,m)
  GridOperator H_from_down;         // H  at (k-1,m-1)
  GridOperator Hstar_from_up;       // H* at (k+1,m+1)
  GridOperator Fstar_from_up;       // F* at (k+1,m-1)
  GridOperator F_from_mixed;        // F  at (k-1,m+1)
  GridOperator B;                   // sum of the four compositions
};

OperatorSet assemble(const FlatDomain& dom, int k, int m,
                     const ZeroOrderPlugin* plugin = nullptr);

// Stacked-vector layout helpers.
long grid_unknowns(const FlatDomain& dom, int k, int m);
Eigen::VectorXd to_vector(const GridField& f);
GridField from_vector(const FlatDomain& dom, int k, int m, const Eigen::VectorXd& v);
Eigen::VectorXd trapezoid_weights(const FlatDomain& dom, int k, int m);

// Constraint rows for one family: the six first-layer conditions, plus the
// two second-layer conditions when layers == 2. Rows carry sqrt(face
// quadrature) scaling so that row^T row integrates squared traces.
struct ConstraintSet {
  Family family = Family::TT;
  int layers = 2;
  SpMat rows;
  std::vector<std::string> block_names;
  std::vector<long> block_offset;
  std::vector<long> block_rows;
};

ConstraintSet constraint_rows(const OperatorSet& ops, Family family, int layers);

// Trace rows of the same operators applied to a bc field's samples give the
// discrete boundary data.
Eigen::VectorXd boundary_data(const ConstraintSet& cs, const OperatorSet& ops,
                              const GridField& bc_field);

struct KernelInfo {
  int dim = 0;
  bool conclusive = true;
  double threshold = 0.0;
  double median_nonzero = 0.0;
  std::vector<double> small_eigenvalues;
  std::vector<Eigen::VectorXd> basis;  // W-orthonormal
};

// Dense-spectrum kernel detection of the constrained discrete bilaplacian
// (first-layer conditions), with the spec'd median threshold. Guardrail:
// refuses dense eigensolves above 20000 unknowns.
KernelInfo kernel_dimension(const OperatorSet& ops, Family family,
                            bool with_boundary_rows = true,
                            double threshold_override = 0.0);

struct SolveOptions {
  double tol = 1e-8;
  int max_iterations = 500;
  std::optional<GridField> bc;  // traces taken of this field; zero if absent
};

struct SolveResult {
  GridField psi;
  std::vector<double> residual_history;
  double relative_residual = 0.0;
  int iterations = 0;
  int kernel_dim = 0;
  double kernel_component_removed = 0.0;
};

// Least-squares solve of the constrained system (B rows at non-face nodes,
// boundary rows replacing them at face nodes): preconditioned CG on the
// normal equations.
SolveResult solve(const OperatorSet& ops, Family family, const GridField& chi,
                  const SolveOptions& opts = {});

// Green operator: B_R (G_R psi) = psi - P_R psi, built on solve().
SolveResult green_apply(const OperatorSet& ops, Family family, const GridField& psi,
                        const SolveOptions& opts = {});

struct DecompositionResult {
  GridField ee, cc, ec, ce, bh;
  Eigen::Matrix<double, 5, 5> gram;
  // biharmonic defect of the remainder, relative to the same seminorm of the
  // input: || D (psi - four parts) ||_W / || D psi ||_W
  double residual = 0.0;
};

DecompositionResult decompose(const FlatDomain& dom, const GridField& psi,
                              double tol = 1e-8);

struct BhSplitReport {
  int dim_bh = 0;
  int dim_bh_family = 0;
  int dim_complement = 0;
  double max_cross = 0.0;  // orthogonality of the two summands
  bool conclusive = true;
};

BhSplitReport bh_split(const OperatorSet& ops, Family family);

struct KornResult {
  double constant = 0.0;
  int samples = 0;
  int kernel_dim = 0;
};

KornResult korn_constant(const OperatorSet& ops, Family family, int samples,
                         std::uint64_t seed);

// Discrete H^2 norm squared (values + first + second differences, trapezoid).
double h2_norm_squared(const OperatorSet& ops, const Eigen::VectorXd& v);

}  // namespace dfc
