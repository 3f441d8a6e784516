#pragma once

// Dense symmetric linear algebra kernel. Everything here is a thin,
// deterministic wrapper over LAPACK/BLAS (dsyevr, dsyevd, dgesdd, dsytrf)
// exposed through Eigen matrix types. Dense-only by design: sparse
// operators are densified at this boundary so that spectra carry no
// iterative-solver noise.

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace friedlab::eigsolve {

struct NotSPD : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularShift : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DenseSymEigResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns; B-orthonormal for the pencil (A,B)
  Eigen::VectorXd residuals;     // ||A x - l B x||_2 / (||A||_F + |l| ||B||_F)
};

// First m eigenpairs of A x = lambda B x, A symmetric, B SPD.
// Cholesky reduction of B followed by a dense symmetric eigensolve.
DenseSymEigResult sym_generalized_eig(const Eigen::MatrixXd& A,
                                      const Eigen::MatrixXd& B, int m);

// Standard problem (B = I).
DenseSymEigResult sym_eig(const Eigen::MatrixXd& A, int m);

// Orthonormal basis of the nullspace of B, rank decided by singular values
// above rtol * sigma_max.
Eigen::MatrixXd nullspace(const Eigen::MatrixXd& B, double rtol = 1e-12);

Eigen::VectorXd singular_values(const Eigen::MatrixXd& B);
int svd_rank(const Eigen::MatrixXd& B, double rtol = 1e-12);

// Solve A X = rhs for symmetric (possibly indefinite) nonsingular A via a
// full symmetric eigendecomposition. Throws SingularShift when
// min |eig| <= tol * max |eig|.
Eigen::MatrixXd sym_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& rhs,
                          double tol = 1e-12);

// Bunch-Kaufman LDL^T for symmetric indefinite systems: factor once,
// solve many right-hand sides.
class SymIndefSolver {
 public:
  explicit SymIndefSolver(const Eigen::MatrixXd& A);
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  int size() const { return static_cast<int>(f_.rows()); }

 private:
  Eigen::MatrixXd f_;
  std::vector<int> ipiv_;
};

// Dense products routed through BLAS dgemm (Eigen's own kernels are a
// bottleneck at the sizes the Stokes reductions reach).
Eigen::MatrixXd multiply(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);
Eigen::MatrixXd multiply_at_b(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

// Z^T S Z for symmetric S, result symmetrized exactly.
Eigen::MatrixXd congruence(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Z);

}  // namespace friedlab::eigsolve
