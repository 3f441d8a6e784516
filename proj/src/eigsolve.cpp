#include "friedlab/eigsolve.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace friedlab::eigsolve {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Eigen::MatrixXd multiply(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  require(X.cols() == Y.rows(), "multiply: inner dimensions differ");
  Eigen::MatrixXd C(X.rows(), Y.cols());
  if (C.size() == 0) return C;
  if (X.cols() == 0) {
    C.setZero();
    return C;
  }
  cblas_dgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(X.rows()),
              static_cast<int>(Y.cols()), static_cast<int>(X.cols()), 1.0, X.data(),
              static_cast<int>(X.rows()), Y.data(), static_cast<int>(Y.rows()), 0.0,
              C.data(), static_cast<int>(C.rows()));
  return C;
}

Eigen::MatrixXd multiply_at_b(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  require(X.rows() == Y.rows(), "multiply_at_b: inner dimensions differ");
  Eigen::MatrixXd C(X.cols(), Y.cols());
  if (C.size() == 0) return C;
  if (X.rows() == 0) {
    C.setZero();
    return C;
  }
  cblas_dgemm(CblasColMajor, CblasTrans, CblasNoTrans, static_cast<int>(X.cols()),
              static_cast<int>(Y.cols()), static_cast<int>(X.rows()), 1.0, X.data(),
              static_cast<int>(X.rows()), Y.data(), static_cast<int>(Y.rows()), 0.0,
              C.data(), static_cast<int>(C.rows()));
  return C;
}

Eigen::MatrixXd congruence(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd T = multiply(S, Z);
  Eigen::MatrixXd R = multiply_at_b(Z, T);
  Eigen::MatrixXd Rs = 0.5 * (R + R.transpose());
  return Rs;
}

DenseSymEigResult sym_generalized_eig(const Eigen::MatrixXd& A,
                                      const Eigen::MatrixXd& B, int m) {
  const int n = static_cast<int>(A.rows());
  require(A.rows() == A.cols(), "sym_generalized_eig: A not square");
  require(B.rows() == n && B.cols() == n, "sym_generalized_eig: size mismatch");
  require(m >= 1 && m <= n, "sym_generalized_eig: m out of range");

  // Cholesky of B; failure means the Gram matrix is not positive definite.
  Eigen::MatrixXd L = B;
  int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n, L.data(), n);
  if (info != 0) throw NotSPD("sym_generalized_eig: B is not SPD (dpotrf info=" + std::to_string(info) + ")");

  // C = L^{-1} A L^{-T}
  Eigen::MatrixXd C = A;
  cblas_dtrsm(CblasColMajor, CblasLeft, CblasLower, CblasNoTrans, CblasNonUnit, n, n,
              1.0, L.data(), n, C.data(), n);
  cblas_dtrsm(CblasColMajor, CblasRight, CblasLower, CblasTrans, CblasNonUnit, n, n,
              1.0, L.data(), n, C.data(), n);
  C = 0.5 * (C + C.transpose()).eval();

  Eigen::VectorXd w(n);
  Eigen::MatrixXd Zc(n, m);
  int found = 0;
  std::vector<int> isuppz(2 * static_cast<size_t>(std::max(1, m)));
  info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, C.data(), n, 0.0, 0.0, 1,
                        m, 0.0, &found, w.data(), Zc.data(), n, isuppz.data());
  if (info != 0 || found < m)
    throw std::runtime_error("sym_generalized_eig: dsyevr failed, info=" + std::to_string(info));

  // Back-transform: x = L^{-T} y gives B-orthonormal vectors.
  cblas_dtrsm(CblasColMajor, CblasLeft, CblasLower, CblasTrans, CblasNonUnit, n, m,
              1.0, L.data(), n, Zc.data(), n);

  DenseSymEigResult r;
  r.eigenvalues = w.head(m);
  r.eigenvectors = Zc;

  const double normA = A.norm();
  const double normB = B.norm();
  Eigen::MatrixXd AX = multiply(A, r.eigenvectors);
  Eigen::MatrixXd BX = multiply(B, r.eigenvectors);
  r.residuals.resize(m);
  for (int i = 0; i < m; ++i) {
    double denom = normA + std::abs(r.eigenvalues[i]) * normB;
    if (denom == 0.0) denom = 1.0;
    r.residuals[i] = (AX.col(i) - r.eigenvalues[i] * BX.col(i)).norm() / denom;
  }
  return r;
}

DenseSymEigResult sym_eig(const Eigen::MatrixXd& A, int m) {
  return sym_generalized_eig(A, Eigen::MatrixXd::Identity(A.rows(), A.cols()), m);
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& B) {
  const int rows = static_cast<int>(B.rows());
  const int cols = static_cast<int>(B.cols());
  const int mn = std::min(rows, cols);
  if (mn == 0) return Eigen::VectorXd();
  Eigen::MatrixXd work = B;
  Eigen::VectorXd s(mn);
  int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', rows, cols, work.data(), rows,
                            s.data(), nullptr, rows, nullptr, cols);
  if (info != 0) throw std::runtime_error("singular_values: dgesdd info=" + std::to_string(info));
  return s;
}

int svd_rank(const Eigen::MatrixXd& B, double rtol) {
  Eigen::VectorXd s = singular_values(B);
  if (s.size() == 0) return 0;
  const double thresh = rtol * s[0];
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > thresh) ++r;
  return r;
}

Eigen::MatrixXd nullspace(const Eigen::MatrixXd& B, double rtol) {
  const int rows = static_cast<int>(B.rows());
  const int n = static_cast<int>(B.cols());
  if (rows == 0 || n == 0) return Eigen::MatrixXd::Identity(n, n);

  const int mn = std::min(rows, n);
  Eigen::MatrixXd work = B;
  Eigen::VectorXd s(mn);
  Eigen::MatrixXd U(rows, rows), VT(n, n);
  int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'A', rows, n, work.data(), rows, s.data(),
                            U.data(), rows, VT.data(), n);
  if (info != 0) throw std::runtime_error("nullspace: dgesdd info=" + std::to_string(info));

  const double smax = s.size() > 0 ? s[0] : 0.0;
  const double thresh = rtol * smax;
  int rank = 0;
  for (int i = 0; i < mn; ++i)
    if (s[i] > thresh) ++rank;

  // Rows rank..n-1 of VT span the nullspace (orthonormal by construction).
  Eigen::MatrixXd Z(n, n - rank);
  for (int j = 0; j < n - rank; ++j) Z.col(j) = VT.row(rank + j).transpose();
  return Z;
}

Eigen::MatrixXd sym_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& rhs,
                          double tol) {
  const int n = static_cast<int>(A.rows());
  require(A.cols() == n && rhs.rows() == n, "sym_solve: size mismatch");
  DenseSymEigResult e = sym_eig(0.5 * (A + A.transpose()), n);
  const double amax = e.eigenvalues.cwiseAbs().maxCoeff();
  const double amin = e.eigenvalues.cwiseAbs().minCoeff();
  if (amax == 0.0 || amin <= tol * amax)
    throw SingularShift("sym_solve: matrix numerically singular (min|eig|=" +
                        std::to_string(amin) + ")");
  Eigen::MatrixXd t = multiply_at_b(e.eigenvectors, rhs);
  for (int i = 0; i < n; ++i) t.row(i) /= e.eigenvalues[i];
  return multiply(e.eigenvectors, t);
}

SymIndefSolver::SymIndefSolver(const Eigen::MatrixXd& A) : f_(A), ipiv_(A.rows()) {
  const int n = static_cast<int>(A.rows());
  require(A.cols() == n, "SymIndefSolver: not square");
  int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, f_.data(), n, ipiv_.data());
  if (info > 0)
    throw SingularShift("SymIndefSolver: exactly singular pivot at " + std::to_string(info));
  if (info < 0) throw std::runtime_error("SymIndefSolver: dsytrf info=" + std::to_string(info));
}

Eigen::MatrixXd SymIndefSolver::solve(const Eigen::MatrixXd& rhs) const {
  const int n = size();
  require(rhs.rows() == n, "SymIndefSolver::solve: size mismatch");
  Eigen::MatrixXd X = rhs;
  if (X.cols() == 0) return X;
  int info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, static_cast<int>(X.cols()),
                            f_.data(), n, ipiv_.data(), X.data(), n);
  if (info != 0) throw std::runtime_error("SymIndefSolver: dsytrs info=" + std::to_string(info));
  return X;
}

Eigen::VectorXd SymIndefSolver::solve(const Eigen::VectorXd& rhs) const {
  Eigen::MatrixXd X = solve(Eigen::MatrixXd(rhs));
  return X.col(0);
}

}  // namespace friedlab::eigsolve
