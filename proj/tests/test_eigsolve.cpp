#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "friedlab/eigsolve.hpp"
#include "testing_support.hpp"

#include <Eigen/Dense>

#include <random>

using namespace friedlab;
namespace eig = friedlab::eigsolve;

TEST_CASE("diagonal standard problem") {
  Eigen::MatrixXd A = Eigen::Vector3d(1, 2, 3).asDiagonal();
  auto r = eig::sym_eig(A, 3);
  CHECK(r.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r.eigenvalues[2] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("diagonal pencil: A=diag(2,3), B=diag(2,1) -> {1,3}") {
  Eigen::MatrixXd A = Eigen::Vector2d(2, 3).asDiagonal();
  Eigen::MatrixXd B = Eigen::Vector2d(2, 1).asDiagonal();
  auto r = eig::sym_generalized_eig(A, B, 2);
  CHECK(r.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("random pencil: residuals and B-orthonormality") {
  std::mt19937_64 rng(7);
  const int n = 20;
  Eigen::MatrixXd G = testing::random_matrix(rng, n, n);
  Eigen::MatrixXd A = 0.5 * (G + G.transpose());
  Eigen::MatrixXd H = testing::random_matrix(rng, n, n);
  Eigen::MatrixXd B = H.transpose() * H + Eigen::MatrixXd::Identity(n, n);
  B = 0.5 * (B + B.transpose()).eval();

  auto r = eig::sym_generalized_eig(A, B, n);
  for (int i = 0; i < n; ++i) CHECK(r.residuals[i] <= 1e-10);
  for (int i = 1; i < n; ++i) CHECK(r.eigenvalues[i] >= r.eigenvalues[i - 1]);
  Eigen::MatrixXd ortho = r.eigenvectors.transpose() * B * r.eigenvectors;
  CHECK((ortho - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("congruent pencils share eigenvalues") {
  std::mt19937_64 rng(11);
  const int n = 12;
  Eigen::MatrixXd G = testing::random_matrix(rng, n, n);
  Eigen::MatrixXd A = 0.5 * (G + G.transpose());
  Eigen::MatrixXd B = testing::random_spd(rng, n, 20.0);
  Eigen::MatrixXd P =
      Eigen::MatrixXd::Identity(n, n) + 0.3 * testing::random_matrix(rng, n, n);
  Eigen::MatrixXd A2 = P.transpose() * A * P;
  A2 = 0.5 * (A2 + A2.transpose()).eval();
  Eigen::MatrixXd B2 = P.transpose() * B * P;
  B2 = 0.5 * (B2 + B2.transpose()).eval();

  auto r1 = eig::sym_generalized_eig(A, B, n);
  auto r2 = eig::sym_generalized_eig(A2, B2, n);
  for (int i = 0; i < n; ++i) {
    double scale = std::max(1.0, std::abs(r1.eigenvalues[i]));
    CHECK(std::abs(r1.eigenvalues[i] - r2.eigenvalues[i]) <= 1e-10 * scale);
  }
}

TEST_CASE("NotSPD on an indefinite B") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd B = Eigen::Vector2d(1, -1).asDiagonal();
  CHECK_THROWS_AS(eig::sym_generalized_eig(A, B, 2), eig::NotSPD);
}

TEST_CASE("nullspace basics") {
  Eigen::MatrixXd B(1, 2);
  B << 1, 0;
  Eigen::MatrixXd Z = eig::nullspace(B);
  REQUIRE(Z.cols() == 1);
  CHECK(std::abs(std::abs(Z(1, 0)) - 1.0) <= 1e-14);
  CHECK(std::abs(Z(0, 0)) <= 1e-14);

  Eigen::MatrixXd Z0 = eig::nullspace(Eigen::MatrixXd::Zero(2, 3));
  CHECK(Z0.cols() == 3);
  CHECK((Z0.transpose() * Z0 - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-13);
}

TEST_CASE("nullspace: orthonormal, annihilated, rank+nullity=n") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    int rows = 1 + static_cast<int>(rng() % 6);
    int n = 2 + static_cast<int>(rng() % 10);
    Eigen::MatrixXd B = testing::random_matrix(rng, rows, n);
    if (trial % 3 == 0 && rows >= 2) B.row(rows - 1) = B.row(0);  // force rank deficiency
    Eigen::MatrixXd Z = eig::nullspace(B);
    int rank = eig::svd_rank(B);
    CHECK(rank + Z.cols() == n);
    if (Z.cols() > 0) {
      CHECK((B * Z).norm() <= 1e-12 * std::max(1.0, B.norm()));
      CHECK((Z.transpose() * Z - Eigen::MatrixXd::Identity(Z.cols(), Z.cols())).norm() <= 1e-12);
    }
  }
}

TEST_CASE("sym_solve identity and indefinite diagonal") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd rhs(2);
  rhs << 1, 1;
  CHECK((eig::sym_solve(I, rhs) - rhs).norm() <= 1e-14);

  Eigen::MatrixXd A = Eigen::Vector2d(1, -1).asDiagonal();
  Eigen::VectorXd x = eig::sym_solve(A, rhs);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(-1.0).epsilon(1e-14));

  Eigen::MatrixXd S = Eigen::Vector2d(1, 0).asDiagonal();
  CHECK_THROWS_AS(eig::sym_solve(S, rhs), eig::SingularShift);
}

TEST_CASE("sym_solve residual bound on random indefinite shifts") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 5 + static_cast<int>(rng() % 12);
    Eigen::MatrixXd G = testing::random_matrix(rng, n, n);
    Eigen::MatrixXd A = G.transpose() * G - 0.7 * Eigen::MatrixXd::Identity(n, n);
    A = 0.5 * (A + A.transpose()).eval();
    Eigen::MatrixXd rhs = testing::random_matrix(rng, n, 3);
    Eigen::MatrixXd X = eig::sym_solve(A, rhs);
    CHECK((A * X - rhs).norm() <= 1e-10 * A.norm() * std::max(1.0, X.norm()));
  }
}

TEST_CASE("SymIndefSolver matches sym_solve on indefinite systems") {
  std::mt19937_64 rng(23);
  const int n = 30;
  Eigen::MatrixXd G = testing::random_matrix(rng, n, n);
  Eigen::MatrixXd A = 0.5 * (G + G.transpose());
  Eigen::VectorXd rhs = testing::random_matrix(rng, n, 1);
  eig::SymIndefSolver s(A);
  Eigen::VectorXd x = s.solve(rhs);
  CHECK((A * x - rhs).norm() <= 1e-10 * A.norm() * std::max(1.0, x.norm()));
}

TEST_CASE("BLAS product helpers agree with Eigen") {
  std::mt19937_64 rng(29);
  Eigen::MatrixXd X = testing::random_matrix(rng, 13, 7);
  Eigen::MatrixXd Y = testing::random_matrix(rng, 13, 5);
  CHECK((eig::multiply_at_b(X, Y) - X.transpose() * Y).norm() <= 1e-13);
  Eigen::MatrixXd W = testing::random_matrix(rng, 7, 9);
  CHECK((eig::multiply(X.transpose(), Y) - X.transpose() * Y).norm() <= 1e-13);
  Eigen::MatrixXd S = testing::random_spd(rng, 13);
  Eigen::MatrixXd C = eig::congruence(S, Y);
  CHECK((C - Y.transpose() * S * Y).norm() <= 1e-12 * std::max(1.0, S.norm()));
  CHECK((C - C.transpose()).norm() == 0.0);
  (void)W;
}
