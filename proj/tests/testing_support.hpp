#pragma once

// Shared helpers for the test suites: random form systems with controlled
// conditioning, and the separation-of-variables eigenvalue lists for the
// unit square.

#include "friedlab/spectral_framework.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <random>
#include <vector>

namespace friedlab::testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::MatrixXd X(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) X(i, j) = U(rng);
  return X;
}

// SPD with condition number <= about cond: Q diag(d) Q^T
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double cond = 50.0) {
  Eigen::MatrixXd G = random_matrix(rng, n, n);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  std::uniform_real_distribution<double> U(1.0, cond);
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = U(rng);
  d[0] = 1.0;
  Eigen::MatrixXd S = Q * d.asDiagonal() * Q.transpose();
  return 0.5 * (S + S.transpose());
}

// Random form system: A = G^T G (PSD), M and Mb random SPD, J dense random.
inline spectral::FormSystem random_form_system(std::mt19937_64& rng, int n, int k) {
  Eigen::MatrixXd G = random_matrix(rng, n, n);
  Eigen::MatrixXd A = G.transpose() * G;
  return spectral::FormSystem::validated(A, random_spd(rng, n), random_matrix(rng, k, n),
                                         random_spd(rng, k));
}

// lambda = pi^2 (m^2 + n^2): Neumann over m, n >= 0, Dirichlet over m, n >= 1.
inline std::vector<double> square_laplacian_closed_form(bool dirichlet, int count) {
  constexpr double pi = 3.14159265358979323846;
  std::vector<double> v;
  const int lo = dirichlet ? 1 : 0;
  for (int m = lo; m <= 40; ++m)
    for (int n = lo; n <= 40; ++n) v.push_back(pi * pi * (m * m + n * n));
  std::sort(v.begin(), v.end());
  v.resize(count);
  return v;
}

}  // namespace friedlab::testing
