#pragma once

// Experiment drivers: interlacing reports with Richardson error margins,
// plane-wave witness evaluations of the Dirichlet-to-Neumann quadratic
// form, DtN negativity scans, and mesh-refinement convergence studies.

#include "friedlab/mesh.hpp"
#include "friedlab/spectral_framework.hpp"
#include "friedlab/stokes_problems.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace friedlab::lab {

struct NonOrthogonal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentReport {
  std::string domain;
  std::string kind;
  double alpha = 0.0;
  int sides = 0;  // disk_polygon only
  double h = 0.0;          // reported mesh
  double h_companion = 0.0;  // coarser mesh used for the error estimates
  int ndof_reduced = 0;
  int n_max = 0;
  double margin_factor = 5.0;

  std::vector<double> lambda_N;  // n_max + 1 values at h
  std::vector<double> lambda_D;  // n_max values at h
  std::vector<double> lambda_N_companion;
  std::vector<double> lambda_D_companion;

  std::vector<double> gaps;             // gaps[n-1] = lambda_n^D - lambda_{n+1}^N
  std::vector<double> error_estimates;  // conservative two-mesh estimate per gap
  std::vector<bool> per_n_pass;
  bool verdict = false;
  double runtime_seconds = 0.0;
};

// Interlacing experiment at mesh size h. The problem is built at h and at
// the nested companion 2h; tables are reported at h, and each gap must
// exceed margin_factor times its two-mesh error estimate. The estimate is
// |lambda(2h) - lambda(h)| per eigenvalue, an upper bound on the h-level
// error for any convergence order >= 1.
ExperimentReport run_friedlander(mesh::Domain domain, stokes::Kind kind, double alpha,
                                 double h, int n_max, double margin_factor = 5.0,
                                 int sides = 16);

// Recompute the verdict from the stored tables (self-consistency hook).
bool verdict_from_tables(const ExperimentReport& r);

std::string to_csv(const ExperimentReport& r);

struct WitnessResult {
  double lambda = 0.0;
  double value_re = 0.0;  // (N phi, phi) on the complex witness pair
  double value_im = 0.0;  // identically ~0: the discrete operator is real symmetric
  double norm_sq = 0.0;   // Mb norm^2 of the projected trace pair
  double resonance_estimate = 0.0;  // estimated distance of lambda to the Dirichlet spectrum
  double normalized() const { return std::abs(value_re) / norm_sq; }
  std::pair<double, double> value() const { return {value_re, value_im}; }
};

// Quadratic form of the DtN graph at lambda = |omega|^2 on the interpolated
// plane-wave witness (scalar e^{i omega.x} for the Laplacian, e^{i omega.x} b
// for Stokes with b orthogonal to omega). The trace is Mb-orthogonally
// projected onto the admissible (zero-flux) boundary subspace first. The
// continuum value is 0; the normalized discrete value is the refinement
// observable.
WitnessResult witness_rayleigh(const stokes::DiscreteProblem& p, const Eigen::Vector2d& omega,
                               const Eigen::Vector2d& b, double resonance_rtol = 1e-8);

// Edge-quadrature evaluation of the closed-boundary identity
// sum_e (omega . nu_e) |e| = 0.
double boundary_flux_integral(const mesh::Mesh& m, const Eigen::Vector2d& omega);

struct DtnNegativityReport {
  struct Entry {
    double lambda = 0.0;
    bool skipped = false;
    std::string note;
    double min_eigenvalue = 0.0;
    int negative_count = 0;
  };
  std::vector<Entry> entries;
};
DtnNegativityReport dtn_negativity(const stokes::DiscreteProblem& p,
                                   const std::vector<double>& lambdas,
                                   double resonance_rtol = 1e-8);

struct ConvergenceStudy {
  std::vector<double> hs;
  // tables[j][i] = i-th eigenvalue at hs[j]
  std::vector<std::vector<double>> lambda_N, lambda_D;
  // observed order per eigenvalue from successive difference ratios;
  // orders[j][i] uses meshes j, j+1, j+2
  std::vector<std::vector<double>> order_N, order_D;
  // Cauchy-type decrease of successive differences per eigenvalue
  std::vector<bool> cauchy_N, cauchy_D;
};
ConvergenceStudy convergence_study(mesh::Domain domain, stokes::Kind kind, double alpha,
                                   const std::vector<double>& h_list, int n, int sides = 16);

}  // namespace friedlab::lab
