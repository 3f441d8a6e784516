#pragma once

// Finite-dimensional form systems and the operators they generate.
//
// A FormSystem (A, M, J, Mb) is the matrix realization of a positive
// symmetric form on V together with the embedding V -> H (Gram M) and a
// trace map V -> K (matrix J, boundary Gram Mb). From it we derive:
//
//   * the Neumann operator        A x = lambda M x
//   * the Dirichlet operator      restricted to ker J
//   * the Robin family            (A - mu J^T Mb J) x = lambda M x
//   * the Dirichlet-to-Neumann    boundary operator of the lambda-shifted
//     graph at shift lambda       form, single-valued on range(J)
//
// plus the cross-checks tying them together: the Birman-Schwinger pairing
// (lambda in spec(A_mu) iff mu in spec(N_lambda)), monotone Robin paths,
// and the mu -> -infinity Dirichlet limit.

#include "friedlab/eigsolve.hpp"

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace friedlab::spectral {

struct GramNotPD : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyKernel : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DirichletResonance : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientEigenvalues : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormSystem {
  Eigen::MatrixXd A;   // symmetric PSD form matrix on V (n x n)
  Eigen::MatrixXd M;   // SPD Gram of V -> H (n x n)
  Eigen::MatrixXd J;   // trace map V -> K (k x n)
  Eigen::MatrixXd Mb;  // SPD Gram of K (k x k)

  int n() const { return static_cast<int>(A.rows()); }
  int k() const { return static_cast<int>(J.rows()); }

  // Symmetrizes A/M/Mb exactly and checks the SPD invariants.
  static FormSystem validated(Eigen::MatrixXd A, Eigen::MatrixXd M, Eigen::MatrixXd J,
                              Eigen::MatrixXd Mb);
};

struct Spectrum {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // V coordinates, M-orthonormal
  Eigen::VectorXd residuals;
  int size() const { return static_cast<int>(eigenvalues.size()); }
};

struct DtnResult {
  double shift = 0.0;
  Eigen::VectorXd eigenvalues;        // ascending
  Eigen::MatrixXd eigenvectors;       // boundary coordinates, Mb-orthonormal
  Eigen::VectorXd residuals;
  Eigen::MatrixXd multivalued_basis;  // Mb-orthonormal complement of range(J)
  bool resonance_flag = false;        // shift within tolerance of the Dirichlet spectrum
  int size() const { return static_cast<int>(eigenvalues.size()); }
};

struct RobinSweep {
  std::vector<double> grid;  // strictly decreasing, all <= 0
  std::vector<Spectrum> spectra;
  Spectrum limit_reference;  // Dirichlet spectrum (empty if ker J = 0)

  struct StepCheck {
    int index;        // eigenvalue index (0-based)
    int grid_step;    // between grid[grid_step] and grid[grid_step+1]
    double increment; // lambda(next) - lambda(current); >= 0 expected
    bool strict_required;
    bool monotone_ok;
    bool strict_ok;
  };
  std::vector<StepCheck> checks;
  std::vector<double> terminal_relative_gap;  // |lambda(mu_last) - lambda_D| / |lambda_D|
  bool monotone_ok = true;
  bool strict_ok = true;
};

struct BirmanSchwingerReport {
  struct Pairing {
    char direction;  // 'F': A_mu eigenvalue -> DtN; 'R': DtN eigenvalue -> Robin
    double lambda;
    double mu;
    double defect;
    bool skipped;
    std::string note;
  };
  std::vector<Pairing> pairings;
  double max_defect = 0.0;  // over checked pairings
  int n_checked = 0;
  int n_skipped = 0;
};

struct FriedlanderReport {
  int n_max = 0;
  double margin = 0.0;
  std::vector<double> gaps;  // gaps[n-1] = lambda_n^D - lambda_{n+1}^N
  std::vector<bool> holds;
  bool all_hold = false;
};

Spectrum neumann_spectrum(const FormSystem& fs, int m);
Spectrum dirichlet_spectrum(const FormSystem& fs, int m, double rank_rtol = 1e-12);
Spectrum robin_spectrum(const FormSystem& fs, double mu, int m);
DtnResult dtn_spectrum(const FormSystem& fs, double lambda, double resonance_rtol = 1e-8);
BirmanSchwingerReport birman_schwinger_check(const FormSystem& fs, double mu, double tol);
RobinSweep robin_sweep(const FormSystem& fs, const std::vector<double>& grid, int m);
FriedlanderReport friedlander_check(const Spectrum& neumann, const Spectrum& dirichlet,
                                    int n_max, double margin);

// Reusable Dirichlet-to-Neumann machinery for one FormSystem. The boundary
// split (range of J, its Mb-orthogonal complement, lift and kernel bases)
// is computed once from an SVD of J; the Dirichlet pencil on ker J is
// eigendecomposed once and shared by every shift.
class DtnOperator {
 public:
  explicit DtnOperator(const FormSystem& fs, double rank_rtol = 1e-12);

  int boundary_rank() const { return r_; }
  int kernel_dim() const { return nd_; }
  const Eigen::MatrixXd& range_basis() const { return Qr_; }          // k x r
  const Eigen::MatrixXd& multivalued_basis() const { return Qmv_; }   // k x (k-r)
  const Eigen::VectorXd& dirichlet_eigenvalues() const;

  // min |theta_i - lambda| over the Dirichlet spectrum (infinity if ker J = 0)
  double resonance_distance(double lambda) const;
  double spectral_scale(double lambda) const;

  DtnResult spectrum(double lambda, double resonance_rtol = 1e-8) const;

  // Mb-orthogonal projection of a boundary vector onto range(J), returned
  // as coefficients in the Mb-orthonormal range basis.
  Eigen::VectorXd project_range(const Eigen::VectorXd& phi_boundary) const;

  // (N_lambda phi, phi) for phi given in boundary coordinates (projected
  // onto range(J) first). Throws DirichletResonance near the spectrum.
  double quadratic_form(const Eigen::VectorXd& phi_boundary, double lambda,
                        double resonance_rtol = 1e-8) const;

 private:
  const Eigen::MatrixXd& theta_vecs() const;
  void ensure_pencil() const;

  const FormSystem& fs_;
  int r_ = 0;   // rank of J
  int nd_ = 0;  // dim ker J
  Eigen::MatrixXd Qr_;    // Mb-orthonormal basis of range(J)
  Eigen::MatrixXd Qmv_;   // Mb-orthonormal basis of the complement
  Eigen::MatrixXd lift_;  // n x r, J * lift = Qr
  Eigen::MatrixXd Zd_;    // n x nd, orthonormal basis of ker J

  struct Pencil {
    Eigen::VectorXd theta;  // Dirichlet eigenvalues, ascending
    Eigen::MatrixXd Y;      // Md-orthonormal eigenvectors (ker J coordinates)
  };
  mutable std::unique_ptr<Pencil> pencil_;
};

}  // namespace friedlab::spectral
