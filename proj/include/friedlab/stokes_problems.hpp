#pragma once

// Concrete problem builders: the scalar Laplacian on H^1 and the Stokes
// operator on divergence-free vector fields, both reduced to FormSystems so
// the whole spectral framework applies verbatim. The divergence constraint
// is enforced by explicit nullspace reduction (never a saddle-point
// eigensolve), which keeps the reduced Gram SPD and rules out spurious
// pressure modes.
//
// Companion operations: pressure recovery from the mixed residual, the weak
// normal derivative (conormal data of (u, pi)), the two Helmholtz
// projections, and a minimum-H1-norm divergence-free extension of boundary
// traces.

#include "friedlab/fem_assembly.hpp"
#include "friedlab/mesh.hpp"
#include "friedlab/spectral_framework.hpp"

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>

namespace friedlab::stokes {

struct BadAlpha : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IllConditioned : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FluxNotZero : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Kind { laplacian, stokes };
enum class Bc { neumann, dirichlet };

std::string kind_name(Kind k);
Kind kind_from_name(const std::string& s);
std::string bc_name(Bc b);
Bc bc_from_name(const std::string& s);

class DiscreteProblem {
 public:
  Kind kind = Kind::laplacian;
  double alpha = 0.0;
  mesh::Mesh domain_mesh;
  fem::DofMap velocity;  // P2 scalar (laplacian), P2 or P1+bubble vector (stokes)
  fem::DofMap pressure;  // P1 scalar, stokes only

  fem::SpMat K;    // gradient form on the velocity space
  fem::SpMat Kt;   // transposed-Jacobian form (vector spaces only)
  fem::SpMat M;    // velocity mass
  fem::SpMat B;    // divergence coupling (stokes only)
  fem::SpMat Jsel; // boundary trace selection
  Eigen::MatrixXd Mb;
  Eigen::VectorXd nu_flux;  // empty for laplacian

  int n_full() const { return velocity.n_dofs(); }
  int n_boundary() const { return static_cast<int>(velocity.boundary_dofs.size()); }

  // Reduced form system in constrained coordinates; built lazily (the
  // reduction is the expensive part and some workflows never need it).
  const spectral::FormSystem& form_system() const;
  // Constrained-coordinate -> FEM-coefficient map (identity for laplacian).
  Eigen::VectorXd to_fem(const Eigen::VectorXd& x_reduced) const;
  int n_reduced() const;
  // rank of the reduced trace map J*Z (stokes: asserted equal to k-1)
  int trace_rank() const;

  // combined velocity form K + alpha Kt as used by this problem
  fem::SpMat form_matrix() const;

 private:
  friend DiscreteProblem build_laplacian(const mesh::Mesh&);
  friend DiscreteProblem build_stokes(const mesh::Mesh&, double);
  friend DiscreteProblem build_stokes_oracle_mini(const mesh::Mesh&, double);

  struct Reduction;
  std::shared_ptr<Reduction> red_;  // lazy cache, shared across copies
  void ensure_reduction() const;
};

DiscreteProblem build_laplacian(const mesh::Mesh& m);
DiscreteProblem build_stokes(const mesh::Mesh& m, double alpha);
// Independent cross-discretization oracle: P1+cell-bubble velocity, P1
// pressure. Same contract as build_stokes.
DiscreteProblem build_stokes_oracle_mini(const mesh::Mesh& m, double alpha);

spectral::Spectrum solve_spectrum(const DiscreteProblem& p, Bc bc, int m);

// Least-squares P1 pressure from the mixed residual (K + alpha Kt) u -
// lambda M u = -B^T pi, tested against the full (Neumann) or interior
// (Dirichlet) velocity space. Dirichlet pressures are normalized to zero
// mean; Neumann pressures are left ungauged.
Eigen::VectorXd recover_pressure(const DiscreteProblem& p, const Eigen::VectorXd& u_fem,
                                 double lambda, Bc bc);

// Mb-Riesz representation of Phi -> a(u, Phi) - (pi, div Phi) - (f, Phi)
// on boundary-nodal test fields; approximates the conormal data of (u, pi).
Eigen::VectorXd weak_normal_derivative(const DiscreteProblem& p, const Eigen::VectorXd& u_fem,
                                       const Eigen::VectorXd& pi, const Eigen::VectorXd& f_fem);

// M-orthogonal projection complements of the discrete gradient ranges:
// sigma removes gradients of H^1 pressures, v removes gradients of H^1_0
// pressures.
Eigen::VectorXd helmholtz_project_sigma(const mesh::Mesh& m, const Eigen::VectorXd& f);
Eigen::VectorXd helmholtz_project_v(const mesh::Mesh& m, const Eigen::VectorXd& f);

// Minimum-H1-norm u with J u = phi and B u = 0. Requires the trace to
// carry no net normal flux.
Eigen::VectorXd divergence_free_extension(const DiscreteProblem& p, const Eigen::VectorXd& phi);

struct StokesEigenfunction {
  double lambda = 0.0;
  Eigen::VectorXd u;   // FEM velocity coefficients
  Eigen::VectorXd pi;  // P1 pressure coefficients
  double residual_momentum = 0.0;
  double residual_divergence = 0.0;
  double residual_natural = 0.0;  // ||weak normal derivative||_Mb (Neumann)
};
StokesEigenfunction eigenfunction(const DiscreteProblem& p, const spectral::Spectrum& s,
                                  int index, Bc bc);

}  // namespace friedlab::stokes
