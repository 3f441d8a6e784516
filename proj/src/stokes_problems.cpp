#include "friedlab/stokes_problems.hpp"

#include <lapacke.h>

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace friedlab::stokes {

namespace eig = friedlab::eigsolve;

namespace {

Eigen::MatrixXd reduce_congruence(const fem::SpMat& S, const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd T = S * Z;
  Eigen::MatrixXd R = eig::multiply_at_b(Z, T);
  return 0.5 * (R + R.transpose());
}

Eigen::MatrixXd rows_at(const Eigen::MatrixXd& Z, const std::vector<int>& idx) {
  Eigen::MatrixXd R(idx.size(), Z.cols());
  for (size_t i = 0; i < idx.size(); ++i) R.row(static_cast<int>(i)) = Z.row(idx[i]);
  return R;
}

}  // namespace

std::string kind_name(Kind k) { return k == Kind::laplacian ? "laplacian" : "stokes"; }

Kind kind_from_name(const std::string& s) {
  if (s == "laplacian") return Kind::laplacian;
  if (s == "stokes") return Kind::stokes;
  throw std::invalid_argument("unknown kind: " + s);
}

std::string bc_name(Bc b) { return b == Bc::neumann ? "neumann" : "dirichlet"; }

Bc bc_from_name(const std::string& s) {
  if (s == "neumann") return Bc::neumann;
  if (s == "dirichlet") return Bc::dirichlet;
  throw std::invalid_argument("unknown bc: " + s);
}

struct DiscreteProblem::Reduction {
  std::once_flag once;
  Eigen::MatrixXd Z;  // empty for laplacian (identity map)
  spectral::FormSystem fs;
  int trace_rank = 0;
};

fem::SpMat DiscreteProblem::form_matrix() const {
  if (kind == Kind::laplacian || alpha == 0.0) return K;
  fem::SpMat S = K + alpha * Kt;
  S.makeCompressed();
  return S;
}

void DiscreteProblem::ensure_reduction() const {
  std::call_once(red_->once, [this]() {
    Reduction& r = *red_;
    if (kind == Kind::laplacian) {
      r.fs = spectral::FormSystem::validated(Eigen::MatrixXd(K), Eigen::MatrixXd(M),
                                             Eigen::MatrixXd(Jsel), Mb);
      r.trace_rank = n_boundary();
      return;
    }
    // divergence-free reduction
    r.Z = eig::nullspace(Eigen::MatrixXd(B), 1e-12);
    const double bz = Eigen::MatrixXd(B * r.Z).norm();
    if (bz > 1e-10 * std::max(1.0, Eigen::MatrixXd(B).norm()))
      throw std::runtime_error("build_stokes: ||B Z|| too large: " + std::to_string(bz));

    fem::SpMat S = form_matrix();
    Eigen::MatrixXd A = reduce_congruence(S, r.Z);
    Eigen::MatrixXd Mred = reduce_congruence(M, r.Z);
    Eigen::MatrixXd Jred = rows_at(r.Z, velocity.boundary_dofs);
    r.fs = spectral::FormSystem::validated(std::move(A), std::move(Mred), std::move(Jred), Mb);

    // discrete trace-range identity: traces of divergence-free fields span
    // exactly the zero-flux boundary subspace
    r.trace_rank = eig::svd_rank(r.fs.J, 1e-12);
    const int k = n_boundary();
    if (r.trace_rank != k - 1)
      throw std::runtime_error("build_stokes: rank(J Z) = " + std::to_string(r.trace_rank) +
                               ", expected k - 1 = " + std::to_string(k - 1));
  });
}

const spectral::FormSystem& DiscreteProblem::form_system() const {
  ensure_reduction();
  return red_->fs;
}

int DiscreteProblem::n_reduced() const {
  ensure_reduction();
  return kind == Kind::laplacian ? n_full() : static_cast<int>(red_->Z.cols());
}

int DiscreteProblem::trace_rank() const {
  ensure_reduction();
  return red_->trace_rank;
}

Eigen::VectorXd DiscreteProblem::to_fem(const Eigen::VectorXd& x) const {
  ensure_reduction();
  if (kind == Kind::laplacian) return x;
  return red_->Z * x;
}

namespace {

DiscreteProblem build_vector_problem(const mesh::Mesh& m, double alpha, fem::DofKind vkind) {
  if (!(alpha > -1.0 && alpha <= 1.0))
    throw BadAlpha("build_stokes: alpha must lie in (-1, 1]");
  DiscreteProblem p;
  p.kind = Kind::stokes;
  p.alpha = alpha;
  p.domain_mesh = m;
  p.velocity = fem::make_dofmap(m, vkind);
  p.pressure = fem::make_dofmap(m, fem::DofKind::P1_scalar);
  p.K = fem::stiffness(m, p.velocity);
  p.Kt = fem::transpose_gradient_form(m, p.velocity);
  p.M = fem::mass(m, p.velocity);
  p.B = fem::divergence(m, p.velocity, p.pressure);
  fem::BoundaryOperators bo = fem::boundary_mass_and_trace(m, p.velocity);
  p.Jsel = std::move(bo.J);
  p.Mb = Eigen::MatrixXd(bo.Mb);
  p.nu_flux = std::move(bo.nu_flux);
  return p;
}

}  // namespace

DiscreteProblem build_laplacian(const mesh::Mesh& m) {
  DiscreteProblem p;
  p.kind = Kind::laplacian;
  p.alpha = 0.0;
  p.domain_mesh = m;
  p.velocity = fem::make_dofmap(m, fem::DofKind::P2_scalar);
  p.K = fem::stiffness(m, p.velocity);
  p.M = fem::mass(m, p.velocity);
  fem::BoundaryOperators bo = fem::boundary_mass_and_trace(m, p.velocity);
  p.Jsel = std::move(bo.J);
  p.Mb = Eigen::MatrixXd(bo.Mb);
  p.red_ = std::make_shared<DiscreteProblem::Reduction>();
  return p;
}

DiscreteProblem build_stokes(const mesh::Mesh& m, double alpha) {
  DiscreteProblem p = build_vector_problem(m, alpha, fem::DofKind::P2_vector2);
  p.red_ = std::make_shared<DiscreteProblem::Reduction>();
  return p;
}

DiscreteProblem build_stokes_oracle_mini(const mesh::Mesh& m, double alpha) {
  DiscreteProblem p = build_vector_problem(m, alpha, fem::DofKind::P1b_vector2);
  p.red_ = std::make_shared<DiscreteProblem::Reduction>();
  return p;
}

spectral::Spectrum solve_spectrum(const DiscreteProblem& p, Bc bc, int m) {
  const spectral::FormSystem& fs = p.form_system();
  return bc == Bc::neumann ? spectral::neumann_spectrum(fs, m)
                           : spectral::dirichlet_spectrum(fs, m);
}

Eigen::VectorXd recover_pressure(const DiscreteProblem& p, const Eigen::VectorXd& u_fem,
                                 double lambda, Bc bc) {
  if (p.kind != Kind::stokes)
    throw std::invalid_argument("recover_pressure: stokes problems only");
  const int n_p = p.pressure.n_dofs();

  Eigen::VectorXd r = p.form_matrix() * u_fem - lambda * (p.M * u_fem);

  std::vector<int> rows;
  if (bc == Bc::dirichlet) {
    std::vector<char> is_bd(p.n_full(), 0);
    for (int d : p.velocity.boundary_dofs) is_bd[d] = 1;
    for (int i = 0; i < p.n_full(); ++i)
      if (!is_bd[i]) rows.push_back(i);
  } else {
    rows.resize(p.n_full());
    for (int i = 0; i < p.n_full(); ++i) rows[i] = i;
  }

  Eigen::MatrixXd Bt = Eigen::MatrixXd(p.B).transpose();
  Eigen::MatrixXd S(rows.size(), n_p);
  Eigen::VectorXd d(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    S.row(static_cast<int>(i)) = Bt.row(rows[i]);
    d[static_cast<int>(i)] = -r[rows[i]];
  }

  // min-norm least squares; rcond cuts the constant gauge mode (Dirichlet)
  const int nr = static_cast<int>(rows.size());
  Eigen::VectorXd sv(std::min(nr, n_p));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(std::max(nr, n_p));
  rhs.head(nr) = d;
  int rank = 0;
  int info = LAPACKE_dgelsd(LAPACK_COL_MAJOR, nr, n_p, 1, S.data(), nr, rhs.data(),
                            std::max(nr, n_p), sv.data(), 1e-10, &rank);
  if (info != 0) throw std::runtime_error("recover_pressure: dgelsd info=" + std::to_string(info));
  if (rank >= 1) {
    double cond = sv[0] / sv[rank - 1];
    if (cond * cond > 1e12)
      throw IllConditioned("recover_pressure: normal-equations condition " +
                           std::to_string(cond * cond));
  }
  Eigen::VectorXd pi = rhs.head(n_p);

  if (bc == Bc::dirichlet) {
    // zero-mean gauge
    Eigen::VectorXd load = fem::unit_load(p.domain_mesh, p.pressure);
    double a = load.sum();  // total area
    pi.array() -= load.dot(pi) / a;
  }
  return pi;
}

Eigen::VectorXd weak_normal_derivative(const DiscreteProblem& p, const Eigen::VectorXd& u_fem,
                                       const Eigen::VectorXd& pi, const Eigen::VectorXd& f_fem) {
  if (p.kind != Kind::stokes)
    throw std::invalid_argument("weak_normal_derivative: stokes problems only");
  Eigen::VectorXd g = p.form_matrix() * u_fem - p.B.transpose() * pi - p.M * f_fem;
  Eigen::VectorXd gb = p.Jsel * g;
  return p.Mb.llt().solve(gb);
}

namespace {

// shared scaffolding for the two Helmholtz projections
struct HelmholtzSetup {
  fem::DofMap dv, dp;
  Eigen::MatrixXd X;  // M^{-1} C, gradient representatives in the vector space
  Eigen::MatrixXd G;  // C^T M^{-1} C
  fem::SpMat C;
};

HelmholtzSetup helmholtz_setup(const mesh::Mesh& m) {
  HelmholtzSetup s;
  s.dv = fem::make_dofmap(m, fem::DofKind::P2_vector2);
  s.dp = fem::make_dofmap(m, fem::DofKind::P2_scalar);
  fem::SpMat M = fem::mass(m, s.dv);
  s.C = fem::gradient_coupling(m, s.dv, s.dp);
  Eigen::SimplicialLLT<fem::SpMat> llt(M);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("helmholtz: mass Cholesky failed");
  s.X = llt.solve(Eigen::MatrixXd(s.C));
  s.G = eig::multiply_at_b(Eigen::MatrixXd(s.C), s.X);
  s.G = 0.5 * (s.G + s.G.transpose()).eval();
  return s;
}

}  // namespace

Eigen::VectorXd helmholtz_project_sigma(const mesh::Mesh& m, const Eigen::VectorXd& f) {
  HelmholtzSetup s = helmholtz_setup(m);
  const int n_s = s.dp.n_dofs();
  if (f.size() != s.dv.n_dofs())
    throw std::invalid_argument("helmholtz_project_sigma: size mismatch");
  // gauge: pressures up to constants; pin the mean with a multiplier row
  Eigen::VectorXd load = fem::unit_load(m, s.dp);
  Eigen::MatrixXd Aug = Eigen::MatrixXd::Zero(n_s + 1, n_s + 1);
  Aug.topLeftCorner(n_s, n_s) = s.G;
  Aug.topRightCorner(n_s, 1) = load;
  Aug.bottomLeftCorner(1, n_s) = load.transpose();
  eig::SymIndefSolver solver(Aug);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_s + 1);
  rhs.head(n_s) = s.C.transpose() * f;
  Eigen::VectorXd sol = solver.solve(rhs);
  return f - s.X * sol.head(n_s);
}

Eigen::VectorXd helmholtz_project_v(const mesh::Mesh& m, const Eigen::VectorXd& f) {
  HelmholtzSetup s = helmholtz_setup(m);
  if (f.size() != s.dv.n_dofs())
    throw std::invalid_argument("helmholtz_project_v: size mismatch");
  // interior pressure dofs only (zero boundary values)
  std::vector<char> is_bd(s.dp.n_dofs(), 0);
  for (int d : s.dp.boundary_dofs) is_bd[d] = 1;
  std::vector<int> interior;
  for (int i = 0; i < s.dp.n_dofs(); ++i)
    if (!is_bd[i]) interior.push_back(i);
  const int ni = static_cast<int>(interior.size());

  Eigen::MatrixXd G0(ni, ni);
  for (int a = 0; a < ni; ++a)
    for (int b = 0; b < ni; ++b) G0(a, b) = s.G(interior[a], interior[b]);
  Eigen::VectorXd rhs(ni);
  Eigen::VectorXd cf = s.C.transpose() * f;
  for (int a = 0; a < ni; ++a) rhs[a] = cf[interior[a]];

  Eigen::LLT<Eigen::MatrixXd> llt(G0);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("helmholtz_project_v: interior Gram not SPD");
  Eigen::VectorXd pi0 = llt.solve(rhs);

  Eigen::VectorXd result = f;
  for (int a = 0; a < ni; ++a) result -= pi0[a] * s.X.col(interior[a]);
  return result;
}

Eigen::VectorXd divergence_free_extension(const DiscreteProblem& p, const Eigen::VectorXd& phi) {
  if (p.kind != Kind::stokes)
    throw std::invalid_argument("divergence_free_extension: stokes problems only");
  const int k = p.n_boundary();
  if (phi.size() != k) throw std::invalid_argument("divergence_free_extension: trace size mismatch");

  const double flux = p.nu_flux.dot(phi);
  const double phi_norm = std::sqrt(std::max(0.0, phi.dot(p.Mb * phi)));
  if (std::abs(flux) > 1e-8 * std::max(phi_norm, 1e-300))
    throw FluxNotZero("divergence_free_extension: trace carries net normal flux " +
                      std::to_string(flux));

  const int N = p.n_full();
  const int n_p = p.pressure.n_dofs();
  Eigen::MatrixXd C(k + n_p, N);
  C.topRows(k) = Eigen::MatrixXd(p.Jsel);
  C.bottomRows(n_p) = Eigen::MatrixXd(p.B);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(k + n_p);
  d.head(k) = phi;

  // min u^T H u subject to C u = d, H = K + M (the H1 Gram);
  // C is rank-deficient by one (net-flux compatibility), handled by a
  // pseudo-inverse of the multiplier Gram.
  Eigen::MatrixXd H = Eigen::MatrixXd(p.K) + Eigen::MatrixXd(p.M);
  eig::SymIndefSolver hs(H);
  Eigen::MatrixXd Y = hs.solve(Eigen::MatrixXd(C.transpose()));  // H^{ -1} C^T
  Eigen::MatrixXd S = eig::multiply(C, Y);
  S = 0.5 * (S + S.transpose()).eval();

  eig::DenseSymEigResult es = eig::sym_eig(S, static_cast<int>(S.rows()));
  const double emax = es.eigenvalues.cwiseAbs().maxCoeff();
  Eigen::VectorXd t = es.eigenvectors.transpose() * d;
  for (int i = 0; i < es.eigenvalues.size(); ++i) {
    if (std::abs(es.eigenvalues[i]) > 1e-12 * emax)
      t[i] /= es.eigenvalues[i];
    else
      t[i] = 0.0;
  }
  Eigen::VectorXd mu = es.eigenvectors * t;
  return Y * mu;
}

StokesEigenfunction eigenfunction(const DiscreteProblem& p, const spectral::Spectrum& s,
                                  int index, Bc bc) {
  StokesEigenfunction ef;
  ef.lambda = s.eigenvalues[index];
  ef.u = p.to_fem(s.eigenvectors.col(index));
  if (p.kind != Kind::stokes) return ef;

  ef.pi = recover_pressure(p, ef.u, ef.lambda, bc);
  Eigen::VectorXd r = p.form_matrix() * ef.u - ef.lambda * (p.M * ef.u) + p.B.transpose() * ef.pi;
  double scale = (p.form_matrix() * ef.u).norm() + std::abs(ef.lambda) * (p.M * ef.u).norm();
  if (bc == Bc::dirichlet) {
    std::vector<char> is_bd(p.n_full(), 0);
    for (int dd : p.velocity.boundary_dofs) is_bd[dd] = 1;
    double acc = 0.0;
    for (int i = 0; i < p.n_full(); ++i)
      if (!is_bd[i]) acc += r[i] * r[i];
    ef.residual_momentum = std::sqrt(acc) / std::max(scale, 1e-300);
  } else {
    ef.residual_momentum = r.norm() / std::max(scale, 1e-300);
  }
  ef.residual_divergence = (p.B * ef.u).norm() / std::max(ef.u.norm(), 1e-300);
  if (bc == Bc::neumann) {
    Eigen::VectorXd F = weak_normal_derivative(p, ef.u, ef.pi, ef.lambda * ef.u);
    ef.residual_natural = std::sqrt(std::max(0.0, F.dot(p.Mb * F)));
  }
  return ef;
}

}  // namespace friedlab::stokes
