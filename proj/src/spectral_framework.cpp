#include "friedlab/spectral_framework.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace friedlab::spectral {

namespace eig = friedlab::eigsolve;

namespace {

Eigen::MatrixXd exact_symmetrize(const Eigen::MatrixXd& X) {
  return 0.5 * (X + X.transpose());
}

void check_spd(const Eigen::MatrixXd& G, const char* name) {
  Eigen::MatrixXd L = G;
  const int n = static_cast<int>(G.rows());
  if (n == 0) return;
  int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n, L.data(), n);
  if (info != 0)
    throw GramNotPD(std::string(name) + " is not positive definite (dpotrf info=" +
                    std::to_string(info) + ")");
}

Spectrum to_spectrum(eig::DenseSymEigResult&& r) {
  Spectrum s;
  s.eigenvalues = std::move(r.eigenvalues);
  s.eigenvectors = std::move(r.eigenvectors);
  s.residuals = std::move(r.residuals);
  return s;
}

// Mb-orthonormalize the columns of U (assumed independent): returns Q with
// Q^T Mb Q = I and span Q = span U.
Eigen::MatrixXd mb_orthonormalize(const Eigen::MatrixXd& U, const Eigen::MatrixXd& Mb) {
  if (U.cols() == 0) return U;
  Eigen::MatrixXd G = exact_symmetrize(U.transpose() * Mb * U);
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw GramNotPD("mb_orthonormalize: Gram of basis not positive definite");
  // Q = U * R^{-1} with G = R^T R
  Eigen::MatrixXd R = llt.matrixU();
  return R.transpose().triangularView<Eigen::Lower>().solve(U.transpose()).transpose();
}

}  // namespace

FormSystem FormSystem::validated(Eigen::MatrixXd A, Eigen::MatrixXd M, Eigen::MatrixXd J,
                                 Eigen::MatrixXd Mb) {
  if (A.rows() != A.cols()) throw std::invalid_argument("FormSystem: A not square");
  if (M.rows() != A.rows() || M.cols() != A.rows())
    throw std::invalid_argument("FormSystem: M size mismatch");
  if (J.cols() != A.rows()) throw std::invalid_argument("FormSystem: J size mismatch");
  if (Mb.rows() != J.rows() || Mb.cols() != J.rows())
    throw std::invalid_argument("FormSystem: Mb size mismatch");
  if (A.rows() < 1) throw std::invalid_argument("FormSystem: n must be >= 1");
  FormSystem fs;
  fs.A = exact_symmetrize(A);
  fs.M = exact_symmetrize(M);
  fs.J = std::move(J);
  fs.Mb = exact_symmetrize(Mb);
  check_spd(fs.M, "FormSystem: M");
  check_spd(fs.Mb, "FormSystem: Mb");
  return fs;
}

Spectrum neumann_spectrum(const FormSystem& fs, int m) {
  try {
    return to_spectrum(eig::sym_generalized_eig(fs.A, fs.M, m));
  } catch (const eig::NotSPD& e) {
    throw GramNotPD(e.what());
  }
}

Spectrum dirichlet_spectrum(const FormSystem& fs, int m, double rank_rtol) {
  Eigen::MatrixXd Z = eig::nullspace(fs.J, rank_rtol);
  if (Z.cols() == 0) throw EmptyKernel("dirichlet_spectrum: ker J is trivial");
  if (m > Z.cols())
    throw InsufficientEigenvalues("dirichlet_spectrum: m exceeds dim ker J = " +
                                  std::to_string(Z.cols()));
  Eigen::MatrixXd Ad = eig::congruence(fs.A, Z);
  Eigen::MatrixXd Md = eig::congruence(fs.M, Z);
  Spectrum s;
  try {
    s = to_spectrum(eig::sym_generalized_eig(Ad, Md, m));
  } catch (const eig::NotSPD& e) {
    throw GramNotPD(e.what());
  }
  s.eigenvectors = eig::multiply(Z, s.eigenvectors);  // back to V coordinates
  return s;
}

Spectrum robin_spectrum(const FormSystem& fs, double mu, int m) {
  Eigen::MatrixXd Amu = fs.A - mu * exact_symmetrize(fs.J.transpose() * fs.Mb * fs.J);
  try {
    return to_spectrum(eig::sym_generalized_eig(exact_symmetrize(Amu), fs.M, m));
  } catch (const eig::NotSPD& e) {
    throw GramNotPD(e.what());
  }
}

// ---------------------------------------------------------------------------
// DtnOperator

DtnOperator::DtnOperator(const FormSystem& fs, double rank_rtol) : fs_(fs) {
  const int n = fs.n();
  const int k = fs.k();

  if (k == 0) {
    r_ = 0;
    nd_ = n;
    Zd_ = Eigen::MatrixXd::Identity(n, n);
    Qr_.resize(0, 0);
    Qmv_.resize(0, 0);
    lift_.resize(n, 0);
    return;
  }

  // SVD of J: one factorization supplies the boundary range, the minimum-norm
  // lift, and the kernel basis. Kernel threshold: rtol * sigma_max.
  Eigen::MatrixXd work = fs.J;
  const int mn = std::min(k, n);
  Eigen::VectorXd s(mn);
  Eigen::MatrixXd U(k, k), VT(n, n);
  int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'A', k, n, work.data(), k, s.data(),
                            U.data(), k, VT.data(), n);
  if (info != 0)
    throw std::runtime_error("DtnOperator: dgesdd info=" + std::to_string(info));
  const double smax = s.size() > 0 ? s[0] : 0.0;
  r_ = 0;
  for (int i = 0; i < mn; ++i)
    if (s[i] > rank_rtol * smax) ++r_;
  nd_ = n - r_;

  Zd_.resize(n, nd_);
  for (int j = 0; j < nd_; ++j) Zd_.col(j) = VT.row(r_ + j).transpose();

  Eigen::MatrixXd Ur = U.leftCols(r_);
  Eigen::MatrixXd W(n, r_);  // minimum-norm lift of Ur: J W = Ur
  for (int j = 0; j < r_; ++j) W.col(j) = VT.row(j).transpose() / s[j];

  // Mb-orthonormal basis of range(J); transform the lift the same way so
  // J * lift_ = Qr_ still holds.
  Eigen::MatrixXd G = exact_symmetrize(Ur.transpose() * fs.Mb * Ur);
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (r_ > 0 && llt.info() != Eigen::Success)
    throw GramNotPD("DtnOperator: boundary Gram not positive definite");
  if (r_ > 0) {
    Eigen::MatrixXd Rt = llt.matrixU().transpose();  // lower
    Qr_ = Rt.triangularView<Eigen::Lower>().solve(Ur.transpose()).transpose();
    lift_ = Rt.triangularView<Eigen::Lower>().solve(W.transpose()).transpose();
  } else {
    Qr_.resize(k, 0);
    lift_.resize(n, 0);
  }

  // Multivalued directions: Mb-orthogonal complement of range(J).
  const int kc = k - r_;
  if (kc > 0) {
    Eigen::MatrixXd Uc = U.rightCols(kc);
    if (r_ > 0) Uc -= Qr_ * (Qr_.transpose() * (fs.Mb * Uc));
    Qmv_ = mb_orthonormalize(Uc, fs.Mb);
  } else {
    Qmv_.resize(k, 0);
  }
}

void DtnOperator::ensure_pencil() const {
  if (pencil_) return;
  auto p = std::make_unique<Pencil>();
  if (nd_ > 0) {
    Eigen::MatrixXd Ad = eig::congruence(fs_.A, Zd_);
    Eigen::MatrixXd Md = eig::congruence(fs_.M, Zd_);
    eig::DenseSymEigResult r = eig::sym_generalized_eig(Ad, Md, nd_);
    p->theta = std::move(r.eigenvalues);
    p->Y = std::move(r.eigenvectors);
  }
  pencil_ = std::move(p);
}

const Eigen::VectorXd& DtnOperator::dirichlet_eigenvalues() const {
  ensure_pencil();
  return pencil_->theta;
}

const Eigen::MatrixXd& DtnOperator::theta_vecs() const {
  ensure_pencil();
  return pencil_->Y;
}

double DtnOperator::resonance_distance(double lambda) const {
  if (nd_ == 0) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd& th = dirichlet_eigenvalues();
  return (th.array() - lambda).abs().minCoeff();
}

double DtnOperator::spectral_scale(double lambda) const {
  double sc = std::abs(lambda);
  if (nd_ > 0) sc = std::max(sc, dirichlet_eigenvalues().cwiseAbs().maxCoeff());
  return std::max(sc, 1e-300);
}

DtnResult DtnOperator::spectrum(double lambda, double resonance_rtol) const {
  DtnResult out;
  out.shift = lambda;
  out.multivalued_basis = Qmv_;

  if (nd_ > 0) {
    double dist = resonance_distance(lambda);
    double tol = resonance_rtol * spectral_scale(lambda);
    out.resonance_flag = dist <= tol;
    if (out.resonance_flag)
      throw DirichletResonance("dtn_spectrum: shift " + std::to_string(lambda) +
                               " within tolerance of the Dirichlet spectrum (distance " +
                               std::to_string(dist) + ")");
  }
  if (r_ == 0) return out;  // graph has no single-valued part

  // Interior solution operator: u_j = lift_j + Zd c_j, where the Dirichlet
  // block kills the residual of (A - lambda M) u_j against ker J.
  Eigen::MatrixXd Ulam = lift_;
  if (nd_ > 0) {
    Eigen::MatrixXd Slift = eig::multiply(fs_.A, lift_) - lambda * eig::multiply(fs_.M, lift_);
    Eigen::MatrixXd rhs = eig::multiply_at_b(Zd_, Slift);          // nd x r
    Eigen::MatrixXd t = eig::multiply_at_b(theta_vecs(), rhs);     // Md-diagonal coords
    const Eigen::VectorXd& th = dirichlet_eigenvalues();
    for (int i = 0; i < nd_; ++i) t.row(i) /= -(th[i] - lambda);
    Ulam += eig::multiply(Zd_, eig::multiply(theta_vecs(), t));
  }

  Eigen::MatrixXd SU = eig::multiply(fs_.A, Ulam) - lambda * eig::multiply(fs_.M, Ulam);
  Eigen::MatrixXd N = exact_symmetrize(eig::multiply_at_b(Ulam, SU));

  eig::DenseSymEigResult er = eig::sym_eig(N, r_);
  out.eigenvalues = std::move(er.eigenvalues);
  out.residuals = std::move(er.residuals);
  out.eigenvectors = eig::multiply(Qr_, er.eigenvectors);  // boundary coordinates
  return out;
}

Eigen::VectorXd DtnOperator::project_range(const Eigen::VectorXd& phi) const {
  return Qr_.transpose() * (fs_.Mb * phi);
}

double DtnOperator::quadratic_form(const Eigen::VectorXd& phi, double lambda,
                                   double resonance_rtol) const {
  if (r_ == 0) return 0.0;
  if (nd_ > 0) {
    double dist = resonance_distance(lambda);
    if (dist <= resonance_rtol * spectral_scale(lambda))
      throw DirichletResonance("quadratic_form: shift within tolerance of the Dirichlet spectrum");
  }
  Eigen::VectorXd p = project_range(phi);
  Eigen::VectorXd u = lift_ * p;
  if (nd_ > 0) {
    Eigen::VectorXd su = fs_.A * u - lambda * (fs_.M * u);
    Eigen::VectorXd rhs = Zd_.transpose() * su;
    Eigen::VectorXd t = theta_vecs().transpose() * rhs;
    const Eigen::VectorXd& th = dirichlet_eigenvalues();
    for (int i = 0; i < nd_; ++i) t[i] /= -(th[i] - lambda);
    u += Zd_ * (theta_vecs() * t);
  }
  Eigen::VectorXd su = fs_.A * u - lambda * (fs_.M * u);
  return u.dot(su);
}

DtnResult dtn_spectrum(const FormSystem& fs, double lambda, double resonance_rtol) {
  DtnOperator op(fs);
  return op.spectrum(lambda, resonance_rtol);
}

// ---------------------------------------------------------------------------

BirmanSchwingerReport birman_schwinger_check(const FormSystem& fs, double mu, double tol) {
  BirmanSchwingerReport rep;
  DtnOperator dtn(fs);

  Spectrum robin = robin_spectrum(fs, mu, fs.n());
  const double resonance_rtol = 1e-8;

  std::vector<double> sampled_lambdas;
  for (int i = 0; i < robin.size(); ++i) {
    BirmanSchwingerReport::Pairing p;
    p.direction = 'F';
    p.lambda = robin.eigenvalues[i];
    p.mu = mu;
    p.defect = 0.0;
    p.skipped = false;

    const Eigen::VectorXd x = robin.eigenvectors.col(i);
    const Eigen::VectorXd jx = fs.J * x;
    const double trace_norm = std::sqrt(std::max(0.0, jx.dot(fs.Mb * jx)));
    const double x_norm = std::sqrt(std::max(0.0, x.dot(fs.M * x)));

    if (trace_norm <= tol * x_norm) {
      // the Condition (I) exception: eigenvector inside ker J carries no
      // boundary data and pairs with no DtN eigenvalue
      p.skipped = true;
      p.note = "trace-free eigenvector";
    } else if (dtn.kernel_dim() > 0 &&
               dtn.resonance_distance(p.lambda) <=
                   resonance_rtol * dtn.spectral_scale(p.lambda)) {
      p.skipped = true;
      p.note = "lambda resonant with the Dirichlet spectrum";
    } else {
      DtnResult nl = dtn.spectrum(p.lambda, resonance_rtol);
      p.defect = nl.size() == 0 ? std::numeric_limits<double>::infinity()
                                : (nl.eigenvalues.array() - mu).abs().minCoeff();
      sampled_lambdas.push_back(p.lambda);
    }
    if (p.skipped)
      ++rep.n_skipped;
    else {
      ++rep.n_checked;
      rep.max_defect = std::max(rep.max_defect, p.defect);
    }
    rep.pairings.push_back(std::move(p));
  }

  // Reverse direction: each DtN eigenvalue mu' at a sampled lambda must put
  // lambda into the Robin spectrum at mu'.
  std::sort(sampled_lambdas.begin(), sampled_lambdas.end());
  sampled_lambdas.erase(std::unique(sampled_lambdas.begin(), sampled_lambdas.end(),
                                    [](double a, double b) { return std::abs(a - b) < 1e-14; }),
                        sampled_lambdas.end());
  for (double lambda : sampled_lambdas) {
    DtnResult nl = dtn.spectrum(lambda, resonance_rtol);
    for (int i = 0; i < nl.size(); ++i) {
      BirmanSchwingerReport::Pairing p;
      p.direction = 'R';
      p.lambda = lambda;
      p.mu = nl.eigenvalues[i];
      p.skipped = false;
      Spectrum rs = robin_spectrum(fs, p.mu, fs.n());
      p.defect = (rs.eigenvalues.array() - lambda).abs().minCoeff();
      ++rep.n_checked;
      rep.max_defect = std::max(rep.max_defect, p.defect);
      rep.pairings.push_back(std::move(p));
    }
  }
  return rep;
}

RobinSweep robin_sweep(const FormSystem& fs, const std::vector<double>& grid, int m) {
  if (grid.empty()) throw std::invalid_argument("robin_sweep: empty grid");
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] > 0.0) throw std::invalid_argument("robin_sweep: grid values must be <= 0");
    if (i > 0 && !(grid[i] < grid[i - 1]))
      throw std::invalid_argument("robin_sweep: grid must be strictly decreasing");
  }

  RobinSweep sweep;
  sweep.grid = grid;
  for (double mu : grid) sweep.spectra.push_back(robin_spectrum(fs, mu, m));

  try {
    int nd = fs.n() - eig::svd_rank(fs.J);
    if (nd > 0) sweep.limit_reference = dirichlet_spectrum(fs, std::min(m, nd));
  } catch (const EmptyKernel&) {
    // no Dirichlet limit: every Robin path diverges
  }

  const double trace_tol = 1e-8;
  for (size_t g = 0; g + 1 < grid.size(); ++g) {
    const Spectrum& cur = sweep.spectra[g];
    const Spectrum& nxt = sweep.spectra[g + 1];
    for (int idx = 0; idx < m; ++idx) {
      RobinSweep::StepCheck c;
      c.index = idx;
      c.grid_step = static_cast<int>(g);
      c.increment = nxt.eigenvalues[idx] - cur.eigenvalues[idx];
      double scale = std::max({1.0, std::abs(cur.eigenvalues[idx]), std::abs(nxt.eigenvalues[idx])});
      c.monotone_ok = c.increment >= -1e-10 * scale;

      auto trace_ratio = [&](const Spectrum& s) {
        Eigen::VectorXd x = s.eigenvectors.col(idx);
        Eigen::VectorXd jx = fs.J * x;
        double tn = std::sqrt(std::max(0.0, jx.dot(fs.Mb * jx)));
        double xn = std::sqrt(std::max(0.0, x.dot(fs.M * x)));
        return tn / std::max(xn, 1e-300);
      };
      c.strict_required = trace_ratio(cur) > trace_tol && trace_ratio(nxt) > trace_tol;
      c.strict_ok = !c.strict_required || c.increment > 1e-12 * scale;

      sweep.monotone_ok = sweep.monotone_ok && c.monotone_ok;
      sweep.strict_ok = sweep.strict_ok && c.strict_ok;
      sweep.checks.push_back(c);
    }
  }

  for (int idx = 0; idx < sweep.limit_reference.size() && idx < m; ++idx) {
    double ld = sweep.limit_reference.eigenvalues[idx];
    double lt = sweep.spectra.back().eigenvalues[idx];
    sweep.terminal_relative_gap.push_back(std::abs(lt - ld) / std::max(std::abs(ld), 1e-300));
  }
  return sweep;
}

FriedlanderReport friedlander_check(const Spectrum& neumann, const Spectrum& dirichlet,
                                    int n_max, double margin) {
  if (neumann.size() < n_max + 1 || dirichlet.size() < n_max)
    throw InsufficientEigenvalues("friedlander_check: need " + std::to_string(n_max + 1) +
                                  " Neumann and " + std::to_string(n_max) +
                                  " Dirichlet eigenvalues");
  FriedlanderReport rep;
  rep.n_max = n_max;
  rep.margin = margin;
  rep.all_hold = true;
  for (int n = 1; n <= n_max; ++n) {
    double gap = dirichlet.eigenvalues[n - 1] - neumann.eigenvalues[n];
    bool ok = neumann.eigenvalues[n] + margin < dirichlet.eigenvalues[n - 1];
    rep.gaps.push_back(gap);
    rep.holds.push_back(ok);
    rep.all_hold = rep.all_hold && ok;
  }
  return rep;
}

}  // namespace friedlab::spectral
