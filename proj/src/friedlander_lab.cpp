#include "friedlab/friedlander_lab.hpp"

#include "friedlab/eigsolve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace friedlab::lab {

namespace eig = friedlab::eigsolve;

namespace {

stokes::DiscreteProblem build_problem(const mesh::Mesh& m, stokes::Kind kind, double alpha) {
  return kind == stokes::Kind::laplacian ? stokes::build_laplacian(m)
                                         : stokes::build_stokes(m, alpha);
}

}  // namespace

ExperimentReport run_friedlander(mesh::Domain domain, stokes::Kind kind, double alpha,
                                 double h, int n_max, double margin_factor, int sides) {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport r;
  r.domain = mesh::domain_name(domain);
  r.kind = stokes::kind_name(kind);
  r.alpha = kind == stokes::Kind::laplacian ? 0.0 : alpha;
  r.sides = domain == mesh::Domain::disk_polygon ? sides : 0;
  r.h = h;
  r.h_companion = 2.0 * h;
  r.n_max = n_max;
  r.margin_factor = margin_factor;

  mesh::Mesh mesh_h = mesh::generate(domain, h, sides);
  mesh::Mesh mesh_c = mesh::generate(domain, 2.0 * h, sides);
  stokes::DiscreteProblem ph = build_problem(mesh_h, kind, alpha);
  stokes::DiscreteProblem pc = build_problem(mesh_c, kind, alpha);

  spectral::Spectrum nh = stokes::solve_spectrum(ph, stokes::Bc::neumann, n_max + 1);
  spectral::Spectrum dh = stokes::solve_spectrum(ph, stokes::Bc::dirichlet, n_max);
  spectral::Spectrum nc = stokes::solve_spectrum(pc, stokes::Bc::neumann, n_max + 1);
  spectral::Spectrum dc = stokes::solve_spectrum(pc, stokes::Bc::dirichlet, n_max);

  r.ndof_reduced = ph.n_reduced();
  auto to_vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  r.lambda_N = to_vec(nh.eigenvalues);
  r.lambda_D = to_vec(dh.eigenvalues);
  r.lambda_N_companion = to_vec(nc.eigenvalues);
  r.lambda_D_companion = to_vec(dc.eigenvalues);

  for (int n = 1; n <= n_max; ++n) {
    double gap = r.lambda_D[n - 1] - r.lambda_N[n];
    double err = std::abs(r.lambda_D_companion[n - 1] - r.lambda_D[n - 1]) +
                 std::abs(r.lambda_N_companion[n] - r.lambda_N[n]);
    r.gaps.push_back(gap);
    r.error_estimates.push_back(err);
    r.per_n_pass.push_back(gap > margin_factor * err && gap > 0.0);
  }
  r.verdict = std::all_of(r.per_n_pass.begin(), r.per_n_pass.end(), [](bool b) { return b; });
  r.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

bool verdict_from_tables(const ExperimentReport& r) {
  for (int n = 1; n <= r.n_max; ++n) {
    double gap = r.lambda_D[n - 1] - r.lambda_N[n];
    double err = std::abs(r.lambda_D_companion[n - 1] - r.lambda_D[n - 1]) +
                 std::abs(r.lambda_N_companion[n] - r.lambda_N[n]);
    if (!(gap > r.margin_factor * err && gap > 0.0)) return false;
  }
  return true;
}

std::string to_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << "index,lambda_N,lambda_D,gap,error_estimate\n";
  os.precision(17);
  for (int n = 1; n <= r.n_max; ++n) {
    os << n << ',' << r.lambda_N[n - 1] << ',' << r.lambda_D[n - 1] << ',' << r.gaps[n - 1]
       << ',' << r.error_estimates[n - 1] << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Witness evaluation.
//
// The trace of the interpolated plane wave is prescribed on the boundary
// dofs; interior dofs (plus the pressure multiplier for Stokes) solve the
// lambda-shifted interior problem, which realizes the DtN lift without ever
// forming the reduced system. The quadratic form is then b_lambda(u, u).

namespace {

struct KktSolve {
  Eigen::VectorXd u_full;  // FEM velocity coefficients with the given trace
};

class WitnessSolver {
 public:
  WitnessSolver(const stokes::DiscreteProblem& p, double lambda)
      : p_(p), lambda_(lambda) {
    const int N = p.n_full();
    is_bd_.assign(N, 0);
    for (int d : p.velocity.boundary_dofs) is_bd_[d] = 1;
    for (int i = 0; i < N; ++i)
      if (!is_bd_[i]) interior_.push_back(i);
    pos_.assign(N, -1);
    for (size_t i = 0; i < interior_.size(); ++i) pos_[interior_[i]] = static_cast<int>(i);

    S_ = p.form_matrix() - lambda * p.M;
    S_.makeCompressed();

    const int ni = static_cast<int>(interior_.size());
    const bool with_pressure = p.kind == stokes::Kind::stokes;
    const int n_p = with_pressure ? p.pressure.n_dofs() : 0;
    const int dim = ni + n_p + (with_pressure ? 1 : 0);

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    for (int col = 0; col < S_.outerSize(); ++col)
      for (fem::SpMat::InnerIterator it(S_, col); it; ++it) {
        int i = pos_[it.row()], j = pos_[col];
        if (i >= 0 && j >= 0) A(i, j) = it.value();
      }
    if (with_pressure) {
      for (int col = 0; col < p.B.outerSize(); ++col)
        for (fem::SpMat::InnerIterator it(p.B, col); it; ++it) {
          int j = pos_[col];
          if (j >= 0) {
            A(ni + it.row(), j) = it.value();
            A(j, ni + it.row()) = it.value();
          }
        }
      // pressure gauge row (the constraint stack loses exactly one rank to
      // the net-flux compatibility relation)
      Eigen::VectorXd load = fem::unit_load(p.domain_mesh, p.pressure);
      for (int q = 0; q < n_p; ++q) {
        A(ni + n_p, ni + q) = load[q];
        A(ni + q, ni + n_p) = load[q];
      }
    }
    solver_ = std::make_unique<eig::SymIndefSolver>(A);
    ni_ = ni;
    n_p_ = n_p;
    dim_ = dim;
  }

  KktSolve solve_with_trace(const Eigen::VectorXd& phi) const {
    const int N = p_.n_full();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(N);
    for (int i = 0; i < p_.n_boundary(); ++i) w[p_.velocity.boundary_dofs[i]] = phi[i];

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim_);
    Eigen::VectorXd sw = S_ * w;
    for (int i = 0; i < ni_; ++i) rhs[i] = -sw[interior_[i]];
    if (n_p_ > 0) {
      Eigen::VectorXd bw = p_.B * w;
      for (int q = 0; q < n_p_; ++q) rhs[ni_ + q] = -bw[q];
    }
    Eigen::VectorXd sol = solver_->solve(rhs);

    KktSolve out;
    out.u_full = w;
    for (int i = 0; i < ni_; ++i) out.u_full[interior_[i]] += sol[i];
    return out;
  }

  double quadratic_form(const Eigen::VectorXd& u) const { return u.dot(S_ * u); }

  // inverse-power estimate of min |theta - lambda| over the constrained
  // Dirichlet pencil, using the factored interior operator
  double resonance_estimate(int iters = 40) const {
    std::mt19937_64 rng(20240517);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd v(ni_);
    for (int i = 0; i < ni_; ++i) v[i] = g(rng);
    double growth = 0.0;
    const int N = p_.n_full();
    for (int it = 0; it < iters; ++it) {
      // w = T(M v) restricted to the constrained space
      Eigen::VectorXd mv_full = Eigen::VectorXd::Zero(N);
      for (int i = 0; i < ni_; ++i) mv_full[interior_[i]] = v[i];
      mv_full = p_.M * mv_full;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim_);
      for (int i = 0; i < ni_; ++i) rhs[i] = mv_full[interior_[i]];
      Eigen::VectorXd sol = solver_->solve(rhs);
      Eigen::VectorXd w = sol.head(ni_);

      double vn = m_norm(v), wn = m_norm(w);
      if (wn == 0.0) return std::numeric_limits<double>::infinity();
      growth = wn / vn;
      v = w / wn;
    }
    return 1.0 / growth;
  }

 private:
  double m_norm(const Eigen::VectorXd& v) const {
    Eigen::VectorXd vf = Eigen::VectorXd::Zero(p_.n_full());
    for (int i = 0; i < ni_; ++i) vf[interior_[i]] = v[i];
    return std::sqrt(std::max(0.0, vf.dot(p_.M * vf)));
  }

  const stokes::DiscreteProblem& p_;
  double lambda_;
  fem::SpMat S_;
  std::vector<char> is_bd_;
  std::vector<int> interior_;
  std::vector<int> pos_;
  std::unique_ptr<eig::SymIndefSolver> solver_;
  int ni_ = 0, n_p_ = 0, dim_ = 0;
};

}  // namespace

WitnessResult witness_rayleigh(const stokes::DiscreteProblem& p, const Eigen::Vector2d& omega,
                               const Eigen::Vector2d& b, double resonance_rtol) {
  WitnessResult res;
  res.lambda = omega.squaredNorm();

  Eigen::VectorXd phi_re, phi_im;
  if (p.kind == stokes::Kind::stokes) {
    if (std::abs(b.dot(omega)) > 1e-12)
      throw NonOrthogonal("witness_rayleigh: b . omega = " + std::to_string(b.dot(omega)));
    Eigen::VectorXd ure = fem::interpolate_vector2(
        p.velocity, [&](double x, double y) { return std::cos(omega[0] * x + omega[1] * y) * b[0]; },
        [&](double x, double y) { return std::cos(omega[0] * x + omega[1] * y) * b[1]; });
    Eigen::VectorXd uim = fem::interpolate_vector2(
        p.velocity, [&](double x, double y) { return std::sin(omega[0] * x + omega[1] * y) * b[0]; },
        [&](double x, double y) { return std::sin(omega[0] * x + omega[1] * y) * b[1]; });
    phi_re = p.Jsel * ure;
    phi_im = p.Jsel * uim;
    // Mb-orthogonal projection onto the zero-flux subspace (the interpolant
    // violates the flux constraint at interpolation-error size)
    Eigen::LLT<Eigen::MatrixXd> llt(p.Mb);
    Eigen::VectorXd r = llt.solve(p.nu_flux);
    double denom = p.nu_flux.dot(r);
    phi_re -= (p.nu_flux.dot(phi_re) / denom) * r;
    phi_im -= (p.nu_flux.dot(phi_im) / denom) * r;
  } else {
    Eigen::VectorXd ure = fem::interpolate_scalar(
        p.velocity, [&](double x, double y) { return std::cos(omega[0] * x + omega[1] * y); });
    Eigen::VectorXd uim = fem::interpolate_scalar(
        p.velocity, [&](double x, double y) { return std::sin(omega[0] * x + omega[1] * y); });
    phi_re = p.Jsel * ure;
    phi_im = p.Jsel * uim;
  }

  WitnessSolver solver(p, res.lambda);
  res.resonance_estimate = solver.resonance_estimate();
  if (res.resonance_estimate <= resonance_rtol * std::abs(res.lambda))
    throw spectral::DirichletResonance(
        "witness_rayleigh: lambda = " + std::to_string(res.lambda) +
        " within tolerance of the Dirichlet spectrum (estimated distance " +
        std::to_string(res.resonance_estimate) + ")");

  KktSolve sre = solver.solve_with_trace(phi_re);
  KktSolve sim = solver.solve_with_trace(phi_im);

  res.value_re = solver.quadratic_form(sre.u_full) + solver.quadratic_form(sim.u_full);
  // the sesquilinear cross terms of a real symmetric operator cancel; keep
  // the computed value as a roundoff witness
  res.value_im = sre.u_full.dot((p.form_matrix() - res.lambda * p.M) * sim.u_full) -
                 sim.u_full.dot((p.form_matrix() - res.lambda * p.M) * sre.u_full);
  res.norm_sq = phi_re.dot(p.Mb * phi_re) + phi_im.dot(p.Mb * phi_im);
  return res;
}

double boundary_flux_integral(const mesh::Mesh& m, const Eigen::Vector2d& omega) {
  double s = 0.0;
  for (size_t e = 0; e < m.boundary_edges.size(); ++e) {
    const auto& be = m.boundary_edges[e];
    double L = std::hypot(m.vertices[be[1]][0] - m.vertices[be[0]][0],
                          m.vertices[be[1]][1] - m.vertices[be[0]][1]);
    s += (omega[0] * m.edge_normals[e][0] + omega[1] * m.edge_normals[e][1]) * L;
  }
  return s;
}

DtnNegativityReport dtn_negativity(const stokes::DiscreteProblem& p,
                                   const std::vector<double>& lambdas, double resonance_rtol) {
  DtnNegativityReport rep;
  spectral::DtnOperator dtn(p.form_system());
  for (double lambda : lambdas) {
    DtnNegativityReport::Entry e;
    e.lambda = lambda;
    try {
      spectral::DtnResult r = dtn.spectrum(lambda, resonance_rtol);
      e.min_eigenvalue = r.size() > 0 ? r.eigenvalues[0] : 0.0;
      for (int i = 0; i < r.size(); ++i)
        if (r.eigenvalues[i] < 0.0) ++e.negative_count;
    } catch (const spectral::DirichletResonance& ex) {
      e.skipped = true;
      e.note = ex.what();
    }
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

ConvergenceStudy convergence_study(mesh::Domain domain, stokes::Kind kind, double alpha,
                                   const std::vector<double>& h_list, int n, int sides) {
  if (h_list.size() < 3)
    throw std::invalid_argument("convergence_study: need at least 3 mesh sizes");
  for (size_t i = 1; i < h_list.size(); ++i)
    if (!(h_list[i] < h_list[i - 1]))
      throw std::invalid_argument("convergence_study: h_list must be decreasing");

  ConvergenceStudy st;
  st.hs = h_list;
  for (double h : h_list) {
    mesh::Mesh m = mesh::generate(domain, h, sides);
    stokes::DiscreteProblem p = build_problem(m, kind, alpha);
    spectral::Spectrum sn = stokes::solve_spectrum(p, stokes::Bc::neumann, n);
    spectral::Spectrum sd = stokes::solve_spectrum(p, stokes::Bc::dirichlet, n);
    st.lambda_N.emplace_back(sn.eigenvalues.data(), sn.eigenvalues.data() + n);
    st.lambda_D.emplace_back(sd.eigenvalues.data(), sd.eigenvalues.data() + n);
  }

  auto orders = [&](const std::vector<std::vector<double>>& tab) {
    std::vector<std::vector<double>> ord;
    for (size_t j = 0; j + 2 < h_list.size(); ++j) {
      std::vector<double> row(n);
      double rate = std::log(h_list[j] / h_list[j + 1]);
      for (int i = 0; i < n; ++i) {
        double d1 = std::abs(tab[j][i] - tab[j + 1][i]);
        double d2 = std::abs(tab[j + 1][i] - tab[j + 2][i]);
        row[i] = (d1 > 0 && d2 > 0) ? std::log(d1 / d2) / rate : 0.0;
      }
      ord.push_back(std::move(row));
    }
    return ord;
  };
  auto cauchy = [&](const std::vector<std::vector<double>>& tab) {
    std::vector<bool> ok(n, true);
    for (int i = 0; i < n; ++i)
      for (size_t j = 0; j + 2 < h_list.size(); ++j) {
        double d1 = std::abs(tab[j][i] - tab[j + 1][i]);
        double d2 = std::abs(tab[j + 1][i] - tab[j + 2][i]);
        if (d2 > d1 + 1e-12 * std::max(1.0, std::abs(tab[j][i]))) ok[i] = false;
      }
    return ok;
  };
  st.order_N = orders(st.lambda_N);
  st.order_D = orders(st.lambda_D);
  st.cauchy_N = cauchy(st.lambda_N);
  st.cauchy_D = cauchy(st.lambda_D);
  return st;
}

}  // namespace friedlab::lab
