#include "sc/outer.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>

namespace sc::outer {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

double sq(double x) { return x * x; }

// Stiffness sum_T |T| grad phi_a . A_T grad phi_b with A_T = coef(T).
template <class Coef>
SpMat assemble_stiffness(const mesh::Mesh& m, Coef coef) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.tris.size() * 9);
  for (std::size_t t = 0; t < m.tris.size(); ++t) {
    const EllipticityMatrix A = coef(t);
    const auto& g = m.grad_basis[t];
    for (int a = 0; a < 3; ++a) {
      const Vec2 Ag = A.apply(g[a]);
      for (int c = 0; c < 3; ++c) trip.emplace_back(m.tris[t][c], m.tris[t][a], m.area[t] * dot(Ag, g[c]));
    }
  }
  SpMat K(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.size()));
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

struct SolveOutcome {
  std::vector<double> x;
  bool ok = false;
};

// Singular Neumann-type system K x = b with a mean-free b; the solution is projected to mean zero.
// Direct path: adding K_pp e_p e_p^T removes the constant null space without changing the solution,
// since summing the rows gives K_pp x_p = sum b = 0.
SolveOutcome solve_singular(const mesh::Mesh& m, const SpMat& K, const std::vector<double>& rhs,
                            const ContinuationOptions& opt) {
  Vec b = Eigen::Map<const Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  b.array() -= b.mean();
  SolveOutcome out;
  if (b.norm() == 0.0) {
    out.x.assign(rhs.size(), 0.0);
    out.ok = true;
    return out;
  }
  Vec x;
  if (opt.linear_solver == LinearSolver::DiagonalCG) {
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(opt.cg_tol);
    cg.setMaxIterations(opt.cg_max_iter);
    cg.compute(K);
    x = cg.solve(b);
    out.ok = cg.info() == Eigen::Success || (cg.info() == Eigen::NoConvergence && cg.error() < 1e3 * opt.cg_tol);
  } else {
    SpMat P = K;
    P.coeffRef(0, 0) += K.coeff(0, 0);
    Eigen::SimplicialLDLT<SpMat> ldlt(P);
    if (ldlt.info() != Eigen::Success) return out;
    x = ldlt.solve(b);
    out.ok = ldlt.info() == Eigen::Success;
  }
  out.ok = out.ok && x.allFinite();
  out.x.assign(x.data(), x.data() + x.size());
  m.project_mean_zero(out.x);
  return out;
}

struct ResidualNorms {
  double interior = 0, flux = 0;
};

ResidualNorms residual_norms(const mesh::Mesh& m, const std::vector<double>& r) {
  ResidualNorms n;
  double s = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.boundary_rank[i] > 0) s += sq(r[i]) / m.lumped_mass[i];
  n.interior = std::sqrt(s);
  for (std::size_t k = 0; k < m.boundary.size(); ++k)
    n.flux = std::max(n.flux, std::abs(r[m.boundary[k]]) / m.boundary_weight[k]);
  return n;
}

std::vector<double> lap_rho_over_rho(const mesh::Mesh& m, const std::vector<double>& zeta, std::vector<double>* rho0_out,
                                     std::vector<double>* lap_out, std::vector<double>* gx_out,
                                     std::vector<double>* gy_out) {
  std::vector<double> gx, gy;
  m.gradient(zeta, gx, gy);
  std::vector<double> rho0(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) rho0[i] = std::sqrt(std::max(1e-300, 1.0 - sq(gx[i]) - sq(gy[i])));
  const auto d = m.derivatives(rho0);
  std::vector<double> q(m.size()), lap(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    lap[i] = d.laplacian(i);
    q[i] = lap[i] / rho0[i];
  }
  if (rho0_out) *rho0_out = rho0;
  if (lap_out) *lap_out = lap;
  if (gx_out) *gx_out = gx;
  if (gy_out) *gy_out = gy;
  return q;
}

double periodic_lagrange(const std::vector<double>& s, const std::vector<double>& v, double L, double x) {
  const std::size_t n = s.size();
  x -= L * std::floor(x / L);
  std::size_t k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), x) - s.begin());
  k = (k + n - 1) % n;  // s[k] <= x (periodically)
  double xs[4], vs[4];
  for (int a = 0; a < 4; ++a) {
    const long idx = static_cast<long>(k) + a - 1;
    const long wrapped = ((idx % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n);
    xs[a] = s[wrapped] + L * std::floor(static_cast<double>(idx) / static_cast<double>(n));
    vs[a] = v[wrapped];
  }
  double r = 0;
  for (int a = 0; a < 4; ++a) {
    double w = 1;
    for (int c = 0; c < 4; ++c)
      if (c != a) w *= (x - xs[c]) / (xs[a] - xs[c]);
    r += w * vs[a];
  }
  return r;
}

}  // namespace

EllipticityMatrix assemble_A(Vec2 z) {
  EllipticityMatrix A;
  const double z2 = dot(z, z);
  A.a11 = 1.0 - z2 - 2.0 * z.x * z.x;
  A.a12 = -2.0 * z.x * z.y;
  A.a22 = 1.0 - z2 - 2.0 * z.y * z.y;
  A.eig_perp = 1.0 - z2;
  A.eig_par = 1.0 - 3.0 * z2;
  const double nz = std::sqrt(z2);
  A.dir_par = nz > 0 ? Vec2{z.x / nz, z.y / nz} : Vec2{1, 0};
  A.positive_definite = A.eig_par > 0;
  return A;
}

void enforce_discrete_mean_free(const mesh::Mesh& m, std::vector<double>& j) {
  double s = 0, w = 0;
  for (std::size_t k = 0; k < j.size(); ++k) {
    s += j[k] * m.boundary_weight[k];
    w += m.boundary_weight[k];
  }
  for (double& x : j) x -= s / w;
}

std::vector<double> current_on_mesh(const mesh::Mesh& m, const geometry::BoundaryGeometry& g,
                                    const feasibility::CurrentProfile& j) {
  if (j.j.size() != g.size()) throw Error(ErrorKind::Config, "current profile does not match the boundary samples");
  std::vector<double> out(m.boundary.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = periodic_lagrange(g.arclength, j.j, g.total_length, m.boundary_s[k]);
  enforce_discrete_mean_free(m, out);
  return out;
}

double energy(const mesh::Mesh& m, const std::vector<double>& j, double mu, const std::vector<double>& zeta) {
  double e = 0;
  for (std::size_t t = 0; t < m.tris.size(); ++t) {
    const Vec2 g = m.element_gradient(t, zeta);
    e -= 0.25 * m.area[t] * sq(1.0 - dot(g, g));
  }
  for (std::size_t k = 0; k < m.boundary.size(); ++k) e -= mu * j[k] * m.boundary_weight[k] * zeta[m.boundary[k]];
  return e;
}

std::vector<double> weak_residual(const mesh::Mesh& m, const std::vector<double>& j, double mu,
                                  const std::vector<double>& zeta) {
  std::vector<double> r(m.size(), 0.0);
  for (std::size_t t = 0; t < m.tris.size(); ++t) {
    const Vec2 g = m.element_gradient(t, zeta);
    const Vec2 f = (m.area[t] * (1.0 - dot(g, g))) * g;
    for (int a = 0; a < 3; ++a) r[m.tris[t][a]] += dot(f, m.grad_basis[t][a]);
  }
  for (std::size_t k = 0; k < m.boundary.size(); ++k) r[m.boundary[k]] -= mu * j[k] * m.boundary_weight[k];
  return r;
}

double max_element_gradient(const mesh::Mesh& m, const std::vector<double>& zeta) {
  double g = 0;
  for (std::size_t t = 0; t < m.tris.size(); ++t) g = std::max(g, norm(m.element_gradient(t, zeta)));
  return g;
}

bool newton_fixed_mu(const mesh::Mesh& m, const std::vector<double>& j, double mu, std::vector<double>& zeta,
                     const ContinuationOptions& opt, int* iterations) {
  const double limit = kEllipticGradient;
  if (max_element_gradient(m, zeta) >= limit) return false;
  double e = energy(m, j, mu, zeta);
  for (int it = 0; it <= opt.max_newton; ++it) {
    if (iterations) *iterations = it;
    const auto r = weak_residual(m, j, mu, zeta);
    const auto nr = residual_norms(m, r);
    if (nr.interior < opt.newton_tol && nr.flux < opt.newton_tol) return true;
    if (it == opt.max_newton) return false;
    const SpMat K = assemble_stiffness(m, [&](std::size_t t) { return assemble_A(m.element_gradient(t, zeta)); });
    std::vector<double> rhs(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
    const auto dz = solve_singular(m, K, rhs, opt);
    if (!dz.ok) return false;
    double slope = 0, dmax = 0, zmax = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      slope += r[i] * dz.x[i];
      dmax = std::max(dmax, std::abs(dz.x[i]));
      zmax = std::max(zmax, std::abs(zeta[i]));
    }
    if (dmax <= 1e-15 * (1.0 + zmax)) return nr.interior < 1e3 * opt.newton_tol && nr.flux < 1e3 * opt.newton_tol;
    // Armijo on the energy; near convergence the energy difference drowns in summation roundoff,
    // so a decrease of the residual norms also accepts the step.
    bool accepted = false;
    std::vector<double> trial(zeta.size());
    const double merit = std::max(nr.interior, nr.flux);
    for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
      for (std::size_t i = 0; i < zeta.size(); ++i) trial[i] = zeta[i] + alpha * dz.x[i];
      if (max_element_gradient(m, trial) >= limit) continue;
      const double et = energy(m, j, mu, trial);
      const auto nt = residual_norms(m, weak_residual(m, j, mu, trial));
      if (et <= e + 1e-4 * alpha * slope || std::max(nt.interior, nt.flux) < 0.5 * merit) {
        zeta.swap(trial);
        e = et;
        accepted = true;
        break;
      }
    }
    if (!accepted) return false;
  }
  return false;
}

ZetaSolution solve_zeta(const mesh::Mesh& m, const std::vector<double>& j, const ContinuationOptions& opt) {
  if (j.size() != m.boundary.size()) throw Error(ErrorKind::Config, "boundary current size does not match the mesh");
  if (!(opt.safeguard > 0 && opt.safeguard < kEllipticGradient)) throw Error(ErrorKind::Config, "continuation safeguard out of range");
  const double accept_limit = kEllipticGradient - opt.safeguard;
  ZetaSolution sol;
  sol.zeta.assign(m.size(), 0.0);
  sol.mu_path.push_back({0.0, 0.0, 0, 0.0, 0.0});
  double jmax = 0;
  for (double x : j) jmax = std::max(jmax, std::abs(x));
  if (jmax == 0.0) {
    sol.mu_path.back().mu = 1.0;
    return sol;
  }

  std::vector<double> prev = sol.zeta, cur = sol.zeta;
  double mu_prev = 0, mu = 0, step = opt.initial_step;
  double last_good_grad = 0;
  bool last_failure_elliptic = false;
  while (mu < 1.0) {
    const double trial_mu = std::min(1.0, mu + step);
    std::vector<double> z(m.size());
    const double ratio = mu > mu_prev ? (trial_mu - mu) / (mu - mu_prev) : 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = cur[i] + ratio * (cur[i] - prev[i]);
    if (max_element_gradient(m, z) >= kEllipticGradient) z = cur;
    const double e_pred = energy(m, j, trial_mu, z);
    int its = 0;
    const bool ok = newton_fixed_mu(m, j, trial_mu, z, opt, &its);
    const double g = ok ? max_element_gradient(m, z) : std::numeric_limits<double>::infinity();
    if (ok && g < accept_limit) {
      prev.swap(cur);
      cur = z;
      mu_prev = mu;
      mu = trial_mu;
      last_good_grad = g;
      sol.mu_path.push_back({mu, g, its, e_pred, energy(m, j, mu, cur)});
      step = std::min(opt.max_step, step * opt.growth);
      continue;
    }
    // A failed Newton near the bound is attributed to the bound: the elliptic branch ends there.
    last_failure_elliptic = ok || last_good_grad > accept_limit - 0.05 || max_element_gradient(m, z) >= accept_limit;
    step *= 0.5;
    if (step < opt.min_step) {
      if (last_failure_elliptic)
        throw LossOfEllipticity("max |grad zeta| reached 1/sqrt(3) - safeguard at mu = " + std::to_string(trial_mu), mu,
                                last_good_grad);
      throw Error(ErrorKind::NewtonDivergence, "Newton failed with step halving exhausted at mu = " + std::to_string(trial_mu));
    }
  }
  sol.zeta = cur;
  sol.max_grad = last_good_grad;
  const auto nr = residual_norms(m, weak_residual(m, j, 1.0, cur));
  sol.residual_interior = nr.interior;
  sol.flux_mismatch = nr.flux;
  return sol;
}

DescentResult solve_zeta_descent(const mesh::Mesh& m, const std::vector<double>& j, double mu, double tol, int max_iter) {
  const SpMat L = assemble_stiffness(m, [](std::size_t) { return EllipticityMatrix{}; });
  SpMat P = L;
  const double scale = 1.0 / m.total_area();
  for (std::size_t i = 0; i < m.size(); ++i) P.coeffRef(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += scale * m.lumped_mass[i];
  Eigen::SimplicialLDLT<SpMat> ldlt(P);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::LinearSolveFailure, "descent preconditioner factorisation failed");
  DescentResult out;
  out.zeta.assign(m.size(), 0.0);
  double e = energy(m, j, mu, out.zeta);
  for (int it = 0; it < max_iter; ++it) {
    const auto r = weak_residual(m, j, mu, out.zeta);
    const auto nr = residual_norms(m, r);
    out.residual = std::max(nr.interior, nr.flux);
    out.iterations = it;
    if (out.residual < tol) {
      out.converged = true;
      break;
    }
    Vec rv = Eigen::Map<const Vec>(r.data(), static_cast<Eigen::Index>(r.size()));
    Vec d = -ldlt.solve(rv);
    d.array() -= d.mean();
    const double slope = rv.dot(d);
    bool moved = false;
    std::vector<double> trial(m.size());
    for (double alpha = 1.0; alpha > 1e-8; alpha *= 0.5) {
      for (std::size_t i = 0; i < m.size(); ++i) trial[i] = out.zeta[i] + alpha * d(static_cast<Eigen::Index>(i));
      if (max_element_gradient(m, trial) > kEllipticGradient) continue;
      const double et = energy(m, j, mu, trial);
      if (et <= e + 1e-4 * alpha * slope + 1e-15 * (1.0 + std::abs(e))) {
        out.zeta.swap(trial);
        e = et;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  m.project_mean_zero(out.zeta);
  out.energy = e;
  return out;
}

MaxGradient max_gradient_check(const mesh::Mesh& m, const std::vector<double>& zeta, int band, double rel_tol,
                               bool throw_on_interior) {
  std::vector<double> gx, gy;
  m.gradient(zeta, gx, gy);
  double vmax = 0;
  for (std::size_t i = 0; i < m.size(); ++i) vmax = std::max(vmax, std::hypot(gx[i], gy[i]));
  MaxGradient out;
  out.value = vmax;
  if (vmax == 0.0) {
    out.node = m.boundary.empty() ? 0 : m.boundary[0];
    out.location = m.nodes[out.node];
    return out;
  }
  const double cut = vmax * (1.0 - rel_tol);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double v = std::hypot(gx[i], gy[i]);
    if (v < cut) continue;
    if (out.node < 0 || m.boundary_rank[i] < out.rank) {
      out.node = static_cast<int>(i);
      out.rank = m.boundary_rank[i];
    }
  }
  out.location = m.nodes[out.node];
  out.in_band = out.rank <= band;
  if (!out.in_band && throw_on_interior)
    throw Error(ErrorKind::InteriorMaximum, "max |grad zeta| attained " + std::to_string(out.rank) + " edges away from the boundary");
  return out;
}

Zeta1Result solve_zeta1(const mesh::Mesh& m, const std::vector<double>& zeta, const ContinuationOptions& opt) {
  if (max_element_gradient(m, zeta) >= kEllipticGradient)
    throw Error(ErrorKind::LinearSolveFailure, "zeta1 operator is not positive definite: max |grad zeta| >= 1/sqrt(3)");
  const auto q = lap_rho_over_rho(m, zeta, nullptr, nullptr, nullptr, nullptr);
  std::vector<double> f(m.size(), 0.0);
  for (std::size_t t = 0; t < m.tris.size(); ++t) {
    const auto& v = m.tris[t];
    const double c = (q[v[0]] + q[v[1]] + q[v[2]]) / 3.0;
    const Vec2 G = (m.area[t] * c) * m.element_gradient(t, zeta);
    for (int a = 0; a < 3; ++a) f[v[a]] -= dot(G, m.grad_basis[t][a]);
  }
  Zeta1Result out;
  double sum = 0, abs_sum = 0;
  for (double x : f) {
    sum += x;
    abs_sum += std::abs(x);
  }
  out.compatibility = abs_sum > 0 ? std::abs(sum) / abs_sum : 0.0;
  const SpMat K = assemble_stiffness(m, [&](std::size_t t) { return assemble_A(m.element_gradient(t, zeta)); });
  const auto sv = solve_singular(m, K, f, opt);
  if (!sv.ok) throw Error(ErrorKind::LinearSolveFailure, "zeta1 linear solve failed");
  out.zeta1 = sv.x;
  Vec x = Eigen::Map<const Vec>(out.zeta1.data(), static_cast<Eigen::Index>(out.zeta1.size()));
  Vec fv = Eigen::Map<const Vec>(f.data(), static_cast<Eigen::Index>(f.size()));
  const double fn = fv.norm();
  out.residual = fn > 0 ? (K * x - fv).norm() / fn : (K * x).norm();
  return out;
}

OuterFields outer_fields(const mesh::Mesh& m, const std::vector<double>& zeta, const std::vector<double>& zeta1,
                         double eps, const std::vector<double>& j) {
  if (!(eps > 0)) throw Error(ErrorKind::Config, "epsilon must be positive");
  OuterFields F;
  F.eps = eps;
  const std::size_t n = m.size();
  const double e2 = eps * eps;
  const auto q = lap_rho_over_rho(m, zeta, &F.rho0, &F.lap_rho0, &F.zeta_x, &F.zeta_y);
  m.gradient(zeta1, F.zeta1_x, F.zeta1_y);
  F.rho1.resize(n);
  F.rho_o.resize(n);
  F.chi_o.resize(n);
  F.chi_tilde_x.resize(n);
  F.chi_tilde_y.resize(n);
  F.E.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r0 = F.rho0[i];
    F.rho1[i] = F.lap_rho0[i] / (2.0 * r0 * r0) - (F.zeta_x[i] * F.zeta1_x[i] + F.zeta_y[i] * F.zeta1_y[i]) / r0;
    F.rho_o[i] = r0 + e2 * F.rho1[i];
    F.chi_o[i] = (zeta[i] + e2 * zeta1[i]) / eps;
    F.chi_tilde_x[i] = F.zeta_x[i] + e2 * F.zeta1_x[i];
    F.chi_tilde_y[i] = F.zeta_y[i] + e2 * F.zeta1_y[i];
    F.E[i] = 1.0 - sq(F.chi_tilde_x[i]) - sq(F.chi_tilde_y[i]) - sq(F.rho_o[i]);
  }
  const auto d = m.derivatives(F.rho_o);
  F.g1.resize(n);
  for (std::size_t i = 0; i < n; ++i) F.g1[i] = -d.laplacian(i) - F.E[i] * F.rho_o[i] / e2;

  // weak divergence with element quantities consistent with the zeta and zeta1 systems
  std::vector<double> w(n, 0.0);
  for (std::size_t t = 0; t < m.tris.size(); ++t) {
    const auto& v = m.tris[t];
    const Vec2 g = m.element_gradient(t, zeta), g1 = m.element_gradient(t, zeta1);
    const double c = (q[v[0]] + q[v[1]] + q[v[2]]) / 3.0;
    const double r0 = std::sqrt(1.0 - dot(g, g));
    const double r1 = c / (2.0 * r0) - dot(g, g1) / r0;
    const double ro = r0 + e2 * r1;
    const Vec2 flux = (m.area[t] * ro * ro / eps) * (g + e2 * g1);
    for (int a = 0; a < 3; ++a) w[v[a]] -= dot(flux, m.grad_basis[t][a]);
  }
  for (std::size_t k = 0; k < m.boundary.size(); ++k) w[m.boundary[k]] += j[k] * m.boundary_weight[k] / eps;
  F.g2.resize(n);
  for (std::size_t i = 0; i < n; ++i) F.g2[i] = w[i] / m.lumped_mass[i];
  return F;
}

double conormal_root(double rho_r, double jn) {
  const double xm = rho_r / std::sqrt(3.0);
  const double fmax = (rho_r * rho_r - xm * xm) * xm;
  if (std::abs(jn) > fmax) throw Error(ErrorKind::NoSubcriticalRoot, "boundary current exceeds the local critical value");
  double lo = -xm, hi = xm;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((rho_r * rho_r - mid * mid) * mid < jn) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

BoundaryTrace boundary_trace(const mesh::Mesh& m, const std::vector<double>& zeta, const std::vector<double>& j) {
  BoundaryTrace tr;
  std::vector<double> gx, gy;
  m.gradient(zeta, gx, gy);
  std::vector<double> rho0(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) rho0[i] = std::sqrt(std::max(1e-300, 1.0 - sq(gx[i]) - sq(gy[i])));
  std::vector<double> rx, ry;
  m.gradient(rho0, rx, ry);
  for (std::size_t k = 0; k < m.boundary.size(); ++k) {
    const int id = m.boundary[k];
    const Vec2 n = m.boundary_normal[k];
    const Vec2 t{-n.y, n.x};
    tr.s.push_back(m.boundary_s[k]);
    tr.kappa.push_back(m.curve ? m.curve->curvature_at(m.boundary_s[k]) : 0.0);
    tr.j.push_back(j[k]);
    tr.point.push_back(m.nodes[id]);
    tr.normal.push_back(n);
    tr.tangent.push_back(t);
    const double zs = gx[id] * t.x + gy[id] * t.y;
    const double rr = std::sqrt(1.0 - zs * zs);
    const double zn = conormal_root(rr, j[k]);
    tr.zeta_s.push_back(zs);
    tr.zeta_t.push_back(-zn);
    tr.rho_r.push_back(rr);
    tr.rho_out0.push_back(std::sqrt(rr * rr - zn * zn));
    tr.drho0_dt.push_back(-(rx[id] * n.x + ry[id] * n.y));
  }
  return tr;
}

IdentityReport boundary_identities(const mesh::Mesh& m, const std::vector<double>& zeta, const std::vector<double>& j) {
  if (m.kind != mesh::Mesh::Kind::Star || !m.curve) throw Error(ErrorKind::Config, "boundary identities need a star mesh");
  std::vector<double> gx, gy;
  m.gradient(zeta, gx, gy);
  const std::size_t nb = m.boundary.size();
  const double ds = m.curve->total_length / static_cast<double>(nb);
  std::vector<double> Fs(nb), zt0(nb), zs0(nb), G0(nb), Ft0(nb), FtD(nb), ztD(nb), GD(nb), kap(nb);
  IdentityReport rep;
  double dsum = 0;
  for (std::size_t k = 0; k < nb; ++k) {
    const int id = m.boundary[k];
    const Vec2 n = m.boundary_normal[k], t{-n.y, n.x};
    const double D = norm(m.nodes[id] - m.center) / m.n_rings;
    dsum += D;
    kap[k] = m.curve->curvature_at(m.boundary_s[k]);
    const double g2 = sq(gx[id]) + sq(gy[id]);
    zs0[k] = gx[id] * t.x + gy[id] * t.y;
    zt0[k] = -(gx[id] * n.x + gy[id] * n.y);
    G0[k] = g2;
    Fs[k] = (1.0 - g2) * zs0[k];
    Ft0[k] = (1.0 - g2) * zt0[k];
    const auto st = m.stencil(m.nodes[id] - D * n);
    const double px = st.apply(gx), py = st.apply(gy);
    const double gD = px * px + py * py;
    ztD[k] = -(px * n.x + py * n.y);
    GD[k] = gD;
    FtD[k] = (1.0 - gD) * ztD[k];
    // d/dt by a first-order one-sided difference over D
    const double ztt = (ztD[k] - zt0[k]) / D;
    const double dG = (GD[k] - G0[k]) / D;
    const double dFt = (FtD[k] - Ft0[k]) / D;
    rep.residual_1.push_back(kap[k] * zs0[k] * zs0[k] + zt0[k] * ztt - 0.5 * dG);  // completed below
    rep.residual_2.push_back(kap[k] * j[k] + dFt);
  }
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t kp = (k + 1) % nb, km = (k + nb - 1) % nb;
    const double zts = (zt0[kp] - zt0[km]) / (2.0 * ds);
    rep.residual_1[k] += zs0[k] * zts;
    rep.residual_2[k] += (Fs[kp] - Fs[km]) / (2.0 * ds);
  }
  for (std::size_t k = 0; k < nb; ++k) {
    rep.rms_1 += sq(rep.residual_1[k]);
    rep.rms_2 += sq(rep.residual_2[k]);
    rep.max_1 = std::max(rep.max_1, std::abs(rep.residual_1[k]));
    rep.max_2 = std::max(rep.max_2, std::abs(rep.residual_2[k]));
  }
  rep.rms_1 = std::sqrt(rep.rms_1 / nb);
  rep.rms_2 = std::sqrt(rep.rms_2 / nb);
  rep.dt_step = dsum / nb;
  return rep;
}

}  // namespace sc::outer
