#include "sc/inner.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace sc::inner {

namespace {

constexpr double kBranchCap = 4.0 / 27.0;

double sq(double x) { return x * x; }

// u in [0, 1/sqrt 3] with u - u^3 = a >= 0. The map is concave and increasing there, so Newton started at
// u = a approaches the root monotonically from the left. Working with u keeps 1 - m^2 = u^2 accurate near m = 1.
double branch_u(double a) {
  if (a <= 0) return 0.0;
  const double cap = 1.0 / std::sqrt(3.0);
  double u = std::min(a, cap);
  for (int it = 0; it < 100; ++it) {
    const double f = u - u * u * u - a;
    const double df = 1 - 3 * u * u;
    if (df <= 0) break;
    const double du = f / df;
    u -= du;
    if (std::abs(du) <= 1e-17 * (1 + u)) break;
  }
  return std::clamp(u, 0.0, cap);
}

// x = m^2 in [2/3, 1] with x^2 (1 - x) = c.
double branch_square(double c) {
  const double u = branch_u(std::sqrt(std::max(0.0, c)));
  return 1 - u * u;
}

// Along the branch, t - j_r = x sqrt(1 - x) with x = V(t) decreasing from 1 to mu_j^2, so with u = sqrt(1 - x)
//   int dt / V = 3u + log((1 - u) / (1 + u)),   int (t - j_r) dt / V = x - 3x^2/4 = 1/4 + u^2/2 - 3u^4/4.
double prim0(double u) { return 3 * u + std::log1p(-u) - std::log1p(u); }
double prim1(double u) {
  const double u2 = u * u;
  return 0.5 * u2 - 0.75 * u2 * u2;
}

// int_a^0 (1, t) / V(t) dt over the branch piece, j_r <= a <= 0.
std::pair<double, double> branch_moments(double a, double j_r) {
  const double ua = branch_u(a - j_r), uj = branch_u(-j_r);
  const double i0 = prim0(uj) - prim0(ua);
  return {i0, j_r * i0 + prim1(uj) - prim1(ua)};
}

LValues L_reduced(double p, double j_r, double mj2) {
  if (p >= 0) return {0.5 * p * p / mj2, p / mj2, 1.0 / mj2};
  const double a = std::max(p, j_r);
  auto [i0, i1] = branch_moments(a, j_r);
  if (p < j_r) {
    i0 += j_r - p;
    i1 += 0.5 * (j_r * j_r - p * p);
  }
  const double v = p < j_r ? 1.0 : branch_square(sq(p - j_r));
  return {i1 - p * i0, -i0, 1.0 / v};
}

// Tridiagonal solve (diag d, off-diagonal e between i and i+1); overwrites rhs.
void thomas(std::vector<double> d, const std::vector<double>& e, std::vector<double>& rhs) {
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double f = e[i - 1] / d[i - 1];
      d[i] -= f * e[i - 1];
      rhs[i] -= f * rhs[i - 1];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    const double up = i + 1 < n ? e[i] * rhs[i + 1] : 0.0;
    rhs[i] = (rhs[i] - up) / d[i];
  }
}

// Nodal derivative on a uniform grid: central inside, second-order one-sided at the ends.
std::vector<double> nodal_derivative(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2 * h);
  d[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h);
  d[n - 1] = (3 * f[n - 1] - 4 * f[n - 2] + f[n - 3]) / (2 * h);
  return d;
}

double l2_norm(const std::vector<double>& f, double h) {
  double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i) s += (i == 0 || i + 1 == f.size() ? 0.5 : 1.0) * f[i] * f[i];
  return std::sqrt(s * h);
}

}  // namespace

double mu_j(double j_r) {
  if (j_r * j_r > kBranchCap * (1 + 1e-14)) throw Error(ErrorKind::NoSubcriticalRoot, "j_r^2 exceeds 4/27");
  return std::sqrt(branch_square(j_r * j_r));
}

double branch_mu0(double t, double j_r) {
  const double c = sq(t - j_r);
  if (c > kBranchCap * (1 + 1e-14)) throw Error(ErrorKind::NoSubcriticalRoot, "argument outside the subcritical branch");
  return std::sqrt(branch_square(c));
}

double V(double t, double j_r) {
  if (j_r > 0) return V(-t, -j_r);
  if (t <= j_r) return 1.0;
  if (t >= 0) return branch_square(j_r * j_r);
  return branch_square(sq(t - j_r));
}

LValues L_of(double p, double j_r) {
  if (j_r * j_r > kBranchCap * (1 + 1e-14)) throw Error(ErrorKind::NoSubcriticalRoot, "j_r^2 exceeds 4/27");
  if (j_r > 0) {
    auto r = L_reduced(-p, -j_r, branch_square(j_r * j_r));
    return {r.L, -r.dL, r.d2L};
  }
  return L_reduced(p, j_r, branch_square(j_r * j_r));
}

LeadingProfiles solve_leading(double j_r_in, const LeadingOptions& opt) {
  const double mj = mu_j(j_r_in);
  const double sgn = j_r_in > 0 ? -1.0 : 1.0;
  const double j_r = sgn * j_r_in;  // <= 0
  const double mj2 = mj * mj;
  const double eta_max = opt.eta_max > 0 ? opt.eta_max : 40.0 / mj;
  if (!(opt.h > 0) || eta_max < 10 * opt.h) throw Error(ErrorKind::Config, "inner grid: need h > 0 and eta_max >= 10 h");
  const auto n = static_cast<std::size_t>(std::ceil(eta_max / opt.h)) + 1;
  const double h = eta_max / static_cast<double>(n - 1);

  LeadingProfiles out;
  out.j_r = j_r_in;
  out.mu_j = mj;
  out.eta.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.eta[i] = h * static_cast<double>(i);
  const double k = L_reduced(j_r, j_r, mj2).dL;
  out.k = sgn * k;

  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = -(j_r / mj) * std::exp(-mj * out.eta[i]);

  auto trap = [&](std::size_t i) { return (i == 0 || i + 1 == n) ? 0.5 : 1.0; };
  auto J_of = [&](const std::vector<double>& u) {
    double J = k * u[0];
    for (std::size_t c = 0; c + 1 < n; ++c) J += h * L_reduced((u[c + 1] - u[c]) / h, j_r, mj2).L;
    for (std::size_t i = 0; i < n; ++i) J += 0.5 * h * trap(i) * u[i] * u[i];
    return J;
  };
  auto grad_hess = [&](const std::vector<double>& u, std::vector<double>& g, std::vector<double>& d,
                       std::vector<double>& e) {
    g.assign(n, 0.0);
    d.assign(n, 0.0);
    e.assign(n - 1, 0.0);
    g[0] = k;
    for (std::size_t c = 0; c + 1 < n; ++c) {
      const auto L = L_reduced((u[c + 1] - u[c]) / h, j_r, mj2);
      g[c] -= L.dL;
      g[c + 1] += L.dL;
      d[c] += L.d2L / h;
      d[c + 1] += L.d2L / h;
      e[c] = -L.d2L / h;
    }
    for (std::size_t i = 0; i < n; ++i) {
      g[i] += h * trap(i) * u[i];
      d[i] += h * trap(i);
    }
  };

  std::vector<double> g, d, e, step, trial(n);
  double J = J_of(w);
  bool done = false;
  int it = 0;
  for (; it < opt.max_newton && !done; ++it) {
    grad_hess(w, g, d, e);
    double gmax = 0;
    for (double x : g) gmax = std::max(gmax, std::abs(x));
    out.gradient_norm = gmax;
    if (gmax < 1e-15) break;
    step = g;
    thomas(d, e, step);
    double slope = 0, smax = 0;
    for (std::size_t i = 0; i < n; ++i) {
      step[i] = -step[i];
      slope += g[i] * step[i];
      smax = std::max(smax, std::abs(step[i]));
    }
    if (smax < 1e-16) break;
    bool accepted = false;
    for (double alpha = 1.0; alpha > 1e-8; alpha *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + alpha * step[i];
      const double Jt = J_of(trial);
      // near the minimiser J changes below its roundoff, so a halved gradient also accepts the step
      bool ok = Jt <= J + 1e-4 * alpha * slope || alpha * smax < 1e-13;
      if (!ok) {
        std::vector<double> gt, dt_, et;
        grad_hess(trial, gt, dt_, et);
        double gtm = 0;
        for (double x : gt) gtm = std::max(gtm, std::abs(x));
        ok = gtm < 0.5 * gmax;
      }
      if (ok) {
        w.swap(trial);
        J = Jt;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw Error(ErrorKind::NewtonDivergence, "leading-order layer: line search failed");
    if (smax < 1e-14) done = true;
  }
  grad_hess(w, g, d, e);
  out.gradient_norm = 0;
  for (double x : g) out.gradient_norm = std::max(out.gradient_norm, std::abs(x));
  if (out.gradient_norm > 1e-10) throw Error(ErrorKind::NewtonDivergence, "leading-order layer did not converge");
  out.newton_iterations = it;
  out.J = J;

  auto dw = nodal_derivative(w, h);
  dw[0] = j_r;
  out.mu0.resize(n);
  out.d2mu0.resize(n);
  out.Vw.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(dw[i], j_r, 0.0);
    const double x = branch_square(sq(p - j_r));
    const double mu = std::sqrt(x);
    out.mu0[i] = mu;
    out.Vw[i] = x;
    // chain rule: x' from x^2 (1 - x) = q^2, with p' = V w and p'' = V_p p' w + V p
    const double q = p - j_r;
    const double gp = 2 * x - 3 * x * x;
    const double xp = gp < 0 ? 2 * q / gp : 0.0;
    const double xpp = gp < 0 ? (2 - (2 - 6 * x) * xp * xp) / gp : 0.0;
    const double mup = xp / (2 * mu), mupp = xpp / (2 * mu) - xp * xp / (4 * mu * mu * mu);
    const double p1 = x * w[i];
    const double p2 = xp * p1 * w[i] + x * p;
    out.d2mu0[i] = mupp * p1 * p1 + mup * p2;
  }
  out.w.resize(n);
  out.dw.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.w[i] = sgn * w[i];
    out.dw[i] = sgn * dw[i];
  }
  return out;
}

double N1(double mu0, double mu1, double dtheta0, double dtheta1, double j_r) {
  const double mu = mu0 + mu1;
  const double dth = dtheta0 + dtheta1 - j_r;
  const double m3 = mu0 * mu0 * mu0;
  const double a = mu, a2 = a * a, a3 = a2 * a, a4 = a3 * a, a5 = a4 * a;
  const double b = mu0, b2 = b * b, b3 = b2 * b, b4 = b3 * b, b5 = b4 * b;
  return -dtheta1 * dtheta1 / m3 + (1 / a3 - 1 / m3) * (a4 - dth * dth - a4 * a2) +
         mu1 / m3 * (a * b2 + a2 * b + a3 - 3 * b3 - a5 - a4 * b - a3 * b2 - a2 * b3 - a * b4 + 5 * b5);
}

double N2(double mu0, double mu1, double theta0, double theta1) {
  return -mu1 * mu1 * theta0 - (2 * mu0 + mu1) * mu1 * theta1;
}

CorrectedProfiles solve_corrected(const LeadingProfiles& lead, double sigma0, const CorrectedOptions& opt) {
  if (!(sigma0 > 0)) throw Error(ErrorKind::Config, "sigma0 must be positive");
  const std::size_t n = lead.eta.size();
  if (n < 10) throw Error(ErrorKind::Config, "leading profile too short");
  const double h = lead.eta[1] - lead.eta[0];
  const double sgn = lead.j_r > 0 ? -1.0 : 1.0;
  const double j_r = sgn * lead.j_r;
  std::vector<double> th0(n), p0(n);
  for (std::size_t i = 0; i < n; ++i) {
    th0[i] = sgn * lead.w[i];
    p0[i] = sgn * lead.dw[i];
  }
  const auto& mu0 = lead.mu0;

  // unknowns interleaved as (mu1_i, theta1_i)
  using SpMat = Eigen::SparseMatrix<double>;
  const auto N = static_cast<Eigen::Index>(2 * n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(12 * n);
  auto M = [](std::size_t i) { return static_cast<Eigen::Index>(2 * i); };
  auto T = [](std::size_t i) { return static_cast<Eigen::Index>(2 * i + 1); };
  const double h2 = h * h;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double c = 2 * std::sqrt(std::max(0.0, 1 - mu0[i] * mu0[i])) / mu0[i];
    trip.emplace_back(M(i), M(i - 1), -1 / (sigma0 * h2));
    trip.emplace_back(M(i), M(i), 2 / (sigma0 * h2) + 6 * mu0[i] * mu0[i] - 4);
    trip.emplace_back(M(i), M(i + 1), -1 / (sigma0 * h2));
    trip.emplace_back(M(i), T(i + 1), c / (2 * h));
    trip.emplace_back(M(i), T(i - 1), -c / (2 * h));
    trip.emplace_back(T(i), T(i - 1), -1 / h2);
    trip.emplace_back(T(i), T(i), 2 / h2 + mu0[i] * mu0[i]);
    trip.emplace_back(T(i), T(i + 1), -1 / h2);
    trip.emplace_back(T(i), M(i), 2 * mu0[i] * th0[i]);
  }
  const std::size_t e = n - 1;
  for (Eigen::Index c = 0; c < 2; ++c) {
    auto row = [c](std::size_t i) { return static_cast<Eigen::Index>(2 * i) + c; };
    trip.emplace_back(row(0), row(0), -3 / (2 * h));
    trip.emplace_back(row(0), row(1), 4 / (2 * h));
    trip.emplace_back(row(0), row(2), -1 / (2 * h));
    trip.emplace_back(row(e), row(e), 3 / (2 * h));
    trip.emplace_back(row(e), row(e - 1), -4 / (2 * h));
    trip.emplace_back(row(e), row(e - 2), 1 / (2 * h));
  }
  SpMat B(N, N);
  B.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SpMat> lu;
  lu.compute(B);
  if (lu.info() != Eigen::Success) throw Error(ErrorKind::LinearSolveFailure, "inner correction operator is singular");

  // boundary rows put mu'(0) = 0 and theta'(0) = j_r on the total profiles
  const double d0mu = (-3 * mu0[0] + 4 * mu0[1] - mu0[2]) / (2 * h);
  const double d0th = (-3 * th0[0] + 4 * th0[1] - th0[2]) / (2 * h);
  const double dEmu = (3 * mu0[e] - 4 * mu0[e - 1] + mu0[e - 2]) / (2 * h);
  const double dEth = (3 * th0[e] - 4 * th0[e - 1] + th0[e - 2]) / (2 * h);

  CorrectedProfiles out;
  out.j_r = lead.j_r;
  out.mu_j = lead.mu_j;
  out.sigma0 = sigma0;
  out.eta = lead.eta;
  Eigen::VectorXd U = Eigen::VectorXd::Zero(N), F(N);
  int increases = 0;
  bool converged = false;
  for (int it = 1; it <= opt.max_iter; ++it) {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double m1 = U[M(i)], t1 = U[T(i)];
      const double dt1 = (U[T(i + 1)] - U[T(i - 1)]) / (2 * h);
      F[M(i)] = lead.d2mu0[i] / sigma0 + N1(mu0[i], m1, p0[i], dt1, j_r);
      F[T(i)] = N2(mu0[i], m1, th0[i], t1);
    }
    F[M(0)] = -d0mu;
    F[T(0)] = j_r - d0th;
    F[M(e)] = -dEmu;
    F[T(e)] = -dEth;
    Eigen::VectorXd Un = lu.solve(F);
    if (!Un.allFinite()) throw Error(ErrorKind::LinearSolveFailure, "inner correction produced non-finite values");
    const double change = (Un - U).lpNorm<Eigen::Infinity>();
    U = Un;
    out.iterations = it;
    if (!out.trace.empty() && change > out.trace.back()) {
      if (++increases >= 3)
        throw Error(ErrorKind::ContractionFailure, "inner fixed point diverges: sigma0 = " + std::to_string(sigma0) + " is too small");
    } else {
      increases = 0;
    }
    out.trace.push_back(change);
    if (change < opt.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw Error(ErrorKind::ContractionFailure, "inner fixed point did not converge within the iteration cap");
  {
    double s = 0;
    int c = 0;
    for (std::size_t k = out.trace.size() >= 4 ? out.trace.size() - 3 : 1; k < out.trace.size(); ++k) {
      if (out.trace[k - 1] > 0) {
        s += out.trace[k] / out.trace[k - 1];
        ++c;
      }
    }
    out.contraction = c ? s / c : 0.0;
  }

  out.mu.resize(n);
  out.theta.resize(n);
  out.mu0 = mu0;
  out.theta0 = lead.w;
  std::vector<double> m1(n), t1(n);
  for (std::size_t i = 0; i < n; ++i) {
    m1[i] = U[M(i)];
    t1[i] = U[T(i)];
    out.mu[i] = mu0[i] + m1[i];
    out.theta[i] = sgn * (th0[i] + t1[i]);
  }
  out.mu1_norm = l2_norm(m1, h);
  out.theta1_norm = l2_norm(t1, h);
  return out;
}

double rho_j(double j, double rho_r) {
  const double jr = j / (rho_r * rho_r * rho_r);
  return rho_r * mu_j(jr);
}

double tail_rate(const std::vector<double>& x, const std::vector<double>& f, double lo, double hi) {
  double peak = 0;
  for (double v : f) peak = std::max(peak, std::abs(v));
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = std::abs(f[i]);
    if (a >= lo * peak && a <= hi * peak && a > 0) {
      xs.push_back(x[i]);
      ys.push_back(f[i]);
    }
  }
  if (xs.size() < 3) return 0.0;
  return loglinear_slope(xs, ys);
}

double PhysicalInnerProfiles::value(const std::vector<double>& f, double t) const {
  const std::size_t n = tau.size();
  const double h = tau[1] - tau[0];
  if (t >= tau.back()) return f.back();
  if (t <= 0) return f.front();
  const double x = t / h;
  auto i = static_cast<std::ptrdiff_t>(std::floor(x)) - 1;
  i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 4);
  double v = 0;
  for (int a = 0; a < 4; ++a) {
    double l = 1;
    for (int b = 0; b < 4; ++b)
      if (b != a) l *= (x - static_cast<double>(i + b)) / static_cast<double>(a - b);
    v += l * f[static_cast<std::size_t>(i + a)];
  }
  return v;
}

PhysicalInnerProfiles unscale(const CorrectedProfiles& c, const InnerParams& p) {
  PhysicalInnerProfiles out;
  const double rr = p.rho_r, s0 = c.sigma0, sq0 = std::sqrt(s0);
  const double j = c.j_r * rr * rr * rr;
  out.j = j;
  out.rho_r = rr;
  out.sigma0 = s0;
  out.dzeta_dt0 = p.dzeta_dt0;
  out.rho_j = rr * c.mu_j;
  const std::size_t n = c.eta.size();
  const double h = c.eta[1] - c.eta[0];
  auto dth = nodal_derivative(c.theta, h);
  dth[0] = c.j_r;
  out.tau.resize(n);
  out.rho_i0.resize(n);
  out.phi_i0.resize(n);
  out.dphi_i0.resize(n);
  out.dupsilon_i0.resize(n);
  out.upsilon_i0.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out.tau[i] = sq0 * c.eta[i] / rr;
    out.rho_i0[i] = rr * c.mu[i];
    out.phi_i0[i] = rr * rr * c.theta[i] / sq0;
    out.dphi_i0[i] = rr * rr * rr * dth[i] / s0;
    out.dupsilon_i0[i] = (s0 * out.dphi_i0[i] - j) / sq(out.rho_i0[i]) - p.dzeta_dt0;
  }
  const double dt = out.tau[1] - out.tau[0];
  for (std::size_t i = n - 1; i-- > 0;)
    out.upsilon_i0[i] = out.upsilon_i0[i + 1] - 0.5 * dt * (out.dupsilon_i0[i] + out.dupsilon_i0[i + 1]);
  out.decay_rate_phi = tail_rate(out.tau, out.phi_i0);
  std::vector<double> dr(n);
  for (std::size_t i = 0; i < n; ++i) dr[i] = out.rho_i0[i] - out.rho_j;
  out.decay_rate_rho = tail_rate(out.tau, dr);
  return out;
}

std::vector<double> branch_consistency(const PhysicalInnerProfiles& p) {
  const std::size_t n = p.tau.size();
  const double dt = p.tau[1] - p.tau[0];
  std::vector<double> r;
  r.reserve(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double rho = p.rho_i0[i];
    const double d2 = (p.rho_i0[i + 1] - 2 * rho + p.rho_i0[i - 1]) / (dt * dt);
    const double cur = p.sigma0 * p.dphi_i0[i] - p.j;
    r.push_back(p.rho_r * p.rho_r - cur * cur / sq(sq(rho)) - rho * rho + d2 / rho);
  }
  return r;
}

std::vector<double> elliptic_residual(const PhysicalInnerProfiles& p) {
  const std::size_t n = p.tau.size();
  const double dt = p.tau[1] - p.tau[0];
  std::vector<double> r;
  r.reserve(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double d2 = (p.phi_i0[i + 1] - 2 * p.phi_i0[i] + p.phi_i0[i - 1]) / (dt * dt);
    r.push_back(-p.sigma0 * d2 + sq(p.rho_i0[i]) * p.phi_i0[i]);
  }
  return r;
}

StationResult solve_station(const InnerParams& p, const SweepOptions& opt) {
  StationResult r;
  r.params = p;
  const auto lead = solve_leading(p.j_r, opt.leading);
  const auto corr = solve_corrected(lead, p.sigma0, opt.corrected);
  r.mu_j = lead.mu_j;
  r.w0 = lead.w[0];
  r.leading_iterations = lead.newton_iterations;
  r.corrected_iterations = corr.iterations;
  r.contraction = corr.contraction;
  r.mu1_norm = corr.mu1_norm;
  r.profile = unscale(corr, p);
  if (opt.tau_keep > 0) {
    auto& f = r.profile;
    const auto it = std::upper_bound(f.tau.begin(), f.tau.end(), opt.tau_keep);
    const auto keep = std::max<std::size_t>(4, static_cast<std::size_t>(it - f.tau.begin()) + 2);
    if (keep < f.tau.size()) {
      for (auto* v : {&f.tau, &f.rho_i0, &f.phi_i0, &f.dphi_i0, &f.dupsilon_i0, &f.upsilon_i0}) v->resize(keep);
    }
  }
  return r;
}

std::vector<StationResult> sweep(const outer::BoundaryTrace& tr, double sigma0, const SweepOptions& opt) {
  const std::size_t n = tr.s.size();
  std::vector<StationResult> out(n);
  std::vector<std::exception_ptr> err(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        InnerParams p;
        p.rho_r = tr.rho_r[k];
        p.j_r = tr.j[k] / (p.rho_r * p.rho_r * p.rho_r);
        p.sigma0 = sigma0;
        p.dzeta_dt0 = tr.zeta_t[k];
        out[k] = solve_station(p, opt);
      } catch (...) {
        err[k] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace sc::inner
