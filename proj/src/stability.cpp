#include "sc/stability.hpp"

#include <Eigen/SparseLU>
#include <Eigen/Sparse>
#include <cmath>
#include <limits>
#include <numbers>

#include "sc/common.hpp"

namespace sc::stability {

double steady_amplitude(double beta) { return std::sqrt(1.0 - beta * beta); }

double mode_wavenumber(int n, double l, double eps) { return eps * n * std::numbers::pi / l; }

ModeResult eigenvalues(double beta, double sigma, double gamma) {
  const double r2 = 1.0 - beta * beta;
  const double c1 = r2 * (1.0 + 1.0 / (2.0 * sigma));
  const double c2 = r2 * (1.0 - 1.0 / (2.0 * sigma));
  const double c3 = r2 / sigma;
  const double g2 = gamma * gamma;
  ModeResult m;
  m.gamma = gamma;
  m.discriminant = c2 * c2 + 4.0 * beta * beta * (g2 + c3);
  const double root = std::sqrt(m.discriminant);
  m.lambda_plus = g2 + c1 + root;
  // lambda_- = [(g2+c1)^2 - D] / (g2+c1+root); the numerator expanded to avoid cancellation.
  const double num = g2 * g2 + (2.0 * c1 - 4.0 * beta * beta) * g2 + 2.0 * c3 * (1.0 - 3.0 * beta * beta);
  m.lambda_minus = num / (g2 + c1 + root);
  if (beta == 0.0 || gamma == 0.0) {
    m.degenerate = true;
    const double inf = std::numeric_limits<double>::infinity();
    if (beta == 0.0 && c2 > 0) {
      m.A_plus = inf;
      m.A_minus = 0.0;
    } else if (beta == 0.0 && c2 < 0) {
      m.A_plus = 0.0;
      m.A_minus = -inf;
    } else if (beta == 0.0) {
      const double a = gamma > 0 ? std::sqrt(g2 + c3) / gamma : inf;
      m.A_plus = a;
      m.A_minus = -a;
    } else {
      m.A_plus = inf;
      m.A_minus = -inf;
    }
  } else {
    m.A_plus = (c2 + root) / (2.0 * beta * gamma);
    m.A_minus = (c2 - root) / (2.0 * beta * gamma);
  }
  return m;
}

double lambda_minus_zero(double beta, double sigma) {
  const double r2 = 1.0 - beta * beta;
  const double a = r2 * (1.0 + 1.0 / (2.0 * sigma));
  const double c = 2.0 * r2 * (1.0 - 3.0 * beta * beta) / sigma;
  return c / (a + std::sqrt(a * a - c));
}

double threshold_beta(double sigma, double tol) {
  double lo = 0.0, hi = 0.999;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (lambda_minus_zero(mid, sigma) > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Marginal: return "marginal";
    case Verdict::Unstable: return "unstable";
  }
  return "?";
}

VerdictResult stability_verdict(double beta, double sigma, double l, double eps, int n_max, double marginal_tol) {
  VerdictResult r;
  r.lambda_minus_zero = lambda_minus_zero(beta, sigma);
  r.min_lambda_minus = r.lambda_minus_zero;
  r.argmin_mode = 0;
  for (int n = 1; n <= n_max; ++n) {
    r.modes.push_back(eigenvalues(beta, sigma, mode_wavenumber(n, l, eps)));
    if (r.modes.back().lambda_minus < r.min_lambda_minus) {
      r.min_lambda_minus = r.modes.back().lambda_minus;
      r.argmin_mode = n;
    }
  }
  if (std::abs(r.min_lambda_minus) <= marginal_tol) r.verdict = Verdict::Marginal;
  else r.verdict = r.min_lambda_minus > 0 ? Verdict::Stable : Verdict::Unstable;
  return r;
}

namespace {

struct Stepper {
  int N;
  double H, beta, sigma, rho_s, J;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  std::vector<double> trap;  // trapezoid weights

  // Unknown layout: a_i at 2i, b_i at 2i+1, i = 0..N.
  Stepper(int n, double h, double b, double s, double dt, double j) : N(n), H(h), beta(b), sigma(s), J(j) {
    rho_s = steady_amplitude(beta);
    trap.assign(N + 1, H);
    trap[0] = trap[N] = 0.5 * H;
    const int M = 2 * (N + 1);
    std::vector<Eigen::Triplet<double>> t;
    const double ih2 = 1.0 / (H * H), ih = 1.0 / (2.0 * H);
    auto A = [](int i) { return 2 * i; };
    auto B = [](int i) { return 2 * i + 1; };
    t.emplace_back(A(0), A(0), 1.0);
    t.emplace_back(A(N), A(N), 1.0);
    for (int i = 1; i < N; ++i) {
      // (I - dt L) on a: a'' - 2 beta b' - beta^2 a
      t.emplace_back(A(i), A(i), 1.0 + dt * (2.0 * ih2 + beta * beta));
      t.emplace_back(A(i), A(i - 1), -dt * ih2);
      t.emplace_back(A(i), A(i + 1), -dt * ih2);
      t.emplace_back(A(i), B(i + 1), dt * 2.0 * beta * ih);
      t.emplace_back(A(i), B(i - 1), -dt * 2.0 * beta * ih);
    }
    for (int i = 0; i <= N; ++i) {
      // (I - dt L) on b: b'' + 2 beta a' - beta^2 b; even reflection of b, odd reflection of a - rho_s.
      t.emplace_back(B(i), B(i), 1.0 + dt * (2.0 * ih2 + beta * beta));
      if (i == 0) {
        t.emplace_back(B(i), B(1), -2.0 * dt * ih2);
        t.emplace_back(B(i), A(1), -dt * 2.0 * beta / H);
        t.emplace_back(B(i), A(0), dt * 2.0 * beta / H);
      } else if (i == N) {
        t.emplace_back(B(i), B(N - 1), -2.0 * dt * ih2);
        t.emplace_back(B(i), A(N), -dt * 2.0 * beta / H);
        t.emplace_back(B(i), A(N - 1), dt * 2.0 * beta / H);
      } else {
        t.emplace_back(B(i), B(i - 1), -dt * ih2);
        t.emplace_back(B(i), B(i + 1), -dt * ih2);
        t.emplace_back(B(i), A(i + 1), -dt * 2.0 * beta * ih);
        t.emplace_back(B(i), A(i - 1), dt * 2.0 * beta * ih);
      }
    }
    Eigen::SparseMatrix<double> m(M, M);
    m.setFromTriplets(t.begin(), t.end());
    lu.compute(m);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::LinearSolveFailure, "evolve_1d: factorization failed");
  }

  // sigma phi' = a b' - b a' + beta |w|^2 - J, integrated over cells, then gauge-projected.
  double potential(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& phi) const {
    phi.assign(N + 1, 0.0);
    for (int i = 0; i < N; ++i) {
      const double am = 0.5 * (a[i] + a[i + 1]), bm = 0.5 * (b[i] + b[i + 1]);
      const double da = (a[i + 1] - a[i]) / H, db = (b[i + 1] - b[i]) / H;
      const double g = am * db - bm * da + beta * (am * am + bm * bm) - J;
      phi[i + 1] = phi[i] + H * g / sigma;
    }
    double num = 0, den = 0;
    for (int i = 0; i <= N; ++i) {
      const double m2 = a[i] * a[i] + b[i] * b[i];
      num += trap[i] * m2 * phi[i];
      den += trap[i] * m2;
    }
    const double c = -num / den;
    double g = 0;
    for (int i = 0; i <= N; ++i) {
      phi[i] += c;
      g += trap[i] * (a[i] * a[i] + b[i] * b[i]) * phi[i];
    }
    return g / (N * H);
  }

  double perturbation_norm(const std::vector<double>& a, const std::vector<double>& b) const {
    double bm = 0, L = N * H;
    for (int i = 0; i <= N; ++i) bm += trap[i] * b[i];
    bm /= L;
    double s = 0;
    for (int i = 0; i <= N; ++i) s += trap[i] * ((a[i] - rho_s) * (a[i] - rho_s) + (b[i] - bm) * (b[i] - bm));
    return std::sqrt(s);
  }
};

}  // namespace

EvolveResult evolve_1d(const StabilityInput& in, double T, double dt, const EvolveOptions& opt) {
  if (!(in.beta >= 0 && in.beta < 1) || in.sigma <= 0 || in.l <= 0 || in.eps <= 0 || dt <= 0 || T <= 0)
    throw Error(ErrorKind::Config, "evolve_1d: invalid input");
  const int N = opt.n_cells;
  const double L = in.l / in.eps;
  const double H = L / N;
  const double rho_s = steady_amplitude(in.beta);
  const double J = opt.J < 0 ? in.beta * rho_s * rho_s : opt.J;
  Stepper st(N, H, in.beta, in.sigma, dt, J);

  const double gamma = mode_wavenumber(opt.mode, in.l, in.eps);
  std::vector<double> a(N + 1, rho_s), b(N + 1, 0.0), phi;
  if (opt.perturb) {
    for (int i = 0; i <= N; ++i) {
      const double X = i * H;
      a[i] += opt.amplitude * std::sin(gamma * X);
      b[i] += opt.amplitude * opt.mix * std::cos(gamma * X);
    }
    a[0] = a[N] = rho_s;
  }

  EvolveResult res;
  res.predicted_rate = -eigenvalues(in.beta, in.sigma, gamma).lambda_minus;
  const long steps = std::lround(T / dt);
  Eigen::VectorXd rhs(2 * (N + 1));
  double prev_norm = st.perturbation_norm(a, b);
  int blowups = 0;
  double gauge = st.potential(a, b, phi);
  res.max_gauge_avg = std::abs(gauge);
  res.times.push_back(0.0);
  res.norms.push_back(prev_norm);
  for (long n = 1; n <= steps; ++n) {
    for (int i = 0; i <= N; ++i) {
      const double m = 1.0 - (a[i] * a[i] + b[i] * b[i]);
      rhs[2 * i] = a[i] + dt * (a[i] * m + phi[i] * b[i]);
      rhs[2 * i + 1] = b[i] + dt * (b[i] * m - phi[i] * a[i]);
    }
    rhs[0] = rho_s;
    rhs[2 * N] = rho_s;
    const Eigen::VectorXd x = st.lu.solve(rhs);
    for (int i = 0; i <= N; ++i) {
      a[i] = x[2 * i];
      b[i] = x[2 * i + 1];
    }
    gauge = st.potential(a, b, phi);
    res.max_gauge_avg = std::max(res.max_gauge_avg, std::abs(gauge));
    const double nrm = st.perturbation_norm(a, b);
    if (!std::isfinite(nrm) || (nrm > 1e-12 && nrm > 2.0 * prev_norm)) {
      if (++blowups >= 3 || !std::isfinite(nrm))
        throw Error(ErrorKind::Stiffness, "evolve_1d: norm blow-up; retry with dt <= " + std::to_string(dt / 4));
    } else {
      blowups = 0;
    }
    prev_norm = nrm;
    if (n % opt.record_every == 0 || n == steps) {
      res.times.push_back(n * dt);
      res.norms.push_back(nrm);
    }
  }

  std::vector<double> ft, fn;
  const double t0 = opt.fit_start_fraction * T;
  for (std::size_t k = 0; k < res.times.size(); ++k)
    if (res.times[k] >= t0 && res.norms[k] > 1e-300) {
      ft.push_back(res.times[k]);
      fn.push_back(res.norms[k]);
    }
  res.fitted_rate = ft.size() >= 2 ? loglinear_slope(ft, fn) : 0.0;

  res.final_state.time = steps * dt;
  res.final_state.J = J;
  res.final_state.gauge_avg = gauge;
  res.final_state.phi = phi;
  res.final_state.u.resize(N + 1);
  for (int i = 0; i <= N; ++i) res.final_state.u[i] = {a[i], b[i]};
  return res;
}

}  // namespace sc::stability
