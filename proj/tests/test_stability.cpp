#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sc/stability.hpp"

using namespace sc::stability;
using Catch::Approx;

namespace {

// Unrationalised textbook form, used as an independent route.
double naive_lambda(double b, double s, double g, int sign) {
  const double r2 = 1 - b * b;
  const double d = r2 * r2 * std::pow(1 - 1 / (2 * s), 2) + 4 * b * b * (g * g + r2 / s);
  return g * g + r2 * (1 + 1 / (2 * s)) + sign * std::sqrt(d);
}

// Linearised 1D operator applied to v = sin(gx) + i A cos(gx) with analytic derivatives and a
// quadrature for the potential; returns max |(L v) + lambda v| over sample points.
double mode_residual(double b, double s, double g, double A, double lambda) {
  const double rho = std::sqrt(1 - b * b);
  const double len = 2 * M_PI / g;
  const int n = 20000;
  const double h = len / n;
  std::vector<double> phi(n + 1, 0.0);
  auto dphi = [&](double x) {
    const double vr = std::sin(g * x), dvi = -A * g * std::sin(g * x);
    return (rho * dvi + 2 * b * rho * vr) / s;
  };
  for (int i = 0; i < n; ++i) {
    const double x0 = i * h;  // Simpson on each cell
    phi[i + 1] = phi[i] + h / 6 * (dphi(x0) + 4 * dphi(x0 + h / 2) + dphi(x0 + h));
  }
  double mean = 0;
  for (int i = 0; i < n; ++i) mean += phi[i] / n;
  double res = 0;
  for (int i = 0; i <= n; i += 50) {
    const double x = i * h, p = phi[i] - mean;
    const double vr = std::sin(g * x), vi = A * std::cos(g * x);
    const double vr2 = -g * g * vr, vi2 = -g * g * vi, vr1 = g * std::cos(g * x), vi1 = -A * g * std::sin(g * x);
    const double lr = vr2 - 2 * b * vi1 - 2 * rho * rho * vr;
    const double li = vi2 + 2 * b * vr1 - rho * p;
    res = std::max({res, std::abs(lr + lambda * vr), std::abs(li + lambda * vi)});
  }
  return res;
}

}  // namespace

TEST_CASE("eigenvalues closed forms") {
  SECTION("beta = 0, sigma = 1, gamma = 0") {
    auto m = eigenvalues(0.0, 1.0, 0.0);
    CHECK(m.lambda_minus == Approx(1.0).epsilon(1e-14));
    CHECK(m.lambda_plus == Approx(2.0).epsilon(1e-14));
    CHECK(m.degenerate);
  }
  SECTION("rationalised lambda_minus agrees with the direct form") {
    for (double b : {0.1, 0.3, 0.5, 0.7, 0.9})
      for (double s : {0.3, 1.0, 7.0})
        for (double g : {0.05, 0.5, 2.0}) {
          auto m = eigenvalues(b, s, g);
          CHECK(m.lambda_minus == Approx(naive_lambda(b, s, g, -1)).margin(1e-12));
          CHECK(m.lambda_plus == Approx(naive_lambda(b, s, g, +1)).margin(1e-12));
        }
  }
  SECTION("lambda_minus_zero matches the small-gamma limit") {
    for (double b : {0.2, 0.5, 0.6, 0.8})
      for (double s : {0.5, 1.0, 5.0}) CHECK(lambda_minus_zero(b, s) == Approx(eigenvalues(b, s, 1e-7).lambda_minus).margin(1e-10));
  }
  SECTION("threshold is 1/sqrt3 for every sigma") {
    for (double s : {0.5, 1.0, 5.0, 50.0}) CHECK(std::abs(threshold_beta(s) - 1 / std::sqrt(3.0)) < 1e-10);
    CHECK(std::abs(lambda_minus_zero(1 / std::sqrt(3.0), 2.0)) < 1e-12);
  }
  SECTION("discriminant nonnegative and lambda+ > lambda- on a 1000 point grid") {
    int count = 0;
    for (int i = 0; i < 10; ++i)
      for (int k = 0; k < 10; ++k)
        for (int q = 0; q < 10; ++q) {
          const double b = 0.99 * i / 9, s = 0.05 * std::pow(2.0, k), g = 0.01 + 0.3 * q;
          auto m = eigenvalues(b, s, g);
          CHECK(m.discriminant >= 0);
          CHECK(m.lambda_plus >= m.lambda_minus);
          ++count;
        }
    CHECK(count == 1000);
  }
  SECTION("mode constants are distinct and satisfy the linearised operator") {
    for (double b : {0.3, 0.5, 0.65})
      for (double s : {0.5, 1.0, 5.0})
        for (int n = 1; n <= 4; ++n) {
          const double g = mode_wavenumber(n, 1.0, 0.1);
          auto m = eigenvalues(b, s, g);
          CHECK(m.A_plus != m.A_minus);
          CHECK(mode_residual(b, s, g, m.A_plus, m.lambda_minus) < 1e-8);
          CHECK(mode_residual(b, s, g, m.A_minus, m.lambda_plus) < 1e-8);
        }
  }
}

TEST_CASE("stability verdicts") {
  CHECK(stability_verdict(0.5, 1.0, 1.0, 0.1, 20).verdict == Verdict::Stable);
  auto u = stability_verdict(0.65, 1.0, 1.0, 0.1, 20);
  CHECK(u.verdict == Verdict::Unstable);
  CHECK(u.lambda_minus_zero < 0);
  auto mg = stability_verdict(1 / std::sqrt(3.0), 1.0, 1.0, 0.1, 20);
  CHECK(mg.verdict == Verdict::Marginal);
  CHECK(std::abs(mg.min_lambda_minus) < 1e-12);
}

TEST_CASE("evolve_1d") {
  StabilityInput in;
  in.l = 1.0;
  in.eps = 0.1;
  SECTION("steady state does not drift") {
    in.beta = 0.5;
    EvolveOptions o;
    o.perturb = false;
    auto r = evolve_1d(in, 20.0, 0.01, o);
    for (double v : r.norms) CHECK(v < 1e-8);
    CHECK(r.max_gauge_avg < 1e-12);
  }
  SECTION("decay rate at beta = 0.5 matches -lambda_minus(gamma_1)") {
    in.beta = 0.5;
    in.sigma = 1.0;
    auto r = evolve_1d(in, 30.0, 0.01);
    const double pred = -eigenvalues(0.5, 1.0, mode_wavenumber(1, 1.0, 0.1)).lambda_minus;
    CHECK(r.fitted_rate < 0);
    CHECK(std::abs(r.fitted_rate - pred) < 0.1 * std::abs(pred));
  }
  SECTION("growth at beta = 0.65") {
    in.beta = 0.65;
    auto r = evolve_1d(in, 30.0, 0.01);
    CHECK(r.fitted_rate > 0);
  }
  SECTION("fitted sign matches the verdict across a beta-sigma grid") {
    for (double b : {0.45, 0.55, 0.7})
      for (double s : {0.5, 1.0, 5.0}) {
        in.beta = b;
        in.sigma = s;
        auto r = evolve_1d(in, 30.0, 0.01);
        auto v = stability_verdict(b, s, in.l, in.eps, 20);
        CHECK((r.fitted_rate > 0) == (v.min_lambda_minus < 0));
      }
  }
}
