#include <catch_amalgamated.hpp>

#include <cmath>

#include "sc/outer.hpp"

using namespace sc;
using namespace sc::outer;
using Catch::Approx;

namespace {

// Root of a - a^3 = j on (0, 1/sqrt 3) by bisection; independent of the solver.
double slope_root(double j) {
  double lo = 0, hi = 1 / std::sqrt(3.0);
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (m - m * m * m < j ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> strip_current(const mesh::Mesh& m, double j) {
  std::vector<double> b(m.boundary.size());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = j * m.boundary_normal[k].x;
  return b;
}

struct Case {
  mesh::Mesh m;
  std::vector<double> j;
};

Case disk_case(double h, double amp = 0.2) {
  auto g = geometry::build_boundary(geometry::circle_samples(1.0, {0, 0}, 256));
  auto m = mesh::make_star_mesh_h(g, h);
  auto c = feasibility::make_current(g, {"arcs", amp, 1, 0.0, 0.5, 0.0, 0.15});
  auto j = current_on_mesh(m, g, c);
  return {std::move(m), std::move(j)};
}

double max_abs(const std::vector<double>& v) {
  double a = 0;
  for (double x : v) a = std::max(a, std::abs(x));
  return a;
}

}  // namespace

TEST_CASE("assemble_A") {
  auto I = assemble_A({0, 0});
  CHECK(I.a11 == 1.0);
  CHECK(I.a12 == 0.0);
  CHECK(I.a22 == 1.0);
  CHECK(I.positive_definite);

  auto A = assemble_A({0.5, 0});
  CHECK(A.a11 == Approx(0.25).margin(1e-15));
  CHECK(A.a22 == Approx(0.75).margin(1e-15));
  CHECK(A.a12 == 0.0);

  const double c = 1 / std::sqrt(3.0);
  auto T = assemble_A({c / std::sqrt(2.0), c / std::sqrt(2.0)});
  CHECK(std::abs(T.eig_par) < 1e-14);
  CHECK_FALSE(T.positive_definite);

  // eigenpairs against direct application
  Vec2 z{0.2, -0.35};
  auto B = assemble_A(z);
  const double r2 = dot(z, z);
  Vec2 zn = (1 / std::sqrt(r2)) * z, zp{-zn.y, zn.x};
  Vec2 Az = B.apply(zn), Ap = B.apply(zp);
  CHECK(Az.x == Approx((1 - 3 * r2) * zn.x).margin(1e-14));
  CHECK(Az.y == Approx((1 - 3 * r2) * zn.y).margin(1e-14));
  CHECK(Ap.x == Approx((1 - r2) * zp.x).margin(1e-14));
  CHECK(Ap.y == Approx((1 - r2) * zp.y).margin(1e-14));
  CHECK(B.eig_par == Approx(1 - 3 * r2));
  CHECK(B.eig_perp == Approx(1 - r2));
}

TEST_CASE("zero current gives zero zeta") {
  auto m = mesh::make_rect_mesh(1.0, 1.0, 16, 16, true);
  auto s = solve_zeta(m, std::vector<double>(m.boundary.size(), 0.0));
  CHECK(max_abs(s.zeta) == 0.0);
  auto mg = max_gradient_check(m, s.zeta);
  CHECK(mg.value == 0.0);
  auto z1 = solve_zeta1(m, s.zeta);
  CHECK(max_abs(z1.zeta1) == 0.0);
  auto F = outer_fields(m, s.zeta, z1.zeta1, 0.02, std::vector<double>(m.boundary.size(), 0.0));
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(F.rho_o[i] == 1.0);
    CHECK(F.chi_o[i] == 0.0);
  }
}

TEST_CASE("periodic strip matches the cubic root") {
  const double a = slope_root(0.3);
  CHECK(a - a * a * a == Approx(0.3).margin(1e-14));
  auto m = mesh::make_rect_mesh(1.0, 1.0, 64, 64, true);
  auto j = strip_current(m, 0.3);
  auto s = solve_zeta(m, j);
  CHECK(std::abs(s.max_grad - a) < 1e-9);
  CHECK(s.residual_interior < 1e-8);
  CHECK(s.flux_mismatch < 1e-6);
  CHECK(std::abs(m.mean(s.zeta)) < 1e-12);
  // accepted steps stay inside the ellipticity region, and Newton never raises the energy
  for (const auto& st : s.mu_path) {
    CHECK(st.max_grad < kEllipticGradient - ContinuationOptions{}.safeguard);
    CHECK(st.energy <= st.energy_predictor + 1e-12);
  }
  CHECK(s.mu_path.back().mu == 1.0);

  auto mg = max_gradient_check(m, s.zeta);
  CHECK(mg.value == Approx(a).epsilon(1e-8));

  SECTION("zeta1 and outer fields") {
    auto z1 = solve_zeta1(m, s.zeta);
    CHECK(max_abs(z1.zeta1) < 1e-10);
    auto F = outer_fields(m, s.zeta, z1.zeta1, 0.05, j);
    for (std::size_t i = 0; i < m.size(); ++i) {
      CHECK(F.rho0[i] == Approx(std::sqrt(1 - a * a)).epsilon(1e-8));
      CHECK(std::abs(F.rho1[i]) < 1e-6);
      CHECK(std::abs(1 - F.rho0[i] * F.rho0[i] - F.zeta_x[i] * F.zeta_x[i] - F.zeta_y[i] * F.zeta_y[i]) < 1e-14);
    }
  }
}

TEST_CASE("strip ramped to the critical current loses ellipticity") {
  auto m = mesh::make_rect_mesh(1.0, 1.0, 32, 32, true);
  auto j = strip_current(m, kCriticalCurrent * (1 - 1e-3));
  try {
    solve_zeta(m, j);
    FAIL("expected LossOfEllipticity");
  } catch (const LossOfEllipticity& e) {
    CHECK(e.last_good_max_grad < kEllipticGradient);
    CHECK(kEllipticGradient - e.last_good_max_grad < 2e-2);
    CHECK(e.last_good_mu < 1.0);
    // the last accepted slope is the oracle root at the reported amplitude
    CHECK(e.last_good_max_grad == Approx(slope_root(e.last_good_mu * kCriticalCurrent * (1 - 1e-3))).epsilon(1e-8));
  }
}

TEST_CASE("maximum of |grad zeta| sits on the boundary") {
  SECTION("disk with inlet and outlet arcs") {
    auto c = disk_case(0.05);
    auto s = solve_zeta(c.m, c.j);
    CHECK(s.max_grad < kEllipticGradient);
    auto mg = max_gradient_check(c.m, s.zeta);
    CHECK(mg.in_band);
    CHECK(mg.rank <= 1);
  }
  SECTION("ellipse with a cosine profile") {
    auto g = geometry::build_boundary(geometry::ellipse_samples(1.5, 1.0, {0, 0}, 256));
    auto m = mesh::make_star_mesh_h(g, 0.05);
    auto j = current_on_mesh(m, g, feasibility::make_current(g, {"cosine", 0.25, 2, 0.3}));
    auto s = solve_zeta(m, j);
    auto mg = max_gradient_check(m, s.zeta);
    CHECK(mg.in_band);
  }
  SECTION("stadium with offset arcs") {
    auto g = geometry::build_boundary(geometry::stadium_samples(1.0, 0.8, 256));
    auto m = mesh::make_star_mesh_h(g, 0.05);
    auto j = current_on_mesh(m, g, feasibility::make_current(g, {"arcs", 0.3, 1, 0.0, 0.1, 0.6, 0.12}));
    auto s = solve_zeta(m, j);
    auto mg = max_gradient_check(m, s.zeta);
    CHECK(mg.in_band);
  }
  SECTION("an interior maximum is reported") {
    auto m = mesh::make_rect_mesh(1.0, 1.0, 16, 16, true);
    std::vector<double> bump(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double x = m.nodes[i].x - 0.5;
      bump[i] = 0.1 * std::exp(-40 * x * x) * x;  // steepest at x = 0.5
    }
    CHECK_THROWS_AS(max_gradient_check(m, bump), Error);
    auto r = max_gradient_check(m, bump, 1, 1e-9, false);
    CHECK_FALSE(r.in_band);
  }
}

TEST_CASE("disk solution: uniqueness, descent, zeta1") {
  auto c = disk_case(0.05);
  auto s = solve_zeta(c.m, c.j);
  CHECK(s.residual_interior < 1e-8);
  CHECK(s.flux_mismatch < 1e-6);

  SECTION("perturbed restarts converge to the same zeta") {
    for (int k = 1; k <= 3; ++k) {
      auto z = s.zeta;
      for (std::size_t i = 0; i < z.size(); ++i)
        z[i] += 0.02 * std::sin(k * 3.0 * c.m.nodes[i].x + 1.7 * c.m.nodes[i].y);
      REQUIRE(max_element_gradient(c.m, z) < kEllipticGradient);
      REQUIRE(newton_fixed_mu(c.m, c.j, 1.0, z, ContinuationOptions{}));
      c.m.project_mean_zero(z);  // zeta is defined up to a constant
      double d = 0;
      for (std::size_t i = 0; i < z.size(); ++i) d = std::max(d, std::abs(z[i] - s.zeta[i]));
      CHECK(d < 1e-6);
    }
  }
  SECTION("energy descent agrees with Newton") {
    auto d = solve_zeta_descent(c.m, c.j);
    CHECK(d.converged);
    double diff = 0;
    for (std::size_t i = 0; i < d.zeta.size(); ++i) diff = std::max(diff, std::abs(d.zeta[i] - s.zeta[i]));
    CHECK(diff < 1e-7);
    CHECK(d.energy == Approx(energy(c.m, c.j, 1.0, s.zeta)).epsilon(1e-10));
  }
  SECTION("Jacobi-preconditioned CG matches the direct solve") {
    ContinuationOptions cg;
    cg.linear_solver = LinearSolver::DiagonalCG;
    auto t = solve_zeta(c.m, c.j, cg);
    double d = 0;
    for (std::size_t i = 0; i < t.zeta.size(); ++i) d = std::max(d, std::abs(t.zeta[i] - s.zeta[i]));
    CHECK(d < 1e-9);
    auto a = solve_zeta1(c.m, s.zeta), b = solve_zeta1(c.m, s.zeta, cg);
    d = 0;
    for (std::size_t i = 0; i < a.zeta1.size(); ++i) d = std::max(d, std::abs(a.zeta1[i] - b.zeta1[i]));
    CHECK(d < 1e-9);
  }
  SECTION("zeta1 is nonzero and compatible") {
    auto z1 = solve_zeta1(c.m, s.zeta);
    CHECK(max_abs(z1.zeta1) > 1e-4);
    CHECK(z1.compatibility < 1e-10);
    CHECK(z1.residual < 1e-8);
    CHECK(std::abs(c.m.mean(z1.zeta1)) < 1e-12);
  }
  SECTION("outer defects shrink with eps") {
    auto z1 = solve_zeta1(c.m, s.zeta);
    std::vector<double> n1, n2;
    for (double eps : {0.04, 0.02, 0.01}) {
      auto F = outer_fields(c.m, s.zeta, z1.zeta1, eps, c.j);
      for (std::size_t i = 0; i < c.m.size(); ++i) {
        const double g2 = F.zeta_x[i] * F.zeta_x[i] + F.zeta_y[i] * F.zeta_y[i];
        CHECK(std::abs(1 - F.rho0[i] * F.rho0[i] - g2) < 1e-14);
        CHECK(F.rho0[i] * F.rho0[i] > 2.0 / 3.0);
      }
      n1.push_back(max_abs(F.g1));
      n2.push_back(max_abs(F.g2));
    }
    for (int k = 0; k < 2; ++k) {
      CHECK(n1[k] / n1[k + 1] >= 3.0);
      CHECK(n1[k] / n1[k + 1] <= 5.0);
      // the eps^2 part of the divergence defect cancels through the zeta1 equation
      CHECK(n2[k] / n2[k + 1] >= 6.0);
      CHECK(n2[k] / n2[k + 1] <= 10.0);
    }
  }
}

TEST_CASE("conormal root") {
  CHECK(std::abs(conormal_root(1.0, 0.0)) < 1e-15);
  for (double jn : {-0.3, -0.1, 0.05, 0.25}) {
    const double rr = 0.95;
    const double x = conormal_root(rr, jn);
    CHECK((rr * rr - x * x) * x == Approx(jn).margin(1e-13));
    CHECK(std::abs(x) < rr / std::sqrt(3.0));
  }
  CHECK_THROWS_AS(conormal_root(0.9, 0.9 * 0.9 * 0.9 * kCriticalCurrent * 1.01), Error);
}

TEST_CASE("boundary identities converge at first order on the disk") {
  std::vector<double> rms;
  for (double h : {0.05, 0.025}) {
    auto c = disk_case(h);
    auto s = solve_zeta(c.m, c.j);
    auto id = boundary_identities(c.m, s.zeta, c.j);
    CHECK(std::isfinite(id.rms_1));
    rms.push_back(id.rms_2);
  }
  const double ratio = rms[0] / rms[1];
  CHECK(ratio >= 1.6);
  CHECK(ratio <= 2.5);
}
