// Acceptance run: one PASS/FAIL line per criterion, with the measured numbers.
// Exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sc/composite.hpp"
#include "sc/config.hpp"
#include "sc/feasibility.hpp"
#include "sc/inner.hpp"
#include "sc/io.hpp"
#include "sc/outer.hpp"
#include "sc/pipeline.hpp"
#include "sc/stability.hpp"

using namespace sc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// Bisection roots used as independent oracles.
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

struct DiskCase {
  geometry::BoundaryGeometry g;
  mesh::Mesh m;
  std::vector<double> j;
};

DiskCase disk(double h, double amp = 0.2) {
  auto g = geometry::build_boundary(geometry::circle_samples(1.0, {0, 0}, 256));
  auto m = mesh::make_star_mesh_h(g, h);
  auto j = outer::current_on_mesh(m, g, feasibility::make_current(g, {"arcs", amp, 1, 0.0, 0.5, 0.0, 0.15}));
  return {std::move(g), std::move(m), std::move(j)};
}

double d0(const std::vector<double>& f, double h) { return (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h); }

Outcome critical_constant() {
  const double c = feasibility::critical_current(), exact = 2 / (3 * std::sqrt(3.0));
  const double err = std::abs(c - exact);
  return {err <= 1e-12, fmt("max(t - t^3) = %.17g, |error| = %.2e", c, err)};
}

Outcome strip_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  auto m = mesh::make_rect_mesh(1.0, 1.0, 128, 128, true);
  const double a = slope_root(0.3);
  const auto s = outer::solve_zeta(m, strip_current(m, 0.3));
  const double slope_err = std::abs(s.max_grad - a);
  double last = NAN;
  bool thrown = false;
  try {
    outer::solve_zeta(m, strip_current(m, kCriticalCurrent * (1 - 1e-3)));
  } catch (const LossOfEllipticity& e) {
    thrown = true;
    last = e.last_good_max_grad;
  }
  const double gap = kEllipticGradient - last;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = slope_err <= 1e-6 && thrown && std::abs(gap) <= 2e-2 && secs < 10;
  return {ok, fmt("128^2: |grad| error %.2e; ramp %s, last slope %.6f (1/sqrt3 - %.4f); %.1f s (limit 10 s)",
                  slope_err, thrown ? "lost ellipticity" : "did not fail", last, gap, secs)};
}

Outcome maximum_principle() {
  struct C {
    std::string name;
    geometry::BoundaryGeometry g;
    feasibility::CurrentSpec j;
  };
  std::vector<C> cases;
  cases.push_back({"disk/arcs", geometry::build_boundary(geometry::circle_samples(1.0, {0, 0}, 256)),
                   {"arcs", 0.2, 1, 0.0, 0.5, 0.0, 0.15}});
  cases.push_back({"ellipse/cosine", geometry::build_boundary(geometry::ellipse_samples(1.5, 1.0, {0, 0}, 256)),
                   {"cosine", 0.25, 2, 0.3}});
  cases.push_back({"stadium/arcs", geometry::build_boundary(geometry::stadium_samples(1.0, 0.8, 256)),
                   {"arcs", 0.3, 1, 0.0, 0.1, 0.6, 0.12}});
  cases.push_back({"rectangle/edges", geometry::build_boundary(geometry::rectangle_samples(1.6, 1.0, 256)),
                   {"edges", 0.2, 1, 0, 0.5, 0, 0.1, 0}});
  bool ok = true;
  std::string d;
  for (const auto& c : cases) {
    auto m = mesh::make_star_mesh_h(c.g, 0.04);
    auto j = outer::current_on_mesh(m, c.g, feasibility::make_current(c.g, c.j));
    auto s = outer::solve_zeta(m, j);
    auto mg = outer::max_gradient_check(m, s.zeta, 1, 1e-9, false);
    ok = ok && mg.in_band && s.max_grad < kEllipticGradient;
    d += fmt("%s max %.4f rank %d; ", c.name.c_str(), mg.value, mg.rank);
  }
  return {ok, d + "argmax in the boundary band for all cases"};
}

Outcome inner_bounds() {
  const auto t0 = std::chrono::steady_clock::now();
  const double jr = -0.2;
  const auto L = inner::solve_leading(jr);
  const auto C = inner::solve_corrected(L, 100);
  const double h = L.eta[1] - L.eta[0];
  const bool w0 = L.w[0] < std::sqrt(1.5) * 0.2;
  double dw_lo = 0, dw_hi = -1, mu_gap = INFINITY;
  for (double v : L.dw) dw_lo = std::min(dw_lo, v), dw_hi = std::max(dw_hi, v);
  for (double v : C.mu) mu_gap = std::min(mu_gap, v - C.mu_j);
  for (double v : L.mu0) mu_gap = std::min(mu_gap, v - L.mu_j);
  const double bc = std::abs(d0(C.theta, h) - jr);
  inner::InnerParams p{jr, 1.0, 100, 0};
  const auto P = inner::unscale(C, p);
  const double rf = P.rho_i0.back();
  const double far = std::abs(p.rho_r * p.rho_r - P.j * P.j / std::pow(rf, 4) - rf * rf);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = w0 && dw_lo >= jr - 1e-12 && dw_hi <= 1e-12 && mu_gap >= -1e-12 && bc <= 1e-8 && far <= 1e-6 &&
                  secs < 5;
  return {ok, fmt("w(0) = %.6f < %.6f; w' in [%.3g, %.3g]; min(mu - mu_j) = %.2e; |theta'(0) - j_r| = %.1e; "
                  "far-field defect %.1e; %.2f s",
                  L.w[0], std::sqrt(1.5) * 0.2, dw_lo, dw_hi, mu_gap, bc, far, secs)};
}

Outcome sigma_trend() {
  const auto L = inner::solve_leading(-0.2);
  std::vector<double> n;
  for (double s0 : {50.0, 100.0, 200.0}) n.push_back(inner::solve_corrected(L, s0).mu1_norm);
  const double r1 = n[0] / n[1], r2 = n[1] / n[2];
  const bool ok = r1 >= 1.6 && r1 <= 2.5 && r2 >= 1.6 && r2 <= 2.5;
  return {ok, fmt("||mu - mu0|| = %.4e, %.4e, %.4e; ratios %.3f, %.3f", n[0], n[1], n[2], r1, r2)};
}

Outcome composite_monotone() {
  const std::vector<double> eps{0.04, 0.02, 0.01};
  const double iota = 0.9;
  auto c = disk(0.015);
  const auto s = outer::solve_zeta(c.m, c.j);
  const auto z1 = outer::solve_zeta1(c.m, s.zeta);
  const auto tr = outer::boundary_trace(c.m, s.zeta, c.j);
  inner::SweepOptions so;
  so.tau_keep = composite::tau_needed(eps.back(), iota);
  const auto st = inner::sweep(tr, 100, so);  // independent of eps
  std::vector<composite::ResidualReport> r;
  for (double e : eps) {
    const auto cs = composite::assemble_composite(c.m, s.zeta, z1.zeta1, c.j, st, e,
                                                  composite::CutoffSpec::for_eps(e, iota));
    r.push_back(composite::residuals(c.m, cs, s.zeta, c.j));
  }
  auto dec = [&](auto f) { return f(r[1]) < f(r[0]) && f(r[2]) < f(r[1]); };
  const bool h1 = dec([](const auto& x) { return x.h1.total; });
  const bool h2 = dec([](const auto& x) { return x.div_h2.total; });
  const bool h3 = dec([](const auto& x) { return x.h3.total; });
  const double q1 = r[0].h1.interior / r[1].h1.interior, q2 = r[1].h1.interior / r[2].h1.interior;
  const bool rate = q1 >= 3 && q1 <= 5 && q2 >= 3 && q2 <= 5;
  std::string d = fmt("disk h = 0.015, %zu stations; ", st.size());
  for (const auto& x : r)
    d += fmt("eps %.2f: h1 %.3e (interior %.3e, t >= 2 delta %.3e) divH2 %.3e h3 %.3e; ", x.eps, x.h1.total,
             x.h1.interior, x.h1.outer_region, x.div_h2.total, x.h3.total);
  d += fmt("interior h1 ratios %.3f, %.3f", q1, q2);
  return {h1 && h2 && h3 && rate, d};
}

Outcome identities() {
  std::vector<double> rms;
  for (double h : {0.05, 0.025}) {
    auto c = disk(h);
    const auto s = outer::solve_zeta(c.m, c.j);
    rms.push_back(outer::boundary_identities(c.m, s.zeta, c.j).rms_2);
  }
  const double ratio = rms[0] / rms[1];
  return {ratio >= 1.6 && ratio <= 2.5, fmt("rms residual %.4e (h 0.05), %.4e (h 0.025); ratio %.3f", rms[0], rms[1], ratio)};
}

Outcome threshold() {
  double worst = 0;
  for (double s : {0.5, 1.0, 5.0, 50.0}) {
    // bisection on the sign of the closed-form lambda_minus^0
    double lo = 0, hi = 0.99;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double m = 0.5 * (lo + hi);
      (stability::lambda_minus_zero(m, s) > 0 ? lo : hi) = m;
    }
    worst = std::max(worst, std::abs(0.5 * (lo + hi) - 1 / std::sqrt(3.0)));
    worst = std::max(worst, std::abs(stability::threshold_beta(s) - 1 / std::sqrt(3.0)));
  }
  int bad = 0, count = 0;
  for (int i = 0; i < 10; ++i)
    for (int k = 0; k < 10; ++k)
      for (int q = 0; q < 10; ++q) {
        const double b = 0.99 * i / 9, s = 0.05 * std::pow(2.0, k), g = 0.01 + 0.3 * q;
        const auto m = stability::eigenvalues(b, s, g);
        bad += !(m.discriminant >= 0 && std::isfinite(m.lambda_plus) && std::isfinite(m.lambda_minus) &&
                 m.lambda_plus >= m.lambda_minus);
        ++count;
      }
  return {worst <= 1e-10 && bad == 0,
          fmt("max |beta* - 1/sqrt3| = %.1e over 4 sigma; %d of %d grid points with a negative discriminant", worst, bad,
              count)};
}

Outcome dynamics() {
  stability::StabilityInput in;
  in.sigma = 1.0;
  in.l = 1.0;
  in.eps = 0.1;
  in.beta = 0.5;
  const auto r = stability::evolve_1d(in, 30.0, 0.01);
  const double pred = -stability::eigenvalues(0.5, 1.0, stability::mode_wavenumber(1, 1.0, 0.1)).lambda_minus;
  const double rel = std::abs(r.fitted_rate - pred) / std::abs(pred);
  in.beta = 0.55;
  const double lo = stability::evolve_1d(in, 30.0, 0.01).fitted_rate;
  in.beta = 0.65;
  const double hi = stability::evolve_1d(in, 30.0, 0.01).fitted_rate;
  return {rel <= 0.1 && lo < 0 && hi > 0,
          fmt("beta 0.5: fitted %.5f vs %.5f (%.2f%%); beta 0.55: %.5f; beta 0.65: %.5f", r.fitted_rate, pred,
              100 * rel, lo, hi)};
}

Outcome reproducibility() {
  const fs::path dir = fs::temp_directory_path() / "sclayer_acceptance_repro";
  fs::remove_all(dir);
  auto cfg = config::parse("{}");
  pipeline::RunOptions opt;
  opt.out = dir;
  auto stages = pipeline::stages_for("all");
  stages.push_back(pipeline::Stage::Evolve1d);
  const auto a = pipeline::run(cfg, stages, opt);
  std::map<std::string, std::string> first;
  for (const auto& f : a.artifacts) first[f] = io::read_file(dir / f);
  first["manifest.json"] = io::read_file(dir / "manifest.json");
  const auto b = pipeline::run(cfg, stages, opt);
  int diff = 0;
  for (const auto& [f, data] : first) diff += io::read_file(dir / f) != data;
  fs::remove_all(dir);
  const bool ok = a.exit_code == 0 && b.exit_code == 0 && diff == 0 && a.artifacts == b.artifacts;
  return {ok, fmt("%zu artifacts + manifest compared byte for byte, %d differ", a.artifacts.size(), diff)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 critical constant", critical_constant},  {"2 outer strip oracle", strip_oracle},
      {"3 maximum principle", maximum_principle},  {"4 inner-layer bounds", inner_bounds},
      {"5 sigma0 convergence trend", sigma_trend}, {"6 composite residual monotonicity", composite_monotone},
      {"7 boundary identities", identities},       {"8 stability threshold", threshold},
      {"9 dynamics cross-check", dynamics},        {"10 reproducibility", reproducibility},
  };
  int failed = 0;
  for (const auto& [name, f] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s criterion %s [%.1f s]: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
