#include "sc/composite.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "sc/geometry.hpp"

namespace sc::composite {

namespace {

constexpr double kRamp = 1.0 / 3.0;  // width of each smoothstep ramp in Y'
constexpr double kPeak = 1.5;

double sq(double x) { return x * x; }

// quintic smoothstep and its first antiderivative and derivative on [0, 1]
double smooth(double x) { return x * x * x * (10 + x * (-15 + 6 * x)); }
double smooth_int(double x) { return x * x * x * x * (2.5 + x * (-3 + x)); }
double smooth_d(double x) { return 30 * x * x * (1 - x) * (1 - x); }

// fraction F(y) of the unit drop accumulated at y in [0, 1], scaled so that F(1) = 1 / kPeak
double ramp_F(double y) {
  if (y <= kRamp) return kRamp * smooth_int(y / kRamp);
  if (y >= 1 - kRamp) return (1 - kRamp) - kRamp * smooth_int((1 - y) / kRamp);
  return 0.5 * kRamp + (y - kRamp);
}
double ramp_psi(double y) {
  if (y <= kRamp) return smooth(y / kRamp);
  if (y >= 1 - kRamp) return smooth((1 - y) / kRamp);
  return 1.0;
}
double ramp_psi_d(double y) {
  if (y <= kRamp) return smooth_d(y / kRamp) / kRamp;
  if (y >= 1 - kRamp) return -smooth_d((1 - y) / kRamp) / kRamp;
  return 0.0;
}

// Fourth-order difference weights on a uniform grid of n >= 6 points with unit spacing; one-sided
// six-point windows near the ends.
struct LineStencil {
  int n = 0;
  std::vector<int> start;
  std::vector<std::array<double, 6>> d1, d2;
  explicit LineStencil(int n_) : n(n_), start(n_), d1(n_), d2(n_) {
    for (int k = 0; k < n; ++k) {
      int s0 = k - 2;
      int len = 5;
      if (k < 2 || k > n - 3) {
        len = 6;
        s0 = std::clamp(k - 2, 0, n - 6);
      }
      std::vector<double> x(len);
      for (int q = 0; q < len; ++q) x[q] = s0 + q;
      const auto w = geometry::fd_weights(static_cast<double>(k), x, 2);
      start[k] = s0;
      d1[k].fill(0.0);
      d2[k].fill(0.0);
      for (int q = 0; q < len; ++q) {
        d1[k][q] = w[1][q];
        d2[k][q] = w[2][q];
      }
    }
  }
};

// Differences of band fields: periodic fourth order in s, LineStencil in t.
struct BandOps {
  const BandGrid& g;
  LineStencil lt;
  explicit BandOps(const BandGrid& g_) : g(g_), lt(g_.nt) {}

  double ds(const std::vector<double>& f, int i, int k) const {
    const int n = g.ns;
    auto at = [&](int o) { return f[g.index((i + o + n) % n, k)]; };
    return (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * g.ds);
  }
  double dss(const std::vector<double>& f, int i, int k) const {
    const int n = g.ns;
    auto at = [&](int o) { return f[g.index((i + o + n) % n, k)]; };
    return (-at(2) + 16 * at(1) - 30 * at(0) + 16 * at(-1) - at(-2)) / (12 * g.ds * g.ds);
  }
  double dt(const std::vector<double>& f, int i, int k) const {
    double v = 0;
    for (int q = 0; q < 6; ++q) v += lt.d1[k][q] * f[g.index(i, std::min(lt.start[k] + q, g.nt - 1))];
    return v / g.dt;
  }
  double dtt(const std::vector<double>& f, int i, int k) const {
    double v = 0;
    for (int q = 0; q < 6; ++q) v += lt.d2[k][q] * f[g.index(i, std::min(lt.start[k] + q, g.nt - 1))];
    return v / (g.dt * g.dt);
  }
  // Lap f = f_tt - (kappa / g) f_t + g^-1 d_s(g^-1 f_s), expanded with d_s g = -t kappa'
  double lap(const std::vector<double>& f, const std::vector<double>& dkappa, int i, int k) const {
    const double m = g.metric(i, k), kap = g.kappa[i];
    const double dm = -g.t(k) * dkappa[i];
    return dtt(f, i, k) - kap / m * dt(f, i, k) + dss(f, i, k) / (m * m) - dm * ds(f, i, k) / (m * m * m);
  }
};

std::vector<double> kappa_slope(const BandGrid& g) {
  std::vector<double> dk(g.ns);
  const int n = g.ns;
  for (int i = 0; i < n; ++i) {
    auto at = [&](int o) { return g.kappa[(i + o + n) % n]; };
    dk[i] = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * g.ds);
  }
  return dk;
}

struct StationLookup {
  std::vector<double> s;
  double total = 0;
  // bracketing stations and linear weight for arclength s
  void locate(double x, int& a, int& b, double& w) const {
    const int n = static_cast<int>(s.size());
    x = std::fmod(x, total);
    if (x < 0) x += total;
    auto it = std::upper_bound(s.begin(), s.end(), x);
    b = static_cast<int>(it - s.begin()) % n;
    a = (b + n - 1) % n;
    double sa = s[a], sb = s[b];
    if (sb <= sa) sb += total;
    if (x < sa) x += total;
    w = (x - sa) / (sb - sa);
  }
};

}  // namespace

CutoffSpec CutoffSpec::for_eps(double eps, double iota) {
  if (!(eps > 0)) throw Error(ErrorKind::Config, "epsilon must be positive");
  if (!(iota > 0 && iota < 1)) throw Error(ErrorKind::Config, "iota must lie in (0, 1)");
  return {iota, std::pow(eps, iota)};
}

double cutoff_eval(double x, const CutoffSpec&) {
  if (x <= 1) return 1.0;
  if (x >= 2) return 0.0;
  return 1.0 - kPeak * ramp_F(x - 1);
}

double cutoff_derivative(double x) {
  if (x <= 1 || x >= 2) return 0.0;
  return -kPeak * ramp_psi(x - 1);
}

double cutoff_second_derivative(double x) {
  if (x <= 1 || x >= 2) return 0.0;
  return -kPeak * ramp_psi_d(x - 1);
}

std::vector<double> band_laplacian(const BandGrid& g, const std::vector<double>& f) {
  if (f.size() != g.size() || g.nt < 6 || g.ns < 5) throw Error(ErrorKind::Config, "band field does not match the grid");
  BandOps ops(g);
  const auto dk = kappa_slope(g);
  std::vector<double> out(f.size());
  for (int i = 0; i < g.ns; ++i)
    for (int k = 0; k < g.nt; ++k) out[g.index(i, k)] = ops.lap(f, dk, i, k);
  return out;
}

double tau_needed(double eps, double iota) { return 2.0 * std::pow(eps, iota) / eps + 2.0; }

CompositeSolution assemble_composite(const mesh::Mesh& m, const std::vector<double>& zeta,
                                     const std::vector<double>& zeta1, const std::vector<double>& j,
                                     const std::vector<inner::StationResult>& stations, double eps,
                                     const CutoffSpec& cutoff, const CompositeOptions& opt) {
  if (m.kind != mesh::Mesh::Kind::Star || !m.curve) throw Error(ErrorKind::Config, "the composite needs a star mesh");
  if (stations.size() != m.boundary.size())
    throw Error(ErrorKind::Config, "one inner station per boundary node is required");
  if (zeta.size() != m.size() || zeta1.size() != m.size() || j.size() != m.boundary.size())
    throw Error(ErrorKind::Config, "outer fields do not match the mesh");
  if (opt.cells_per_eps < 8)
    throw Error(ErrorKind::Resolution, "the band grid needs at least 8 cells per eps");
  const auto cut = cutoff.delta > 0 ? cutoff : CutoffSpec::for_eps(eps, cutoff.iota);
  const double delta = cut.delta;
  const double sigma0 = stations.front().params.sigma0;

  CompositeSolution c;
  c.eps = eps;
  c.iota = cut.iota;
  c.delta = delta;
  c.sigma0 = sigma0;
  c.stations = stations.size();
  c.secular_matching = opt.secular_matching;

  const auto tr = outer::boundary_trace(m, zeta, j);
  auto& g = c.band;
  g.ns = static_cast<int>(m.boundary.size());
  g.ds = m.curve->total_length / g.ns;
  if (g.ds > delta)
    throw Error(ErrorKind::Resolution, "boundary station spacing exceeds the band width delta");
  // the layer width in t is eps min(1, sqrt(sigma0)); the band grid puts cells_per_eps cells across it
  const double layer = eps * std::min(1.0, std::sqrt(sigma0));
  const int half = std::max(3, static_cast<int>(std::ceil(delta * opt.cells_per_eps / layer)));
  g.nt = 2 * half + 1;
  g.dt = delta / half;
  g.s = tr.s;
  g.kappa = tr.kappa;
  g.point = tr.point;
  g.normal = tr.normal;
  g.tangent = tr.tangent;

  c.outer = outer::outer_fields(m, zeta, zeta1, eps, j);
  const auto& F = c.outer;
  const std::size_t nb = g.size();
  for (auto* v : {&c.rho_o, &c.chi_o, &c.cx, &c.cy, &c.E, &c.g1, &c.g2, &c.rho_i, &c.upsilon_i, &c.phi_i, &c.cutoff,
                  &c.rho_a, &c.zeta_a, &c.rho0, &c.chi0, &c.phi0})
    v->assign(nb, 0.0);

  for (int i = 0; i < g.ns; ++i) {
    const auto& st = stations[i].profile;
    if (std::abs(st.j - tr.j[i]) > 1e-12 * (1 + std::abs(tr.j[i])))
      throw Error(ErrorKind::Config, "inner station " + std::to_string(i) + " does not match the boundary current");
    const double z0 = zeta[m.boundary[i]];
    for (int k = 0; k < g.nt; ++k) {
      const std::size_t b = g.index(i, k);
      const double t = g.t(k);
      const Vec2 x = g.x(i, k);
      // the first column is the boundary node itself
      if (k == 0) {
        const int id = m.boundary[i];
        c.rho_o[b] = F.rho_o[id];
        c.chi_o[b] = F.chi_o[id];
        c.cx[b] = F.chi_tilde_x[id];
        c.cy[b] = F.chi_tilde_y[id];
        c.E[b] = F.E[id];
        c.g1[b] = F.g1[id];
        c.g2[b] = F.g2[id];
      } else {
        const auto sten = m.stencil(x);
        c.rho_o[b] = sten.apply(F.rho_o);
        c.chi_o[b] = sten.apply(F.chi_o);
        c.cx[b] = sten.apply(F.chi_tilde_x);
        c.cy[b] = sten.apply(F.chi_tilde_y);
        c.E[b] = sten.apply(F.E);
        c.g1[b] = sten.apply(F.g1);
        c.g2[b] = sten.apply(F.g2);
      }
      const double tau = t / eps;
      const double Y = cutoff_eval(t / delta);
      c.cutoff[b] = Y;
      c.rho_a[b] = tr.rho_out0[i] + t * tr.drho0_dt[i];
      c.zeta_a[b] = z0 + t * tr.zeta_t[i];
      c.rho_i[b] = st.value(st.rho_i0, tau) + (opt.secular_matching ? t * tr.drho0_dt[i] : 0.0);
      c.upsilon_i[b] = st.value(st.upsilon_i0, tau);
      c.phi_i[b] = st.value(st.phi_i0, tau);
      c.rho0[b] = c.rho_o[b] + (c.rho_i[b] - c.rho_a[b]) * Y;
      c.chi0[b] = c.chi_o[b] + c.upsilon_i[b] * Y;
      c.phi0[b] = c.phi_i[b] * Y / (eps * eps);
    }
  }

  // mesh nodes: outer fields, plus the blend inside 2 delta by station interpolation in s
  geometry::BoundaryLocator loc(*m.curve, 2 * delta);
  StationLookup look{tr.s, m.curve->total_length};
  c.mesh_t.assign(m.size(), std::numeric_limits<double>::infinity());
  c.mesh_rho0 = F.rho_o;
  c.mesh_chi0 = F.chi_o;
  c.mesh_phi0.assign(m.size(), 0.0);
  for (std::size_t n = 0; n < m.size(); ++n) {
    const auto bc = loc.project(m.nodes[n]);
    if (!bc) continue;
    c.mesh_t[n] = std::max(0.0, bc->t);
    const double t = c.mesh_t[n];
    if (t >= 2 * delta) continue;
    int a, b;
    double w;
    look.locate(bc->s, a, b, w);
    const double tau = t / eps, Y = cutoff_eval(t / delta);
    auto mix = [&](auto&& f) { return (1 - w) * f(a) + w * f(b); };
    const double ri = mix([&](int i) {
      const auto& st = stations[i].profile;
      return st.value(st.rho_i0, tau) + (opt.secular_matching ? t * tr.drho0_dt[i] : 0.0);
    });
    const double ra = mix([&](int i) { return tr.rho_out0[i] + t * tr.drho0_dt[i]; });
    const double ui = mix([&](int i) { return stations[i].profile.value(stations[i].profile.upsilon_i0, tau); });
    const double pi = mix([&](int i) { return stations[i].profile.value(stations[i].profile.phi_i0, tau); });
    c.mesh_rho0[n] += (ri - ra) * Y;
    c.mesh_chi0[n] += ui * Y;
    c.mesh_phi0[n] = pi * Y / (eps * eps);
  }
  return c;
}

ResidualReport residuals(const mesh::Mesh& m, const CompositeSolution& c, const std::vector<double>& zeta,
                         const std::vector<double>& j) {
  const auto& g = c.band;
  const double eps = c.eps, e2 = eps * eps, s0 = c.sigma0;
  const std::size_t nb = g.size();
  BandOps ops(g);

  const auto dkappa = kappa_slope(g);

  // inner corrections: q to the modulus, p to chi~, and phi~0
  std::vector<double> q(nb), p(nb), ph(nb), rho(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    q[b] = (c.rho_i[b] - c.rho_a[b]) * c.cutoff[b];
    p[b] = eps * c.upsilon_i[b] * c.cutoff[b];
    ph[b] = c.phi_i[b] * c.cutoff[b];
    rho[b] = c.rho_o[b] + q[b];
  }
  // flux correction G = (2 rho_o q + q^2) grad chi~_o + rho^2 grad p in (s, t) components
  std::vector<double> Gs(nb), Gt(nb), ps(nb), pt(nb);
  for (int i = 0; i < g.ns; ++i)
    for (int k = 0; k < g.nt; ++k) {
      const std::size_t b = g.index(i, k);
      const double mt = g.metric(i, k);
      ps[b] = ops.ds(p, i, k) / mt;
      pt[b] = ops.dt(p, i, k);
      const double cT = c.cx[b] * g.tangent[i].x + c.cy[b] * g.tangent[i].y;
      const double cN = -(c.cx[b] * g.normal[i].x + c.cy[b] * g.normal[i].y);  // along increasing t
      const double a = 2 * c.rho_o[b] * q[b] + q[b] * q[b];
      Gs[b] = a * cT + rho[b] * rho[b] * ps[b];
      Gt[b] = mt * (a * cN + rho[b] * rho[b] * pt[b]);
    }

  ResidualReport rep;
  rep.eps = eps;
  rep.iota = c.iota;
  rep.delta = c.delta;
  rep.sigma0 = s0;
  rep.band_h1.resize(nb);
  rep.band_div_h2.resize(nb);
  rep.band_h3.resize(nb);
  for (int i = 0; i < g.ns; ++i)
    for (int k = 0; k < g.nt; ++k) {
      const std::size_t b = g.index(i, k);
      const double mt = g.metric(i, k);
      const double cT = c.cx[b] * g.tangent[i].x + c.cy[b] * g.tangent[i].y;
      const double cN = -(c.cx[b] * g.normal[i].x + c.cy[b] * g.normal[i].y);
      const double D = -2 * (cT * ps[b] + cN * pt[b]) - ps[b] * ps[b] - pt[b] * pt[b] - 2 * c.rho_o[b] * q[b] - q[b] * q[b];
      rep.band_h1[b] = c.g1[b] - ops.lap(q, dkappa, i, k) - (c.E[b] * q[b] + D * rho[b]) / e2;
      const double divG = (ops.ds(Gs, i, k) + ops.dt(Gt, i, k)) / mt;
      const double lph = ops.lap(ph, dkappa, i, k);
      rep.band_div_h2[b] = c.g2[b] + divG / eps - s0 * lph;
      rep.band_h3[b] = s0 * lph - rho[b] * rho[b] * ph[b] / e2;
    }

  // quadrature: trapezoid in t with the metric on the band, lumped mass beyond 2 delta
  const int half = g.nt / 2;
  double b1[2] = {0, 0}, b2[2] = {0, 0}, b3[2] = {0, 0};
  double gauge = 0, gauge_abs = 0;
  for (int i = 0; i < g.ns; ++i)
    for (int k = 0; k < g.nt; ++k) {
      const std::size_t b = g.index(i, k);
      const double base = g.metric(i, k) * g.ds * g.dt;
      // split at k = half: each half gets its own trapezoid rule
      for (int part = 0; part < 2; ++part) {
        const int lo = part == 0 ? 0 : half, hi = part == 0 ? half : g.nt - 1;
        if (k < lo || k > hi) continue;
        const double w = (k == lo || k == hi) ? 0.5 * base : base;
        b1[part] += w * sq(rep.band_h1[b]);
        b2[part] += w * sq(rep.band_div_h2[b]);
        b3[part] += w * sq(rep.band_h3[b]);
      }
      const double w = (k == 0 || k == g.nt - 1) ? 0.5 * base : base;
      const double f = rho[b] * rho[b] * c.phi0[b];
      gauge += w * f;
      gauge_abs += w * std::abs(f);
    }
  double o1 = 0, o2 = 0;
  for (std::size_t n = 0; n < m.size(); ++n) {
    if (c.mesh_t[n] < 2 * c.delta) continue;
    o1 += m.lumped_mass[n] * sq(c.outer.g1[n]);
    o2 += m.lumped_mass[n] * sq(c.outer.g2[n]);
  }
  auto split = [](double band, double mid, double out) {
    NormSplit s;
    s.band = std::sqrt(band);
    s.interior = std::sqrt(mid + out);
    s.outer_region = std::sqrt(out);
    s.total = std::sqrt(band + mid + out);
    return s;
  };
  rep.h1 = split(b1[0], b1[1], o1);
  rep.div_h2 = split(b2[0], b2[1], o2);
  rep.h3 = split(b3[0], b3[1], 0.0);
  rep.gauge_ratio = gauge_abs > 0 ? std::abs(gauge) / gauge_abs : 0.0;
  rep.gauge_ok = rep.gauge_ratio < 0.05;

  // continuity across the cutoff kinks: second differences against the largest first difference
  double slope = 0, jump = 0;
  for (const auto* f : {&c.rho0, &c.chi0, &c.phi0}) {
    double fs = 0, fj = 0;
    for (int i = 0; i < g.ns; ++i) {
      for (int k = 0; k + 1 < g.nt; ++k) fs = std::max(fs, std::abs((*f)[g.index(i, k + 1)] - (*f)[g.index(i, k)]));
      for (int k : {half, g.nt - 2}) {
        const double d2 = (*f)[g.index(i, k + 1)] - 2 * (*f)[g.index(i, k)] + (*f)[g.index(i, k - 1)];
        fj = std::max(fj, std::abs(d2));
      }
    }
    if (fs > 0) jump = std::max(jump, fj / fs);
    slope = std::max(slope, fs);
  }
  rep.continuity_jump = slope > 0 ? jump : 0.0;

  rep.rho0_min = std::numeric_limits<double>::infinity();
  rep.rho0_max = -rep.rho0_min;
  for (double r : c.rho0) {
    rep.rho0_min = std::min(rep.rho0_min, r);
    rep.rho0_max = std::max(rep.rho0_max, r);
  }
  for (double r : c.mesh_rho0) {
    rep.rho0_min = std::min(rep.rho0_min, r);
    rep.rho0_max = std::max(rep.rho0_max, r);
  }
  rep.identities = outer::boundary_identities(m, zeta, j);
  return rep;
}

}  // namespace sc::composite
