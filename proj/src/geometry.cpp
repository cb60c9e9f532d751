#include "sc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace sc::geometry {

namespace {

constexpr double kGaussX[5] = {0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155, 0.95308992296933200};
constexpr double kGaussW[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444, 0.23931433524968324,
                               0.11846344252809454};

bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

// Inclusive test: proper crossings and touching configurations.
bool segments_meet(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  if (segments_cross(a, b, c, d)) return true;
  auto on = [](Vec2 p, Vec2 q, Vec2 r) {
    return std::abs(cross(q - p, r - p)) <= 1e-14 * (norm(q - p) * norm(r - p) + 1e-300) &&
           std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y && r.y <= std::max(p.y, q.y);
  };
  return on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b);
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double l2 = dot(ab, ab);
  double f = l2 > 0 ? dot(p - a, ab) / l2 : 0.0;
  f = std::clamp(f, 0.0, 1.0);
  return norm(p - (a + f * ab));
}

}  // namespace

std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<std::vector<double>> c(m + 1, std::vector<double>(n + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

BoundaryGeometry build_boundary(std::vector<Vec2> samples) {
  if (samples.size() < 17) throw Error(ErrorKind::Geometry, "boundary needs at least 16 distinct samples");
  double perim = 0;
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) perim += norm(samples[k + 1] - samples[k]);
  const double mean_spacing = perim / (samples.size() - 1);
  if (norm(samples.back() - samples.front()) > 0.25 * mean_spacing)
    throw Error(ErrorKind::Geometry, "boundary curve is open (last sample does not repeat the first)");
  samples.pop_back();
  const std::size_t n = samples.size();

  double area = 0;
  for (std::size_t k = 0; k < n; ++k) area += cross(samples[k], samples[(k + 1) % n]);
  if (area < 0) std::reverse(samples.begin(), samples.end());

  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 2; b < n; ++b) {
      if (a == 0 && b == n - 1) continue;
      if (segments_meet(samples[a], samples[(a + 1) % n], samples[b], samples[(b + 1) % n]))
        throw Error(ErrorKind::Geometry, "boundary curve self-intersects");
    }
  for (std::size_t k = 0; k < n; ++k)
    if (norm(samples[(k + 1) % n] - samples[k]) < 1e-12 * perim)
      throw Error(ErrorKind::Geometry, "boundary has repeated samples");

  BoundaryGeometry g;
  g.points = samples;
  g.param.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) g.param[k + 1] = g.param[k] + norm(samples[(k + 1) % n] - samples[k]);
  const double period = g.param[n];

  g.d1.resize(n);
  g.d2.resize(n);
  g.curvature.resize(n);
  g.tangent.resize(n);
  g.normal.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> u(5);
    std::vector<Vec2> r(5);
    for (int q = -2; q <= 2; ++q) {
      const long idx = static_cast<long>(k) + q;
      const std::size_t w = static_cast<std::size_t>((idx % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n));
      double uu = g.param[w];
      if (idx < 0) uu -= period;
      if (idx >= static_cast<long>(n)) uu += period;
      u[q + 2] = uu;
      r[q + 2] = samples[w];
    }
    auto wts = fd_weights(g.param[k], u, 2);
    Vec2 a{}, b{};
    for (int q = 0; q < 5; ++q) {
      a = a + wts[1][q] * r[q];
      b = b + wts[2][q] * r[q];
    }
    g.d1[k] = a;
    g.d2[k] = b;
    const double sp = norm(a);
    g.tangent[k] = (1.0 / sp) * a;
    g.normal[k] = {g.tangent[k].y, -g.tangent[k].x};
    g.curvature[k] = cross(a, b) / (sp * sp * sp);
  }

  g.arclength.assign(n, 0.0);
  double s = 0;
  for (std::size_t k = 0; k < n; ++k) {
    g.arclength[k] = s;
    double seg = 0;
    for (int q = 0; q < 5; ++q) {
      Vec2 r, ru, ruu;
      g.eval_segment(k, kGaussX[q], r, ru, ruu);
      seg += kGaussW[q] * norm(ru) * (g.param[k + 1] - g.param[k]);
    }
    s += seg;
  }
  g.total_length = s;

  g.convex = true;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 e0 = samples[k] - samples[(k + n - 1) % n], e1 = samples[(k + 1) % n] - samples[k];
    if (cross(e0, e1) < -1e-12 * norm(e0) * norm(e1)) {
      g.convex = false;
      break;
    }
  }
  return g;
}

void BoundaryGeometry::eval_segment(std::size_t k, double f, Vec2& r, Vec2& ru, Vec2& ruu) const {
  const std::size_t n = points.size();
  const std::size_t k1 = (k + 1) % n;
  const double du = param[k + 1] - param[k];
  const double f2 = f * f, f3 = f2 * f;
  const double h00 = 2 * f3 - 3 * f2 + 1, h10 = f3 - 2 * f2 + f, h01 = -2 * f3 + 3 * f2, h11 = f3 - f2;
  const double d00 = 6 * f2 - 6 * f, d10 = 3 * f2 - 4 * f + 1, d01 = -6 * f2 + 6 * f, d11 = 3 * f2 - 2 * f;
  const double s00 = 12 * f - 6, s10 = 6 * f - 4, s01 = -12 * f + 6, s11 = 6 * f - 2;
  r = h00 * points[k] + (h10 * du) * d1[k] + h01 * points[k1] + (h11 * du) * d1[k1];
  ru = (1.0 / du) * (d00 * points[k] + (d10 * du) * d1[k] + d01 * points[k1] + (d11 * du) * d1[k1]);
  ruu = (1.0 / (du * du)) * (s00 * points[k] + (s10 * du) * d1[k] + s01 * points[k1] + (s11 * du) * d1[k1]);
}

void BoundaryGeometry::locate(double s, std::size_t& k, double& f) const {
  const std::size_t n = points.size();
  s = std::fmod(s, total_length);
  if (s < 0) s += total_length;
  auto it = std::upper_bound(arclength.begin(), arclength.end(), s);
  k = static_cast<std::size_t>(std::distance(arclength.begin(), it)) - 1;
  const double s_end = (k + 1 < n) ? arclength[k + 1] : total_length;
  const double target = s - arclength[k];
  const double du = param[k + 1] - param[k];
  f = target / (s_end - arclength[k]);
  for (int it2 = 0; it2 < 8; ++it2) {
    double acc = 0;
    for (int q = 0; q < 5; ++q) {
      Vec2 r, ru, ruu;
      eval_segment(k, f * kGaussX[q], r, ru, ruu);
      acc += kGaussW[q] * norm(ru) * du * f;
    }
    Vec2 r, ru, ruu;
    eval_segment(k, f, r, ru, ruu);
    const double step = (acc - target) / (norm(ru) * du);
    f = std::clamp(f - step, 0.0, 1.0);
    if (std::abs(step) < 1e-15) break;
  }
}

Vec2 BoundaryGeometry::position(double s) const {
  std::size_t k;
  double f;
  locate(s, k, f);
  Vec2 r, ru, ruu;
  eval_segment(k, f, r, ru, ruu);
  return r;
}

Vec2 BoundaryGeometry::tangent_at(double s) const {
  std::size_t k;
  double f;
  locate(s, k, f);
  Vec2 r, ru, ruu;
  eval_segment(k, f, r, ru, ruu);
  return (1.0 / norm(ru)) * ru;
}

Vec2 BoundaryGeometry::normal_at(double s) const {
  const Vec2 t = tangent_at(s);
  return {t.y, -t.x};
}

double BoundaryGeometry::curvature_at(double s) const {
  std::size_t k;
  double f;
  locate(s, k, f);
  return (1 - f) * curvature[k] + f * curvature[(k + 1) % points.size()];
}

double BoundaryGeometry::min_spacing() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < points.size(); ++k) m = std::min(m, norm(points[(k + 1) % points.size()] - points[k]));
  return m;
}

bool BoundaryGeometry::contains(Vec2 p) const {
  bool in = false;
  const std::size_t n = points.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = points[i], b = points[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

double BoundaryGeometry::signed_area() const {
  double a = 0;
  for (std::size_t k = 0; k < points.size(); ++k) a += cross(points[k], points[(k + 1) % points.size()]);
  return 0.5 * a;
}

// --- locator -------------------------------------------------------------------------------------

BoundaryLocator::BoundaryLocator(const BoundaryGeometry& g, double max_distance) : g_(&g), r_(max_distance) {
  double xmin = 1e300, ymin = 1e300, xmax = -1e300, ymax = -1e300;
  for (auto p : g.points) {
    xmin = std::min(xmin, p.x);
    ymin = std::min(ymin, p.y);
    xmax = std::max(xmax, p.x);
    ymax = std::max(ymax, p.y);
  }
  cell_ = std::max(r_, 2.0 * g.min_spacing());
  cell_ = std::max(cell_, std::max(xmax - xmin, ymax - ymin) / 512.0);
  const double pad = r_ + cell_;
  x0_ = xmin - pad;
  y0_ = ymin - pad;
  nx_ = static_cast<int>((xmax - xmin + 2 * pad) / cell_) + 1;
  ny_ = static_cast<int>((ymax - ymin + 2 * pad) / cell_) + 1;
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  const std::size_t n = g.points.size();
  for (std::size_t k = 0; k < n; ++k) {
    // segment bounding box enlarged by the Hermite bulge and the search radius
    const Vec2 a = g.points[k], b = g.points[(k + 1) % n];
    const double bulge = 0.25 * norm(b - a) + r_;
    const int i0 = std::max(0, static_cast<int>((std::min(a.x, b.x) - bulge - x0_) / cell_));
    const int i1 = std::min(nx_ - 1, static_cast<int>((std::max(a.x, b.x) + bulge - x0_) / cell_));
    const int k0 = std::max(0, static_cast<int>((std::min(a.y, b.y) - bulge - y0_) / cell_));
    const int k1 = std::min(ny_ - 1, static_cast<int>((std::max(a.y, b.y) + bulge - y0_) / cell_));
    for (int q = k0; q <= k1; ++q)
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(q) * nx_ + i].push_back(static_cast<int>(k));
  }
}

std::optional<BoundaryCoords> BoundaryLocator::project(Vec2 p) const {
  const int i = static_cast<int>((p.x - x0_) / cell_), q = static_cast<int>((p.y - y0_) / cell_);
  if (i < 0 || q < 0 || i >= nx_ || q >= ny_) return std::nullopt;
  const auto& cand = buckets_[static_cast<std::size_t>(q) * nx_ + i];
  double best = std::numeric_limits<double>::infinity();
  std::size_t bk = 0;
  double bf = 0;
  Vec2 bfoot{};
  const std::size_t n = g_->points.size();
  for (int kk : cand) {
    const std::size_t k = static_cast<std::size_t>(kk);
    const Vec2 a = g_->points[k], b = g_->points[(k + 1) % n];
    const Vec2 ab = b - a;
    double f = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
    Vec2 r, ru, ruu;
    for (int it = 0; it < 12; ++it) {
      g_->eval_segment(k, f, r, ru, ruu);
      const double du = g_->param[k + 1] - g_->param[k];
      const Vec2 rf = du * ru, rff = (du * du) * ruu;
      const double gval = dot(r - p, rf);
      const double gder = dot(rf, rf) + dot(r - p, rff);
      const double fn = std::clamp(f - gval / gder, 0.0, 1.0);
      const bool done = std::abs(fn - f) < 1e-14;
      f = fn;
      if (done) break;
    }
    g_->eval_segment(k, f, r, ru, ruu);
    const double d = norm(r - p);
    if (d < best) {
      best = d;
      bk = k;
      bf = f;
      bfoot = r;
    }
  }
  if (best > r_) return std::nullopt;
  Vec2 r, ru, ruu;
  g_->eval_segment(bk, bf, r, ru, ruu);
  const Vec2 tan = (1.0 / norm(ru)) * ru;
  const Vec2 nrm{tan.y, -tan.x};
  // arclength of the foot point
  double acc = 0;
  const double du = g_->param[bk + 1] - g_->param[bk];
  for (int q2 = 0; q2 < 5; ++q2) {
    Vec2 rr, rru, rruu;
    g_->eval_segment(bk, bf * kGaussX[q2], rr, rru, rruu);
    acc += kGaussW[q2] * norm(rru) * du * bf;
  }
  BoundaryCoords c;
  c.s = g_->arclength[bk] + acc;
  c.t = dot(bfoot - p, nrm);
  c.foot = bfoot;
  return c;
}

// --- presets -------------------------------------------------------------------------------------

namespace {

struct Primitive {
  bool arc = false;
  Vec2 a, b;        // line endpoints
  Vec2 c;           // arc centre
  double r = 0, th0 = 0, sweep = 0;
  double length() const { return arc ? std::abs(sweep) * r : norm(b - a); }
  Vec2 at(double f) const {
    if (!arc) return a + f * (b - a);
    const double th = th0 + f * sweep;
    return {c.x + r * std::cos(th), c.y + r * std::sin(th)};
  }
};

std::vector<Vec2> sample_primitives(const std::vector<Primitive>& prims, int n) {
  double total = 0;
  for (auto& p : prims) total += p.length();
  std::vector<Vec2> out;
  for (auto& p : prims) {
    const double len = p.length();
    if (len <= 0) continue;
    const int m = std::max(1, static_cast<int>(std::lround(n * len / total)));
    for (int i = 0; i < m; ++i) out.push_back(p.at(static_cast<double>(i) / m));
  }
  out.push_back(out.front());
  return out;
}

}  // namespace

std::vector<Vec2> circle_samples(double radius, Vec2 center, int n) {
  std::vector<Vec2> out;
  for (int k = 0; k <= n; ++k) {
    const double th = 2 * std::numbers::pi * (k % n) / n;
    out.push_back({center.x + radius * std::cos(th), center.y + radius * std::sin(th)});
  }
  return out;
}

std::vector<Vec2> ellipse_samples(double a, double b, Vec2 center, int n) {
  std::vector<Vec2> out;
  for (int k = 0; k <= n; ++k) {
    const double th = 2 * std::numbers::pi * (k % n) / n;
    out.push_back({center.x + a * std::cos(th), center.y + b * std::sin(th)});
  }
  return out;
}

std::vector<Vec2> stadium_samples(double half_length, double radius, int n) {
  const double pi = std::numbers::pi;
  std::vector<Primitive> p(4);
  p[0] = {false, {-half_length, -radius}, {half_length, -radius}, {}, 0, 0, 0};
  p[1] = {true, {}, {}, {half_length, 0}, radius, -pi / 2, pi};
  p[2] = {false, {half_length, radius}, {-half_length, radius}, {}, 0, 0, 0};
  p[3] = {true, {}, {}, {-half_length, 0}, radius, pi / 2, pi};
  return sample_primitives(p, n);
}

std::vector<Vec2> rounded_polygon_samples(const std::vector<Vec2>& v, double radius, int n) {
  const std::size_t m = v.size();
  std::vector<Primitive> prims;
  std::vector<Vec2> pin(m), pout(m);
  std::vector<Primitive> arcs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 prev = v[(i + m - 1) % m], cur = v[i], next = v[(i + 1) % m];
    const Vec2 din = (1.0 / norm(cur - prev)) * (cur - prev), dout = (1.0 / norm(next - cur)) * (next - cur);
    const double turn = std::atan2(cross(din, dout), dot(din, dout));
    const double off = radius * std::tan(std::abs(turn) / 2);
    pin[i] = cur - off * din;
    pout[i] = cur + off * dout;
    if (radius > 0 && std::abs(turn) > 1e-12) {
      const double sgn = turn > 0 ? 1.0 : -1.0;
      const Vec2 c = pin[i] + (sgn * radius) * Vec2{-din.y, din.x};
      const double th0 = std::atan2(pin[i].y - c.y, pin[i].x - c.x);
      arcs[i] = {true, {}, {}, c, radius, th0, turn};
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (arcs[i].arc) prims.push_back(arcs[i]);
    prims.push_back({false, pout[i], pin[(i + 1) % m], {}, 0, 0, 0});
  }
  return sample_primitives(prims, n);
}

std::vector<Vec2> dumbbell_samples(double lobe, double w, double nl, double fillet, int n) {
  const double a = lobe, h = nl / 2;
  std::vector<Vec2> v = {{-h - a, -a / 2}, {-h, -a / 2}, {-h, -w / 2}, {h, -w / 2},  {h, -a / 2},  {h + a, -a / 2},
                         {h + a, a / 2},   {h, a / 2},   {h, w / 2},   {-h, w / 2}, {-h, a / 2}, {-h - a, a / 2}};
  return rounded_polygon_samples(v, fillet, n);
}

std::vector<Vec2> rectangle_samples(double lx, double ly, int n) {
  return rounded_polygon_samples({{0, 0}, {lx, 0}, {lx, ly}, {0, ly}}, 0.0, n);
}

// --- grids ---------------------------------------------------------------------------------------

void GridSpec::validate() const {
  if (!(h > 0)) throw Error(ErrorKind::Config, "grid spacing must be positive");
  if (!(xmax > xmin && ymax > ymin)) throw Error(ErrorKind::Config, "grid bounding box is empty");
  if (delta > 0 && delta < 8 * h) throw Error(ErrorKind::Resolution, "boundary band resolved by fewer than 8 cells");
}

double ScalarField2D::domain_average() const {
  double s = 0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (mask[i]) {
      s += values[i];
      ++c;
    }
  return c ? s / c : 0.0;
}

ScalarField2D make_field(const GridSpec& g, const std::function<bool(Vec2)>& inside) {
  g.validate();
  ScalarField2D f;
  f.h = g.h;
  f.nx = static_cast<int>(std::ceil((g.xmax - g.xmin) / g.h));
  f.ny = static_cast<int>(std::ceil((g.ymax - g.ymin) / g.h));
  f.x0 = g.xmin + 0.5 * g.h;
  f.y0 = g.ymin + 0.5 * g.h;
  f.values.assign(static_cast<std::size_t>(f.nx) * f.ny, 0.0);
  f.mask.assign(f.values.size(), 0);
  for (int k = 0; k < f.ny; ++k)
    for (int i = 0; i < f.nx; ++i) f.mask[static_cast<std::size_t>(k) * f.nx + i] = inside(f.center(i, k)) ? 1 : 0;
  return f;
}

// --- geodesics -----------------------------------------------------------------------------------

GeodesicSolver::GeodesicSolver(const BoundaryGeometry& g, double h) : g_(&g), h_(h) {
  double xmin = 1e300, ymin = 1e300, xmax = -1e300, ymax = -1e300;
  for (auto p : g.points) {
    xmin = std::min(xmin, p.x);
    ymin = std::min(ymin, p.y);
    xmax = std::max(xmax, p.x);
    ymax = std::max(ymax, p.y);
  }
  x0_ = xmin - h;
  y0_ = ymin - h;
  nx_ = static_cast<int>((xmax - xmin) / h) + 3;
  ny_ = static_cast<int>((ymax - ymin) / h) + 3;

  rh_ = h / 4;
  rnx_ = 4 * nx_ + 1;
  rny_ = 4 * ny_ + 1;
  raster_.assign(static_cast<std::size_t>(rnx_) * rny_, 0);
  for (int q = 0; q < rny_; ++q)
    for (int i = 0; i < rnx_; ++i)
      raster_[static_cast<std::size_t>(q) * rnx_ + i] = g.contains({x0_ + (i + 0.5) * rh_, y0_ + (q + 0.5) * rh_});
  // dilate by one raster cell so that boundary chords count as inside the closure
  const double dil = 0.75 * rh_;
  const std::size_t n = g.points.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 a = g.points[k], b = g.points[(k + 1) % n];
    const int i0 = std::max(0, static_cast<int>((std::min(a.x, b.x) - dil - x0_) / rh_) - 1);
    const int i1 = std::min(rnx_ - 1, static_cast<int>((std::max(a.x, b.x) + dil - x0_) / rh_) + 1);
    const int q0 = std::max(0, static_cast<int>((std::min(a.y, b.y) - dil - y0_) / rh_) - 1);
    const int q1 = std::min(rny_ - 1, static_cast<int>((std::max(a.y, b.y) + dil - y0_) / rh_) + 1);
    for (int q = q0; q <= q1; ++q)
      for (int i = i0; i <= i1; ++i)
        if (point_segment_distance({x0_ + (i + 0.5) * rh_, y0_ + (q + 0.5) * rh_}, a, b) <= dil)
          raster_[static_cast<std::size_t>(q) * rnx_ + i] = 1;
  }

  node_of_.assign(static_cast<std::size_t>(nx_) * ny_, -1);
  for (int q = 0; q < ny_; ++q)
    for (int i = 0; i < nx_; ++i) {
      const Vec2 p{x0_ + i * h, y0_ + q * h};
      if (g.contains(p)) {
        node_of_[static_cast<std::size_t>(q) * nx_ + i] = static_cast<int>(nodes_.size());
        nodes_.push_back(p);
      }
    }
  // 5x5 chamfer neighbourhood: axial, diagonal and knight moves
  static const int kOff[16][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1},
                                  {1, 2}, {2, 1}, {-1, 2}, {-2, 1}, {1, -2}, {2, -1}, {-1, -2}, {-2, -1}};
  adj_start_.assign(nodes_.size() + 1, 0);
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    adj_start_[id] = adj_.size();
    const Vec2 p = nodes_[id];
    const int i = static_cast<int>(std::lround((p.x - x0_) / h)), q = static_cast<int>(std::lround((p.y - y0_) / h));
    for (auto& o : kOff) {
      const int a = i + o[0], b = q + o[1];
      if (a < 0 || b < 0 || a >= nx_ || b >= ny_) continue;
      const int v = node_of_[static_cast<std::size_t>(b) * nx_ + a];
      if (v >= 0 && visible(p, nodes_[v])) adj_.push_back({v, norm(nodes_[v] - p)});
    }
  }
  adj_start_[nodes_.size()] = adj_.size();
}

bool GeodesicSolver::raster_inside(Vec2 p) const {
  const int i = static_cast<int>(std::floor((p.x - x0_) / rh_)), q = static_cast<int>(std::floor((p.y - y0_) / rh_));
  if (i < 0 || q < 0 || i >= rnx_ || q >= rny_) return false;
  return raster_[static_cast<std::size_t>(q) * rnx_ + i] != 0;
}

bool GeodesicSolver::visible(Vec2 p, Vec2 q) const {
  const double len = norm(q - p);
  const int steps = std::max(1, static_cast<int>(std::ceil(len / (0.5 * rh_))));
  for (int k = 0; k <= steps; ++k)
    if (!raster_inside(p + (static_cast<double>(k) / steps) * (q - p))) return false;
  return true;
}

std::vector<int> GeodesicSolver::attach(Vec2 p) const {
  std::vector<int> out;
  const int ci = static_cast<int>(std::lround((p.x - x0_) / h_)), cq = static_cast<int>(std::lround((p.y - y0_) / h_));
  for (int dq = -2; dq <= 2; ++dq)
    for (int di = -2; di <= 2; ++di) {
      const int i = ci + di, q = cq + dq;
      if (i < 0 || q < 0 || i >= nx_ || q >= ny_) continue;
      const int id = node_of_[static_cast<std::size_t>(q) * nx_ + i];
      if (id >= 0 && visible(p, nodes_[id])) out.push_back(id);
    }
  return out;
}

std::vector<double> GeodesicSolver::distances(Vec2 x, const std::vector<Vec2>& targets) const {
  if (!raster_inside(x)) throw Error(ErrorKind::Geometry, "geodesic source lies outside the domain");
  std::vector<double> out(targets.size(), std::numeric_limits<double>::infinity());
  bool need_search = false;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (!raster_inside(targets[t])) throw Error(ErrorKind::Geometry, "geodesic target lies outside the domain");
    if (g_->convex || visible(x, targets[t])) out[t] = norm(targets[t] - x);
    else need_search = true;
  }
  if (!need_search) return out;

  const std::size_t nn = nodes_.size();
  std::vector<double> dist(nn, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (int id : attach(x)) {
    dist[id] = norm(nodes_[id] - x);
    pq.push({dist[id], id});
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (std::size_t e = adj_start_[u]; e < adj_start_[u + 1]; ++e) {
      const int v = adj_[e].first;
      const double c = d + adj_[e].second;
      if (c < dist[v]) {
        dist[v] = c;
        pq.push({c, v});
      }
    }
  }
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (std::isfinite(out[t])) continue;
    for (int id : attach(targets[t]))
      if (std::isfinite(dist[id])) out[t] = std::min(out[t], dist[id] + norm(targets[t] - nodes_[id]));
  }
  return out;
}

double GeodesicSolver::distance(Vec2 x, Vec2 y) const { return distances(x, {y})[0]; }

double geodesic_distance(Vec2 x, Vec2 y, const BoundaryGeometry& g, const GridSpec& grid) {
  grid.validate();
  GeodesicSolver s(g, grid.h);
  return s.distance(x, y);
}

double boundary_integral(const BoundaryGeometry& g, const std::vector<double>& f, double s1, double s2) {
  const std::size_t n = g.size();
  if (f.size() != n) throw Error(ErrorKind::Config, "boundary field size mismatch");
  const double L = g.total_length;
  auto wrap = [&](double s) {
    s = std::fmod(s, L);
    return s < 0 ? s + L : s;
  };
  // cumulative trapezoid from s = 0
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double ds = (k + 1 < n ? g.arclength[k + 1] : L) - g.arclength[k];
    cum[k + 1] = cum[k] + 0.5 * ds * (f[k] + f[(k + 1) % n]);
  }
  auto F = [&](double s) {
    auto it = std::upper_bound(g.arclength.begin(), g.arclength.end(), s);
    const std::size_t k = static_cast<std::size_t>(std::distance(g.arclength.begin(), it)) - 1;
    const double ds = (k + 1 < n ? g.arclength[k + 1] : L) - g.arclength[k];
    const double fr = (s - g.arclength[k]) / ds;
    const double fs = f[k] + fr * (f[(k + 1) % n] - f[k]);
    return cum[k] + 0.5 * (s - g.arclength[k]) * (f[k] + fs);
  };
  const double a = wrap(s1), b = wrap(s2);
  if (b >= a) return F(b) - F(a);
  return cum[n] - F(a) + F(b);
}

}  // namespace sc::geometry
