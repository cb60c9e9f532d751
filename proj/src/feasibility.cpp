#include "sc/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <memory>
#include <thread>

namespace sc::feasibility {

using geometry::BoundaryGeometry;

namespace {

double bump(double ds, double w) {
  if (std::abs(ds) >= w) return 0.0;
  const double c = std::cos(0.5 * std::numbers::pi * ds / w);
  return c * c;
}

double periodic_offset(double s, double c, double L) {
  double d = std::fmod(s - c, L);
  if (d > 0.5 * L) d -= L;
  if (d < -0.5 * L) d += L;
  return d;
}

std::vector<double> segment_lengths(const BoundaryGeometry& g) {
  const std::size_t n = g.size();
  std::vector<double> ds(n);
  for (std::size_t k = 0; k < n; ++k) ds[k] = (k + 1 < n ? g.arclength[k + 1] : g.total_length) - g.arclength[k];
  return ds;
}

}  // namespace

double total_flux(const BoundaryGeometry& g, const CurrentProfile& j) {
  const auto ds = segment_lengths(g);
  const std::size_t n = g.size();
  double s = 0;
  for (std::size_t k = 0; k < n; ++k) s += 0.5 * ds[k] * (j.j[k] + j.j[(k + 1) % n]);
  return s;
}

void enforce_mean_free(const BoundaryGeometry& g, CurrentProfile& j) {
  const double mean = total_flux(g, j) / g.total_length;
  for (auto& v : j.j) v -= mean;
  j.mean_free = true;
}

CurrentProfile make_current(const BoundaryGeometry& g, const CurrentSpec& spec) {
  CurrentProfile out;
  const std::size_t n = g.size();
  out.j.assign(n, 0.0);
  const double L = g.total_length;
  if (spec.preset == "zero") {
  } else if (spec.preset == "cosine") {
    for (std::size_t k = 0; k < n; ++k)
      out.j[k] = spec.amplitude * std::cos(spec.mode * 2 * std::numbers::pi * g.arclength[k] / L + spec.phase);
  } else if (spec.preset == "arcs") {
    const double w = spec.width * L;
    for (std::size_t k = 0; k < n; ++k) {
      const double s = g.arclength[k];
      out.j[k] = spec.amplitude * (bump(periodic_offset(s, spec.outlet * L, L), w) - bump(periodic_offset(s, spec.inlet * L, L), w));
    }
  } else if (spec.preset == "edges") {
    double lo = 1e300, hi = -1e300;
    auto coord = [&](Vec2 p) { return spec.axis == 0 ? p.x : p.y; };
    for (auto p : g.points) {
      lo = std::min(lo, coord(p));
      hi = std::max(hi, coord(p));
    }
    const double tol = 1e-9 * (hi - lo);
    for (std::size_t k = 0; k < n; ++k) {
      const double c = spec.axis == 0 ? g.normal[k].x : g.normal[k].y;
      const double x = coord(g.points[k]);
      if (c > 0.999 && x > hi - tol) out.j[k] = spec.amplitude;
      else if (c < -0.999 && x < lo + tol) out.j[k] = -spec.amplitude;
    }
  } else {
    throw Error(ErrorKind::Config, "unknown current preset '" + spec.preset + "'");
  }
  enforce_mean_free(g, out);
  return out;
}

double critical_current() {
  double lo = 0.0, hi = 1.0;  // derivative 1 - 3t^2 changes sign once on [0,1]
  while (hi - lo > 1e-16) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (1.0 - 3.0 * mid * mid > 0) lo = mid;
    else hi = mid;
  }
  const double t = 0.5 * (lo + hi);
  return t - t * t * t;
}

PointwiseResult check_pointwise(const CurrentProfile& j) {
  PointwiseResult r;
  for (double v : j.j) r.max_abs = std::max(r.max_abs, std::abs(v));
  r.ok = r.max_abs <= kCriticalCurrent;
  return r;
}

FeasibilityReport sup_M(const BoundaryGeometry& g, const CurrentProfile& j, const FeasibilityOptions& opt) {
  const std::size_t n = g.size();
  if (j.j.size() != n) throw Error(ErrorKind::Config, "current profile does not match boundary samples");
  FeasibilityReport rep;
  const auto pw = check_pointwise(j);
  rep.pointwise_ok = pw.ok;
  rep.max_abs_j = pw.max_abs;

  const auto ds = segment_lengths(g);
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) cum[k + 1] = cum[k] + 0.5 * ds[k] * (j.j[k] + j.j[(k + 1) % n]);

  std::unique_ptr<geometry::GeodesicSolver> geo;
  if (g.convex) {
    rep.distance_method = "euclidean (convex domain)";
  } else {
    geo = std::make_unique<geometry::GeodesicSolver>(g, opt.grid_h);
    rep.distance_method = "chamfer grid graph (5x5), h = " + std::to_string(opt.grid_h);
  }
  const double dmin = opt.grid_h;

  struct Local {
    double best = 0;
    int a = 0, b = 0;
    std::vector<PairValue> pairs;
  };
  const int jobs = std::max(1, opt.jobs);
  std::vector<Local> local(jobs);
  auto work = [&](int w) {
    Local& L = local[w];
    for (std::size_t a = w; a < n; a += jobs) {
      std::vector<Vec2> targets(g.points.begin() + a + 1, g.points.end());
      std::vector<double> d;
      if (geo) d = geo->distances(g.points[a], targets);
      for (std::size_t b = a + 1; b < n; ++b) {
        const double dist = geo ? d[b - a - 1] : norm(g.points[b] - g.points[a]);
        if (dist < dmin) continue;
        const double I = cum[b] - cum[a];
        const double M = std::abs(I) / dist;
        if (M > L.best) {
          L.best = M;
          L.a = static_cast<int>(a);
          L.b = static_cast<int>(b);
        }
        if (opt.record_pairs) L.pairs.push_back({static_cast<int>(a), static_cast<int>(b), dist, I, M});
      }
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> th;
    for (int w = 0; w < jobs; ++w) th.emplace_back(work, w);
    for (auto& t : th) t.join();
  }
  // deterministic merge: largest M, ties broken by the smallest (a, b)
  int ba = 0, bb = 0;
  for (const auto& L : local)
    if (L.best > rep.sup_M || (L.best == rep.sup_M && L.best > 0 && std::pair(L.a, L.b) < std::pair(ba, bb))) {
      rep.sup_M = L.best;
      ba = L.a;
      bb = L.b;
    }
  rep.argmax_x = g.points[ba];
  rep.argmax_y = g.points[bb];
  if (opt.record_pairs) {
    for (auto& L : local) rep.pairs.insert(rep.pairs.end(), L.pairs.begin(), L.pairs.end());
    std::sort(rep.pairs.begin(), rep.pairs.end(), [](const PairValue& p, const PairValue& q) { return std::pair(p.a, p.b) < std::pair(q.a, q.b); });
  }
  rep.margin = kCriticalCurrent - rep.sup_M;
  rep.feasible = rep.pointwise_ok && rep.sup_M <= kCriticalCurrent;
  return rep;
}

}  // namespace sc::feasibility
