#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "sc/geometry.hpp"

using namespace sc;
using namespace sc::geometry;
using Catch::Approx;

namespace {

bool proper_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a), d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  return ((d1 > 1e-12 && d2 < -1e-12) || (d1 < -1e-12 && d2 > 1e-12)) &&
         ((d3 > 1e-12 && d4 < -1e-12) || (d3 < -1e-12 && d4 > 1e-12));
}

bool on_boundary(const BoundaryGeometry& g, Vec2 p) {
  const std::size_t n = g.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 a = g.points[k], b = g.points[(k + 1) % n], ab = b - a;
    const double f = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
    if (norm(p - (a + f * ab)) < 1e-9) return true;
  }
  return false;
}

// Exact polygon visibility: no proper crossing and sampled points in the closure.
bool exact_visible(const BoundaryGeometry& g, Vec2 p, Vec2 q) {
  const std::size_t n = g.size();
  for (std::size_t k = 0; k < n; ++k)
    if (proper_cross(p, q, g.points[k], g.points[(k + 1) % n])) return false;
  for (int s = 1; s < 16; ++s) {
    const Vec2 m = p + (s / 16.0) * (q - p);
    if (!g.contains(m) && !on_boundary(g, m)) return false;
  }
  return true;
}

// Shortest path through reflex polygon vertices (exact for the sample polygon).
double visibility_graph_distance(const BoundaryGeometry& g, Vec2 x, Vec2 y) {
  std::vector<Vec2> v{x, y};
  const std::size_t n = g.size();
  for (std::size_t k = 0; k < n; ++k)
    if (cross(g.points[k] - g.points[(k + n - 1) % n], g.points[(k + 1) % n] - g.points[k]) < -1e-12) v.push_back(g.points[k]);
  const std::size_t m = v.size();
  std::vector<double> d(m, std::numeric_limits<double>::infinity());
  std::vector<char> done(m, 0);
  d[0] = 0;
  for (std::size_t it = 0; it < m; ++it) {
    std::size_t u = m;
    for (std::size_t i = 0; i < m; ++i)
      if (!done[i] && (u == m || d[i] < d[u])) u = i;
    done[u] = 1;
    for (std::size_t w = 0; w < m; ++w)
      if (!done[w] && exact_visible(g, v[u], v[w])) d[w] = std::min(d[w], d[u] + norm(v[w] - v[u]));
  }
  return d[1];
}

// Plain 8-connected Dijkstra over in-domain grid nodes.
double grid_dijkstra(const BoundaryGeometry& g, Vec2 x, Vec2 y, double h) {
  double xmin = 1e9, ymin = 1e9, xmax = -1e9, ymax = -1e9;
  for (auto p : g.points) {
    xmin = std::min(xmin, p.x); ymin = std::min(ymin, p.y);
    xmax = std::max(xmax, p.x); ymax = std::max(ymax, p.y);
  }
  const int nx = static_cast<int>((xmax - xmin) / h) + 1, ny = static_cast<int>((ymax - ymin) / h) + 1;
  auto P = [&](int i, int k) { return Vec2{xmin + i * h, ymin + k * h}; };
  const int N = nx * ny + 2;  // + source, target
  std::vector<std::vector<std::pair<int, double>>> adj(N);
  std::vector<char> in(nx * ny);
  for (int k = 0; k < ny; ++k)
    for (int i = 0; i < nx; ++i) in[k * nx + i] = g.contains(P(i, k));
  for (int k = 0; k < ny; ++k)
    for (int i = 0; i < nx; ++i) {
      if (!in[k * nx + i]) continue;
      for (int dk = -1; dk <= 1; ++dk)
        for (int di = -1; di <= 1; ++di) {
          const int a = i + di, b = k + dk;
          if ((!di && !dk) || a < 0 || b < 0 || a >= nx || b >= ny || !in[b * nx + a]) continue;
          if (exact_visible(g, P(i, k), P(a, b))) adj[k * nx + i].push_back({b * nx + a, norm(P(a, b) - P(i, k))});
        }
      for (int e = 0; e < 2; ++e) {
        const Vec2 z = e ? y : x;
        if (norm(z - P(i, k)) < 2.5 * h && exact_visible(g, z, P(i, k))) {
          adj[nx * ny + e].push_back({k * nx + i, norm(z - P(i, k))});
          adj[k * nx + i].push_back({nx * ny + e, norm(z - P(i, k))});
        }
      }
    }
  std::vector<double> d(N, 1e300);
  std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>, std::greater<>> pq;
  d[nx * ny] = 0;
  pq.push({0, nx * ny});
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (du > d[u]) continue;
    for (auto [w, c] : adj[u])
      if (du + c < d[w]) {
        d[w] = du + c;
        pq.push({d[w], w});
      }
  }
  return d[nx * ny + 1];
}

}  // namespace

TEST_CASE("build_boundary curvature and frame") {
  SECTION("unit circle, 64 samples") {
    auto g = build_boundary(circle_samples(1.0, {0, 0}, 64));
    const double h = 2 * std::numbers::pi / 64;
    for (double k : g.curvature) CHECK(std::abs(k - 1.0) < h * h);
    for (auto n : g.normal) CHECK(norm(n) == Approx(1.0).epsilon(1e-14));
    CHECK(g.total_length == Approx(2 * std::numbers::pi).epsilon(1e-6));
    CHECK(g.convex);
  }
  SECTION("circle of radius R has curvature 1/R at every resolution >= 32") {
    for (int n : {32, 64, 256})
      for (double R : {0.5, 3.0}) {
        auto g = build_boundary(circle_samples(R, {1, -2}, n));
        const double h = 2 * std::numbers::pi * R / n;
        for (double k : g.curvature) CHECK(std::abs(k - 1 / R) < h * h / R);
      }
  }
  SECTION("ellipse (2,1): curvature a/b^2 at (2,0)") {
    auto g = build_boundary(ellipse_samples(2.0, 1.0, {0, 0}, 256));
    CHECK(g.points[0].x == Approx(2.0));
    CHECK(g.curvature[0] == Approx(2.0).epsilon(1e-4));
    // (0,1) has curvature b/a^2
    CHECK(g.curvature[64] == Approx(0.25).epsilon(1e-4));
  }
  SECTION("stadium straight part has zero curvature") {
    auto g = build_boundary(stadium_samples(1.0, 0.5, 200));
    int checked = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto p = g.points[k];
      if (std::abs(p.y + 0.5) < 1e-12 && std::abs(p.x) < 0.8) {
        CHECK(std::abs(g.curvature[k]) < 1e-10);
        ++checked;
      }
    }
    CHECK(checked > 10);
  }
  SECTION("r_ss = -kappa n along an ellipse") {
    auto g = build_boundary(ellipse_samples(1.5, 1.0, {0, 0}, 400));
    const double ds = 1e-3;
    for (double s = 0.1; s < g.total_length; s += 0.37) {
      const Vec2 rss = (1 / (ds * ds)) * (g.position(s + ds) - 2.0 * g.position(s) + g.position(s - ds));
      const Vec2 pred = (-g.curvature_at(s)) * g.normal_at(s);
      CHECK(norm(rss - pred) < 5e-3);
    }
  }
  SECTION("clockwise input is reoriented") {
    auto pts = circle_samples(1.0, {0, 0}, 64);
    std::reverse(pts.begin(), pts.end());
    auto g = build_boundary(pts);
    CHECK(g.signed_area() > 0);
    CHECK(g.curvature[3] == Approx(1.0).epsilon(1e-3));
  }
  SECTION("rejections") {
    auto open = circle_samples(1.0, {0, 0}, 64);
    open.pop_back();
    open.pop_back();
    CHECK_THROWS_AS(build_boundary(open), Error);
    std::vector<Vec2> eight;
    for (int k = 0; k <= 61; ++k) {
      const double t = 2 * std::numbers::pi * (k % 61) / 61;
      eight.push_back({std::sin(t), std::sin(t) * std::cos(t)});
    }
    CHECK_THROWS_AS(build_boundary(eight), Error);
    std::vector<Vec2> touching;  // figure eight whose crossing is a sample
    for (int k = 0; k <= 64; ++k) {
      const double t = 2 * std::numbers::pi * (k % 64) / 64;
      touching.push_back({std::sin(t), std::sin(t) * std::cos(t)});
    }
    CHECK_THROWS_AS(build_boundary(touching), Error);
    CHECK_THROWS_AS(build_boundary(circle_samples(1.0, {0, 0}, 8)), Error);
  }
}

TEST_CASE("boundary locator") {
  auto g = build_boundary(circle_samples(1.0, {0, 0}, 256));
  BoundaryLocator loc(g, 0.3);
  for (double r : {0.75, 0.9, 0.999})
    for (double th : {0.1, 1.3, 2.9, 4.4}) {
      auto c = loc.project({r * std::cos(th), r * std::sin(th)});
      REQUIRE(c.has_value());
      CHECK(c->t == Approx(1 - r).margin(1e-7));
      CHECK(c->s == Approx(th).margin(1e-6));
    }
  CHECK_FALSE(loc.project({0.1, 0.0}).has_value());
}

TEST_CASE("geodesic distance") {
  SECTION("x = y gives zero") {
    auto g = build_boundary(rectangle_samples(1.0, 1.0, 200));
    CHECK(geodesic_distance({0.3, 0.4}, {0.3, 0.4}, g, {0.02, 0, 0, 1, 1, 0}) == 0.0);
  }
  SECTION("convex square diagonal") {
    auto g = build_boundary(rectangle_samples(1.0, 1.0, 200));
    CHECK(geodesic_distance({0, 0}, {1, 1}, g, {0.02, 0, 0, 1, 1, 0}) == Approx(std::sqrt(2.0)).margin(0.02));
  }
  SECTION("dumbbell lobes") {
    auto g = build_boundary(dumbbell_samples(1.0, 0.2, 0.6, 0.05, 600));
    CHECK_FALSE(g.convex);
    GeodesicSolver gs(g, 0.02);
    const Vec2 x{-1.2, 0.45}, y{1.2, 0.45};
    const double d = gs.distance(x, y);
    const double exact = visibility_graph_distance(g, x, y);
    const double dij = grid_dijkstra(g, x, y, 0.04);
    CHECK(d > norm(y - x) + 0.05);
    CHECK(d >= exact - 0.04);
    CHECK(d <= 1.03 * exact + 0.04);
    CHECK(d <= dij + 0.04);
  }
  SECTION("symmetry and triangle inequality") {
    auto g = build_boundary(dumbbell_samples(1.0, 0.3, 0.5, 0.05, 400));
    GeodesicSolver gs(g, 0.025);
    std::vector<Vec2> pts{{-1.1, 0.3}, {-0.6, -0.4}, {0.0, 0.1}, {0.9, 0.4}, {1.2, -0.3}};
    for (auto a : pts)
      for (auto b : pts) {
        CHECK(gs.distance(a, b) == Approx(gs.distance(b, a)).margin(0.03));
        for (auto c : pts) CHECK(gs.distance(a, c) <= gs.distance(a, b) + gs.distance(b, c) + 0.03);
      }
  }
  SECTION("outside point is rejected") {
    auto g = build_boundary(circle_samples(1.0, {0, 0}, 64));
    CHECK_THROWS_AS(geodesic_distance({2, 0}, {0, 0}, g, {0.05, -1, -1, 1, 1, 0}), Error);
  }
}

TEST_CASE("boundary_integral") {
  auto g = build_boundary(circle_samples(1.0, {0, 0}, 256));
  std::vector<double> zero(g.size(), 0.0), one(g.size(), 1.0), j(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) j[k] = 0.2 * std::cos(g.arclength[k]);
  CHECK(boundary_integral(g, zero, 0.3, 2.0) == 0.0);
  CHECK(boundary_integral(g, one, 0.0, g.total_length - 1e-12) == Approx(2 * std::numbers::pi).epsilon(1e-6));
  const double a = boundary_integral(g, j, 0.4, 2.5), b = boundary_integral(g, j, 2.5, 0.4);
  CHECK(a == Approx(-b).margin(1e-12));
  CHECK(a == Approx(0.2 * (std::sin(2.5) - std::sin(0.4))).epsilon(1e-3));
}
