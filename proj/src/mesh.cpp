#include "sc/mesh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

namespace sc::mesh {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Cubic Lagrange weights for nodes at 0,1,2,3 evaluated at t.
std::array<double, 4> lagrange4(double t) {
  return {-(t - 1) * (t - 2) * (t - 3) / 6.0, t * (t - 2) * (t - 3) / 2.0, -t * (t - 1) * (t - 3) / 2.0,
          t * (t - 1) * (t - 2) / 6.0};
}

Vec2 polygon_centroid(const std::vector<Vec2>& p) {
  double a = 0, cx = 0, cy = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2 u = p[i], v = p[(i + 1) % p.size()];
    const double c = cross(u, v);
    a += c;
    cx += (u.x + v.x) * c;
    cy += (u.y + v.y) * c;
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

}  // namespace

Vec2 Mesh::offset(int a, int b) const {
  Vec2 d = nodes[b] - nodes[a];
  if (periodic_y) d.y -= period_y * std::round(d.y / period_y);
  return d;
}

Vec2 Mesh::element_gradient(std::size_t t, const std::vector<double>& u) const {
  const auto& g = grad_basis[t];
  const auto& v = tris[t];
  return u[v[0]] * g[0] + u[v[1]] * g[1] + u[v[2]] * g[2];
}

double Mesh::total_area() const {
  double a = 0;
  for (double x : area) a += x;
  return a;
}

double Mesh::mean(const std::vector<double>& u) const {
  double s = 0, m = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += lumped_mass[i] * u[i];
    m += lumped_mass[i];
  }
  return s / m;
}

void Mesh::project_mean_zero(std::vector<double>& u) const {
  const double c = mean(u);
  for (double& x : u) x -= c;
}

void Mesh::build_operators() {
  area.resize(tris.size());
  grad_basis.resize(tris.size());
  lumped_mass.assign(nodes.size(), 0.0);
  double edge_sum = 0;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const auto& v = tris[t];
    const Vec2 p0{0, 0}, p1 = offset(v[0], v[1]), p2 = offset(v[0], v[2]);
    const double a2 = cross(p1 - p0, p2 - p0);
    if (!(a2 > 0)) throw Error(ErrorKind::Geometry, "mesh: inverted or degenerate triangle");
    area[t] = 0.5 * a2;
    grad_basis[t] = {Vec2{(p1.y - p2.y) / a2, (p2.x - p1.x) / a2}, Vec2{(p2.y - p0.y) / a2, (p0.x - p2.x) / a2},
                     Vec2{(p0.y - p1.y) / a2, (p1.x - p0.x) / a2}};
    for (int k = 0; k < 3; ++k) lumped_mass[v[k]] += area[t] / 3.0;
    edge_sum += norm(p1) + norm(p2) + norm(p2 - p1);
  }
  h_ = edge_sum / (3.0 * static_cast<double>(tris.size()));
  build_ranks();
  build_derivative_stencils();
}

void Mesh::build_ranks() {
  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& v : tris)
    for (int a = 0; a < 3; ++a) {
      adj[v[a]].push_back(v[(a + 1) % 3]);
      adj[v[(a + 1) % 3]].push_back(v[a]);
    }
  boundary_rank.assign(nodes.size(), -1);
  std::queue<int> q;
  for (int b : boundary) {
    boundary_rank[b] = 0;
    q.push(b);
  }
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (boundary_rank[v] < 0) {
        boundary_rank[v] = boundary_rank[u] + 1;
        q.push(v);
      }
  }
}

void Mesh::build_derivative_stencils() {
  // Bucket grid; in a periodic direction the bucket size divides the period.
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (auto p : nodes) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int bx = std::max(1, static_cast<int>((xmax - xmin) / h_) + 1);
  const int by = periodic_y ? std::max(1, static_cast<int>(period_y / h_))
                            : std::max(1, static_cast<int>((ymax - ymin) / h_) + 1);
  const double cx = (xmax - xmin) / bx + 1e-12, cy = periodic_y ? period_y / by : (ymax - ymin) / by + 1e-12;
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(bx) * by);
  auto cell_of = [&](Vec2 p, int& i, int& k) {
    i = std::clamp(static_cast<int>((p.x - xmin) / cx), 0, bx - 1);
    if (periodic_y) {
      double y = std::fmod(p.y - ymin, period_y);
      if (y < 0) y += period_y;
      k = std::clamp(static_cast<int>(y / cy), 0, by - 1);
    } else {
      k = std::clamp(static_cast<int>((p.y - ymin) / cy), 0, by - 1);
    }
  };
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    int i, k;
    cell_of(nodes[n], i, k);
    buckets[static_cast<std::size_t>(k) * bx + i].push_back(static_cast<int>(n));
  }
  const double cmin = std::min(cx, cy);

  d_start_.assign(nodes.size() + 1, 0);
  d_idx_.clear();
  d_w_.clear();
  std::vector<std::pair<double, int>> cand;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    int ci, ck;
    cell_of(nodes[n], ci, ck);
    d_start_[n] = d_idx_.size();
    for (int want = 30;; want += 8) {
      cand.clear();
      for (int r = 0;; ++r) {
        for (int dk = -r; dk <= r; ++dk)
          for (int di = -r; di <= r; ++di) {
            if (std::max(std::abs(di), std::abs(dk)) != r) continue;
            const int i = ci + di;
            int k = ck + dk;
            if (i < 0 || i >= bx) continue;
            if (periodic_y) {
              if (2 * r + 1 > by && (dk < -(by / 2) || dk > (by - 1) / 2)) continue;
              k = ((k % by) + by) % by;
            } else if (k < 0 || k >= by) {
              continue;
            }
            for (int m : buckets[static_cast<std::size_t>(k) * bx + i])
              cand.push_back({norm(offset(static_cast<int>(n), m)), m});
          }
        if (static_cast<int>(cand.size()) >= want) {
          std::nth_element(cand.begin(), cand.begin() + (want - 1), cand.end());
          if (r * cmin >= cand[want - 1].first) break;
        }
        if (r > bx + by) break;
      }
      std::sort(cand.begin(), cand.end());
      const int K = std::min<int>(want, static_cast<int>(cand.size()));
      const double hs = std::max(cand[K - 1].first / 2.0, 1e-300);
      Eigen::MatrixXd A(K, 10);
      Eigen::VectorXd sw(K);
      for (int r = 0; r < K; ++r) {
        const Vec2 d = offset(static_cast<int>(n), cand[r].second);
        const double X = d.x / hs, Y = d.y / hs, q = cand[r].first / hs;
        sw(r) = 1.0 / std::sqrt(1.0 + q * q);
        const double row[10] = {1, X, Y, X * X, X * Y, Y * Y, X * X * X, X * X * Y, X * Y * Y, Y * Y * Y};
        for (int c = 0; c < 10; ++c) A(r, c) = sw(r) * row[c];
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      if (sv(9) < 1e-7 * sv(0) && want < 80 && K == want) continue;
      Eigen::MatrixXd pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
      for (int r = 0; r < K; ++r) {
        const double s = sw(r);
        d_idx_.push_back(cand[r].second);
        d_w_.push_back({pinv(1, r) * s / hs, pinv(2, r) * s / hs, 2.0 * pinv(3, r) * s / (hs * hs),
                        pinv(4, r) * s / (hs * hs), 2.0 * pinv(5, r) * s / (hs * hs)});
      }
      break;
    }
  }
  d_start_[nodes.size()] = d_idx_.size();
}

NodalDerivatives Mesh::derivatives(const std::vector<double>& u) const {
  NodalDerivatives d;
  const std::size_t n = nodes.size();
  d.dx.assign(n, 0);
  d.dy.assign(n, 0);
  d.dxx.assign(n, 0);
  d.dxy.assign(n, 0);
  d.dyy.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double a[5] = {0, 0, 0, 0, 0};
    const double ui = u[i];
    for (std::size_t e = d_start_[i]; e < d_start_[i + 1]; ++e) {
      const double v = u[d_idx_[e]] - ui;
      for (int c = 0; c < 5; ++c) a[c] += d_w_[e][c] * v;
    }
    d.dx[i] = a[0];
    d.dy[i] = a[1];
    d.dxx[i] = a[2];
    d.dxy[i] = a[3];
    d.dyy[i] = a[4];
  }
  return d;
}

void Mesh::gradient(const std::vector<double>& u, std::vector<double>& dx, std::vector<double>& dy) const {
  const std::size_t n = nodes.size();
  dx.assign(n, 0);
  dy.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = u[i];
    for (std::size_t e = d_start_[i]; e < d_start_[i + 1]; ++e) {
      const double v = u[d_idx_[e]] - ui;
      dx[i] += d_w_[e][0] * v;
      dy[i] += d_w_[e][1] * v;
    }
  }
}

Vec2 Mesh::ray_point(double xi, double u) const {
  const int N = n_theta;
  double fl = std::floor(u);
  const double f = u - fl;
  int k = static_cast<int>(fl) % N;
  if (k < 0) k += N;
  const Vec2 b0 = nodes[ring_start[n_rings] + k], b1 = nodes[ring_start[n_rings] + (k + 1) % N];
  const Vec2 b = b0 + f * (b1 - b0);
  return center + xi * (b - center);
}

std::pair<double, double> Mesh::logical(Vec2 p) const {
  if (kind == Kind::Rect) return {p.x, p.y};
  const Vec2 d = p - center;
  if (norm(d) < 1e-300) return {0.0, 0.0};
  const int N = n_theta;
  const int b0 = ring_start[n_rings];
  const double th0 = std::atan2(nodes[b0].y - center.y, nodes[b0].x - center.x);
  double th = std::atan2(d.y, d.x) - th0;
  th -= kTwoPi * std::floor(th / kTwoPi);
  // boundary node angles relative to node 0 increase monotonically on [0, 2 pi)
  int lo = 0, hi = N;  // invariant: angle(lo) <= th < angle(hi), angle(N) = 2 pi
  auto ang = [&](int k) {
    if (k >= N) return kTwoPi;
    const Vec2 b = nodes[b0 + k] - center;
    double a = std::atan2(b.y, b.x) - th0;
    a -= kTwoPi * std::floor(a / kTwoPi);
    return k == 0 ? 0.0 : a;
  };
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (ang(mid) <= th) lo = mid;
    else hi = mid;
  }
  const Vec2 d0 = nodes[b0 + lo] - center, d1 = nodes[b0 + (lo + 1) % N] - nodes[b0 + lo];
  const double den = cross(d, d1);
  double f = std::abs(den) > 1e-300 ? -cross(d, d0) / den : 0.0;
  f = std::clamp(f, 0.0, 1.0);
  const Vec2 dir = d0 + f * d1;
  return {norm(d) / norm(dir), lo + f};
}

InterpStencil Mesh::stencil(Vec2 p) const {
  InterpStencil st;
  if (kind == Kind::Rect) {
    const double hx = lx / nx, hy = ly / ny;
    const double sx = p.x / hx;
    const int i0 = std::clamp(static_cast<int>(std::floor(sx)) - 1, 0, nx - 3);
    const auto wx = lagrange4(sx - i0);
    const double sy = p.y / hy;
    int k0;
    std::array<double, 4> wy;
    if (periodic_y) {
      k0 = static_cast<int>(std::floor(sy)) - 1;
      wy = lagrange4(sy - k0);
    } else {
      k0 = std::clamp(static_cast<int>(std::floor(sy)) - 1, 0, ny - 3);
      wy = lagrange4(sy - k0);
    }
    for (int b = 0; b < 4; ++b) {
      int k = k0 + b;
      if (periodic_y) k = ((k % ny) + ny) % ny;
      for (int a = 0; a < 4; ++a) {
        st.idx[st.size] = k * (nx + 1) + i0 + a;
        st.w[st.size++] = wx[a] * wy[b];
      }
    }
    const double tol = 1e-12 * std::max(lx, ly);
    st.inside = p.x >= -tol && p.x <= lx + tol && (periodic_y || (p.y >= -tol && p.y <= ly + tol));
    return st;
  }
  const auto [xi, u] = logical(p);
  const double s = xi * n_rings;
  const int r0 = std::clamp(static_cast<int>(std::floor(s)) - 1, 0, n_rings - 3);
  const auto wr = lagrange4(s - r0);
  for (int b = 0; b < 4; ++b) {
    const int r = r0 + b;
    if (r == 0) {
      st.idx[st.size] = 0;
      st.w[st.size++] = wr[b];
      continue;
    }
    const int n = ring_count[r];
    const double v = u * n / n_theta;
    const int k0 = static_cast<int>(std::floor(v)) - 1;
    const auto wa = lagrange4(v - k0);
    for (int a = 0; a < 4; ++a) {
      const int k = (((k0 + a) % n) + n) % n;
      st.idx[st.size] = ring_start[r] + k;
      st.w[st.size++] = wr[b] * wa[a];
    }
  }
  st.inside = xi <= 1.0 + 1e-12;
  return st;
}

bool Mesh::contains(Vec2 p) const {
  if (kind == Kind::Rect) {
    const double tol = 1e-12 * std::max(lx, ly);
    return p.x >= -tol && p.x <= lx + tol && (periodic_y || (p.y >= -tol && p.y <= ly + tol));
  }
  return logical(p).first <= 1.0 + 1e-12;
}

Mesh make_star_mesh(const geometry::BoundaryGeometry& g, int n_rings, int n_theta, std::optional<Vec2> center) {
  if (n_rings < 4 || n_theta < 12) throw Error(ErrorKind::Config, "star mesh needs >= 4 rings and >= 12 boundary nodes");
  Mesh m;
  m.kind = Mesh::Kind::Star;
  m.curve = g;
  m.center = center ? *center : polygon_centroid(g.points);
  m.n_rings = n_rings;
  m.n_theta = n_theta;
  if (!g.contains(m.center)) throw Error(ErrorKind::Geometry, "star mesh centre lies outside the domain");

  // Star-shapedness: the polar angle about the centre must increase along the curve.
  auto check_monotone = [&](const std::vector<Vec2>& pts) {
    double total = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const Vec2 a = pts[k] - m.center, b = pts[(k + 1) % pts.size()] - m.center;
      const double dth = std::atan2(cross(a, b), dot(a, b));
      if (!(dth > 0)) throw Error(ErrorKind::Geometry, "domain is not star-shaped about its centre; the outer solver needs a star mesh");
      total += dth;
    }
    if (std::abs(total - kTwoPi) > 1e-6) throw Error(ErrorKind::Geometry, "boundary does not wind once around the centre");
  };
  check_monotone(g.points);

  std::vector<Vec2> b(n_theta);
  for (int k = 0; k < n_theta; ++k) b[k] = g.position(g.total_length * k / n_theta);
  check_monotone(b);

  m.ring_start.assign(n_rings + 1, 0);
  m.ring_count.assign(n_rings + 1, 0);
  m.nodes.push_back(m.center);
  m.ring_count[0] = 1;
  for (int r = 1; r <= n_rings; ++r) {
    m.ring_count[r] =
        r == n_rings ? n_theta : std::min(n_theta, std::max(6, static_cast<int>(std::lround(double(n_theta) * r / n_rings))));
    m.ring_start[r] = static_cast<int>(m.nodes.size());
    m.nodes.resize(m.nodes.size() + m.ring_count[r]);
  }
  // boundary ring first so that ray_point can use it
  for (int k = 0; k < n_theta; ++k) m.nodes[m.ring_start[n_rings] + k] = b[k];
  for (int r = 1; r < n_rings; ++r) {
    const int n = m.ring_count[r];
    for (int k = 0; k < n; ++k)
      m.nodes[m.ring_start[r] + k] = m.ray_point(double(r) / n_rings, double(k) * n_theta / n);
  }

  // pole fan
  for (int k = 0; k < m.ring_count[1]; ++k)
    m.tris.push_back({0, m.ring_start[1] + k, m.ring_start[1] + (k + 1) % m.ring_count[1]});
  // stitch ring r to ring r+1 in angular order
  for (int r = 1; r < n_rings; ++r) {
    const int ni = m.ring_count[r], no = m.ring_count[r + 1];
    const int si = m.ring_start[r], so = m.ring_start[r + 1];
    int a = 0, c = 0;
    while (a < ni || c < no) {
      const double ua = double(a + 1) / ni, uc = double(c + 1) / no;
      if (c < no && (a >= ni || uc <= ua)) {
        m.tris.push_back({si + a % ni, so + c % no, so + (c + 1) % no});
        ++c;
      } else {
        m.tris.push_back({si + a % ni, so + c % no, si + (a + 1) % ni});
        ++a;
      }
    }
  }

  for (int k = 0; k < n_theta; ++k) {
    const int id = m.ring_start[n_rings] + k;
    m.boundary.push_back(id);
    const double s = g.total_length * k / n_theta;
    m.boundary_s.push_back(s);
    m.boundary_normal.push_back(g.normal_at(s));
    const Vec2 prev = b[(k + n_theta - 1) % n_theta], next = b[(k + 1) % n_theta];
    m.boundary_weight.push_back(0.5 * (norm(b[k] - prev) + norm(next - b[k])));
  }
  m.build_operators();
  return m;
}

Mesh make_star_mesh_h(const geometry::BoundaryGeometry& g, double h) {
  if (!(h > 0)) throw Error(ErrorKind::Config, "mesh spacing must be positive");
  const Vec2 c = polygon_centroid(g.points);
  double rmax = 0;
  for (auto p : g.points) rmax = std::max(rmax, norm(p - c));
  const int n_rings = std::max(4, static_cast<int>(std::ceil(rmax / h)));
  const int n_theta = std::max(12, static_cast<int>(std::ceil(g.total_length / h)));
  return make_star_mesh(g, n_rings, n_theta, c);
}

Mesh make_rect_mesh(double lx, double ly, int nx, int ny, bool periodic_y) {
  if (!(lx > 0 && ly > 0) || nx < 3 || ny < 3) throw Error(ErrorKind::Config, "rect mesh needs positive sides and >= 3 cells per side");
  Mesh m;
  m.kind = Mesh::Kind::Rect;
  m.lx = lx;
  m.ly = ly;
  m.nx = nx;
  m.ny = ny;
  m.periodic_y = periodic_y;
  m.period_y = periodic_y ? ly : 0.0;
  const int rows = periodic_y ? ny : ny + 1;
  const double hx = lx / nx, hy = ly / ny;
  for (int k = 0; k < rows; ++k)
    for (int i = 0; i <= nx; ++i) m.nodes.push_back({i * hx, k * hy});
  auto id = [&](int i, int k) { return (periodic_y ? ((k % ny) + ny) % ny : k) * (nx + 1) + i; };
  for (int k = 0; k < ny; ++k)
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, k), b = id(i + 1, k), c = id(i + 1, k + 1), d = id(i, k + 1);
      if ((i + k) % 2 == 0) {
        m.tris.push_back({a, b, c});
        m.tris.push_back({a, c, d});
      } else {
        m.tris.push_back({a, b, d});
        m.tris.push_back({b, c, d});
      }
    }
  auto add = [&](int node, double s, Vec2 n, double w) {
    m.boundary.push_back(node);
    m.boundary_s.push_back(s);
    m.boundary_normal.push_back(n);
    m.boundary_weight.push_back(w);
  };
  if (periodic_y) {
    for (int k = 0; k < ny; ++k) add(id(nx, k), k * hy, {1, 0}, hy);
    for (int k = ny - 1; k >= 0; --k) add(id(0, k), ly + (ny - k) * hy, {-1, 0}, hy);
  } else {
    const double d = std::sqrt(0.5);
    double s = 0;
    for (int i = 0; i < nx; ++i, s += hx) add(id(i, 0), s, i == 0 ? Vec2{-d, -d} : Vec2{0, -1}, i == 0 ? 0.5 * (hx + hy) : hx);
    for (int k = 0; k < ny; ++k, s += hy) add(id(nx, k), s, k == 0 ? Vec2{d, -d} : Vec2{1, 0}, k == 0 ? 0.5 * (hx + hy) : hy);
    for (int i = nx; i > 0; --i, s += hx) add(id(i, ny), s, i == nx ? Vec2{d, d} : Vec2{0, 1}, i == nx ? 0.5 * (hx + hy) : hx);
    for (int k = ny; k > 0; --k, s += hy) add(id(0, k), s, k == ny ? Vec2{-d, d} : Vec2{-1, 0}, k == ny ? 0.5 * (hx + hy) : hy);
  }
  m.build_operators();
  return m;
}

geometry::ScalarField2D sample_to_grid(const Mesh& m, const std::vector<double>& u, double h, bool mean_zero) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (auto p : m.nodes) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  if (m.periodic_y) ymax = ymin + m.period_y;
  geometry::ScalarField2D f;
  f.h = h;
  f.nx = std::max(1, static_cast<int>(std::ceil((xmax - xmin) / h)));
  f.ny = std::max(1, static_cast<int>(std::ceil((ymax - ymin) / h)));
  f.x0 = xmin + 0.5 * h;
  f.y0 = ymin + 0.5 * h;
  f.values.assign(static_cast<std::size_t>(f.nx) * f.ny, 0.0);
  f.mask.assign(f.values.size(), 0);
  f.mean_zero = mean_zero;
  for (int k = 0; k < f.ny; ++k)
    for (int i = 0; i < f.nx; ++i) {
      const auto st = m.stencil(f.center(i, k));
      if (!st.inside) continue;
      f.mask[static_cast<std::size_t>(k) * f.nx + i] = 1;
      f.at(i, k) = st.apply(u);
    }
  return f;
}

}  // namespace sc::mesh
