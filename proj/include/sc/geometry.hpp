#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sc/common.hpp"

namespace sc::geometry {

/// Closed counterclockwise boundary curve with a C1 Hermite-cubic interpolant through the samples.
/// Derivatives at samples use five-point periodic differences in the chord-length parameter.
class BoundaryGeometry {
 public:
  std::vector<Vec2> points;        ///< n distinct samples, counterclockwise
  std::vector<double> arclength;   ///< s at each sample, arclength[0] = 0
  std::vector<Vec2> normal;        ///< outward unit normal
  std::vector<Vec2> tangent;       ///< unit tangent, counterclockwise
  std::vector<double> curvature;   ///< positive for convex arcs
  double total_length = 0;
  bool convex = false;

  std::size_t size() const { return points.size(); }
  double min_spacing() const;
  /// Position, unit tangent and curvature at arclength s (periodic).
  Vec2 position(double s) const;
  Vec2 tangent_at(double s) const;
  Vec2 normal_at(double s) const;
  double curvature_at(double s) const;
  /// Point-in-polygon on the sample polygon.
  bool contains(Vec2 p) const;
  double signed_area() const;

  // Internals of the interpolant, exposed for the locator.
  std::vector<double> param;  ///< chord-length parameter u_k, with param[n] the period
  std::vector<Vec2> d1, d2;   ///< dr/du, d2r/du2 at samples

  /// Hermite evaluation on segment k at local fraction f in [0,1]; returns r, r_u, r_uu.
  void eval_segment(std::size_t k, double f, Vec2& r, Vec2& ru, Vec2& ruu) const;
  /// Converts arclength to (segment, local fraction).
  void locate(double s, std::size_t& k, double& f) const;
};

/// Builds the boundary from ordered samples. The last sample must repeat the first (closed curve).
/// Clockwise input is reoriented. Throws on fewer than 16 samples, open or self-intersecting curves.
BoundaryGeometry build_boundary(std::vector<Vec2> samples);

/// Closest-point coordinates relative to the boundary: s along the curve, t the inward distance.
struct BoundaryCoords {
  double s = 0;
  double t = 0;
  Vec2 foot;
};

/// Bucketed closest-point queries limited to a search radius.
class BoundaryLocator {
 public:
  BoundaryLocator(const BoundaryGeometry& g, double max_distance);
  /// Nullopt when the closest boundary point is further than max_distance.
  std::optional<BoundaryCoords> project(Vec2 p) const;

 private:
  const BoundaryGeometry* g_;
  double r_, cell_;
  double x0_, y0_;
  int nx_, ny_;
  std::vector<std::vector<int>> buckets_;
};

// --- presets -----------------------------------------------------------------------------------

std::vector<Vec2> circle_samples(double radius, Vec2 center, int n);
std::vector<Vec2> ellipse_samples(double a, double b, Vec2 center, int n);
/// Straight part of length 2*half_length joined by semicircles of the given radius.
std::vector<Vec2> stadium_samples(double half_length, double radius, int n);
/// Polygon with circular fillets of the given radius at every vertex (radius 0 keeps corners).
std::vector<Vec2> rounded_polygon_samples(const std::vector<Vec2>& vertices, double radius, int n);
/// Two square lobes of side `lobe` joined by a neck of width `neck_width` and length `neck_length`.
std::vector<Vec2> dumbbell_samples(double lobe, double neck_width, double neck_length, double fillet, int n);
std::vector<Vec2> rectangle_samples(double lx, double ly, int n);

// --- grids ---------------------------------------------------------------------------------------

struct GridSpec {
  double h = 0.02;
  double xmin = 0, ymin = 0, xmax = 1, ymax = 1;
  double delta = 0;  ///< boundary band width eps^iota (0 if unused)
  void validate() const;
};

/// Cell-centred values on a uniform Cartesian grid with an in-domain mask.
struct ScalarField2D {
  int nx = 0, ny = 0;
  double h = 0, x0 = 0, y0 = 0;  ///< (x0, y0) is the centre of cell (0, 0)
  std::vector<double> values;
  std::vector<unsigned char> mask;
  bool mean_zero = false;

  double& at(int i, int k) { return values[static_cast<std::size_t>(k) * nx + i]; }
  double at(int i, int k) const { return values[static_cast<std::size_t>(k) * nx + i]; }
  bool inside(int i, int k) const { return mask[static_cast<std::size_t>(k) * nx + i] != 0; }
  Vec2 center(int i, int k) const { return {x0 + i * h, y0 + k * h}; }
  double domain_average() const;
};

ScalarField2D make_field(const GridSpec& g, const std::function<bool(Vec2)>& inside);

// --- geodesics -----------------------------------------------------------------------------------

/// In-closure shortest paths by Dijkstra on a node grid with a 5x5 chamfer neighbourhood
/// (axial, diagonal and knight moves; worst-case overestimate about 2.7%).
/// Exact |x - y| is returned whenever the chord lies in the closure.
class GeodesicSolver {
 public:
  GeodesicSolver(const BoundaryGeometry& g, double h);
  double distance(Vec2 x, Vec2 y) const;
  /// Distances from x to every target, one graph search.
  std::vector<double> distances(Vec2 x, const std::vector<Vec2>& targets) const;
  bool visible(Vec2 p, Vec2 q) const;
  double spacing() const { return h_; }

 private:
  const BoundaryGeometry* g_;
  double h_;
  double x0_, y0_;
  int nx_, ny_;
  std::vector<int> node_of_;      // grid index -> node id or -1
  std::vector<Vec2> nodes_;
  std::vector<std::size_t> adj_start_;
  std::vector<std::pair<int, double>> adj_;
  // fine raster of the (slightly dilated) closure used for visibility tests
  double rh_;
  int rnx_, rny_;
  std::vector<unsigned char> raster_;
  bool raster_inside(Vec2 p) const;
  std::vector<int> attach(Vec2 p) const;
};

double geodesic_distance(Vec2 x, Vec2 y, const BoundaryGeometry& g, const GridSpec& grid);

/// Counterclockwise trapezoid integral of sampled f from arclength s1 to s2.
double boundary_integral(const BoundaryGeometry& g, const std::vector<double>& f, double s1, double s2);

/// Fornberg finite-difference weights at x0 for derivatives 0..m on nodes x.
std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& x, int m);

}  // namespace sc::geometry
