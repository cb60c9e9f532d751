#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sc/common.hpp"
#include "sc/geometry.hpp"

namespace sc::mesh {

/// Nodal first and second derivatives.
struct NodalDerivatives {
  std::vector<double> dx, dy, dxx, dxy, dyy;
  double laplacian(std::size_t i) const { return dxx[i] + dyy[i]; }
};

/// Up to 16 (node, weight) pairs reproducing cubic data at a point.
struct InterpStencil {
  std::array<int, 16> idx{};
  std::array<double, 16> w{};
  int size = 0;
  bool inside = false;
  double apply(const std::vector<double>& u) const {
    double v = 0;
    for (int k = 0; k < size; ++k) v += w[k] * u[idx[k]];
    return v;
  }
};

/// Boundary-fitted P1 triangulation.
///
/// Star meshes: node rings at xi = r/N on rays c + xi (b(u) - c), where b(u) is the chord
/// interpolant of n_theta boundary nodes at uniform arclength; ring r carries about n_theta r/N
/// nodes (at least 6) and adjacent rings are stitched in angular order. Node 0 is the pole.
/// Rect meshes: uniform (nx+1) x (ny+1) nodes, optionally periodic in y (ny distinct rows).
class Mesh {
 public:
  enum class Kind { Star, Rect };
  Kind kind = Kind::Rect;

  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;       ///< counterclockwise
  std::vector<double> area;                    ///< per triangle
  std::vector<std::array<Vec2, 3>> grad_basis; ///< gradients of the three hat functions per triangle
  std::vector<double> lumped_mass;             ///< per node, sum of area/3

  std::vector<int> boundary;              ///< boundary nodes in boundary order
  std::vector<double> boundary_s;         ///< arclength station (star) or perimeter coordinate (rect)
  std::vector<Vec2> boundary_normal;      ///< outward unit normal
  std::vector<double> boundary_weight;    ///< lumped boundary length
  std::vector<int> boundary_rank;         ///< edge-graph distance to the boundary, per node

  bool periodic_y = false;
  double period_y = 0;

  // star layout
  Vec2 center;
  int n_rings = 0, n_theta = 0;
  std::vector<int> ring_start, ring_count;
  std::optional<geometry::BoundaryGeometry> curve;

  // rect layout
  int nx = 0, ny = 0;
  double lx = 0, ly = 0;

  std::size_t size() const { return nodes.size(); }
  /// Vector from node a to node b, with the periodic wrap applied.
  Vec2 offset(int a, int b) const;
  Vec2 element_gradient(std::size_t t, const std::vector<double>& u) const;
  double total_area() const;
  /// Lumped-mass average.
  double mean(const std::vector<double>& u) const;
  void project_mean_zero(std::vector<double>& u) const;

  /// Weighted least-squares cubic fits over nearest neighbours.
  NodalDerivatives derivatives(const std::vector<double>& u) const;
  void gradient(const std::vector<double>& u, std::vector<double>& dx, std::vector<double>& dy) const;

  InterpStencil stencil(Vec2 p) const;
  double interpolate(const std::vector<double>& u, Vec2 p) const { return stencil(p).apply(u); }
  bool contains(Vec2 p) const;
  /// Local mesh coordinates: (xi, u) for star meshes, (x, y) for rect meshes.
  std::pair<double, double> logical(Vec2 p) const;
  /// Star meshes: position on the ray through fine boundary index u at radius fraction xi.
  Vec2 ray_point(double xi, double u) const;
  double spacing() const { return h_; }

  void build_operators();  ///< element data, lumped mass, ranks, derivative stencils

 private:
  double h_ = 0;
  std::vector<std::size_t> d_start_;
  std::vector<int> d_idx_;
  std::vector<std::array<double, 5>> d_w_;
  void build_derivative_stencils();
  void build_ranks();
};

/// Star-shaped mesh of a closed curve. Throws Geometry when the curve is not star-shaped about
/// the centre (default: area centroid).
Mesh make_star_mesh(const geometry::BoundaryGeometry& g, int n_rings, int n_theta,
                    std::optional<Vec2> center = std::nullopt);
/// Star mesh with ring spacing and boundary spacing close to h.
Mesh make_star_mesh_h(const geometry::BoundaryGeometry& g, double h);

/// [0,lx] x [0,ly] with nx x ny cells. Periodic meshes keep the two x faces as boundary.
Mesh make_rect_mesh(double lx, double ly, int nx, int ny, bool periodic_y);

/// Samples a nodal field at cell centres of a Cartesian grid over the mesh bounding box.
geometry::ScalarField2D sample_to_grid(const Mesh& m, const std::vector<double>& u, double h, bool mean_zero);

}  // namespace sc::mesh
