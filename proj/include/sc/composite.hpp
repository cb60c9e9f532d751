#pragma once

#include <cstddef>
#include <vector>

#include "sc/common.hpp"
#include "sc/inner.hpp"
#include "sc/mesh.hpp"
#include "sc/outer.hpp"

namespace sc::composite {

/// Cutoff Y(x): 1 for x <= 1, 0 for x >= 2, C^3 in between with max |Y'| = 3/2.
/// Y' is a plateau of height -3/2 on [4/3, 5/3] joined to zero by quintic smoothsteps of width 1/3.
struct CutoffSpec {
  double iota = 0.9;
  double delta = 0;  ///< eps^iota once bound to an eps
  static CutoffSpec for_eps(double eps, double iota);
};

double cutoff_eval(double x, const CutoffSpec& spec = {});
double cutoff_derivative(double x);
double cutoff_second_derivative(double x);

struct CompositeOptions {
  int cells_per_eps = 8;  ///< cells across the layer width eps min(1, sqrt(sigma0)); fewer than 8 is rejected
  bool secular_matching = false;  ///< adds t d_t rho_out0(0, s) to the inner modulus
};

/// Boundary-fitted grid x(s_i, t_k) = r(s_i) - t_k n(s_i) over 0 <= t <= 2 delta, stations at the
/// mesh boundary nodes (uniform arclength). Index b = i * nt + k. t = delta falls on k = nt / 2.
struct BandGrid {
  int ns = 0, nt = 0;
  double ds = 0, dt = 0;
  std::vector<double> s, kappa;
  std::vector<Vec2> point, normal, tangent;
  std::size_t index(int i, int k) const { return static_cast<std::size_t>(i) * nt + k; }
  std::size_t size() const { return static_cast<std::size_t>(ns) * nt; }
  double t(int k) const { return k * dt; }
  Vec2 x(int i, int k) const { return point[i] - t(k) * normal[i]; }
  double metric(int i, int k) const { return 1.0 - t(k) * kappa[i]; }
};

/// Laplacian of a band field in the (s, t) frame:
///   Lap f = f_tt - (kappa / g) f_t + g^-1 d_s(g^-1 f_s),  g = 1 - t kappa,
/// with fourth-order differences (periodic in s, one-sided near t = 0 and t = 2 delta).
std::vector<double> band_laplacian(const BandGrid& g, const std::vector<double>& f);

/// Composite (rho0, chi0, phi0) with its ingredients. Band arrays live on the BandGrid; mesh arrays on the
/// outer mesh nodes, where nodes deeper than 2 delta carry the outer fields exactly.
struct CompositeSolution {
  double eps = 0, iota = 0, delta = 0, sigma0 = 0;
  std::size_t stations = 0;
  bool secular_matching = false;
  BandGrid band;

  outer::OuterFields outer;  ///< nodal outer fields at this eps
  // band samples of the outer fields
  std::vector<double> rho_o, chi_o, cx, cy, E, g1, g2;
  // inner pieces at tau = t / eps, and the cutoff
  std::vector<double> rho_i, upsilon_i, phi_i, cutoff;
  // boundary Taylor fields
  std::vector<double> rho_a, zeta_a;
  // the composite on the band
  std::vector<double> rho0, chi0, phi0;

  std::vector<double> mesh_t;  ///< inward distance of each mesh node (infinity beyond the search radius)
  std::vector<double> mesh_rho0, mesh_chi0, mesh_phi0;
};

/// stations[i] must be the inner solve at mesh boundary node i. Throws Resolution when the station spacing
/// exceeds delta or cells_per_eps < 8, and Config on mismatched inputs or a non-star mesh.
CompositeSolution assemble_composite(const mesh::Mesh& m, const std::vector<double>& zeta,
                                     const std::vector<double>& zeta1, const std::vector<double>& j,
                                     const std::vector<inner::StationResult>& stations, double eps,
                                     const CutoffSpec& cutoff, const CompositeOptions& opt = {});

/// tau range the composite reads from each station; pass as SweepOptions::tau_keep to save memory.
double tau_needed(double eps, double iota);

struct NormSplit {
  double total = 0, band = 0, interior = 0;  ///< band: t < delta; interior: t >= delta
  double outer_region = 0;                   ///< part of the interior with t >= 2 delta (outer fields only)
};

struct ResidualReport {
  double eps = 0, iota = 0, delta = 0, sigma0 = 0;
  NormSplit h1, div_h2, h3;
  std::vector<double> band_h1, band_div_h2, band_h3;  ///< pointwise on the band grid
  double gauge_ratio = 0;       ///< |int rho0^2 phi0| / int |rho0^2 phi0|
  bool gauge_ok = true;         ///< gauge_ratio < 0.05
  double continuity_jump = 0;   ///< max second difference in t across t = delta, 2 delta over the band max slope
  double rho0_min = 0, rho0_max = 0;
  outer::IdentityReport identities;
};

/// Residuals of the stationary system for the composite:
///   h1 = -Lap rho0 - eps^-2 (1 - |grad chi~0|^2 - rho0^2) rho0,
///   Div H2 with H2 = eps^-1 rho0^2 grad chi~0 - sigma0 grad phi~0,
///   h3 = sigma0 Lap phi~0 - eps^-2 rho0^2 phi~0,
/// with chi~0 = eps chi0 and phi~0 = eps^2 phi0. The outer defects g1, g2 are reused and only the
/// inner corrections are differenced on the band, which keeps the eps^-2 cancellation exact.
ResidualReport residuals(const mesh::Mesh& m, const CompositeSolution& c, const std::vector<double>& zeta,
                         const std::vector<double>& j);

}  // namespace sc::composite
