#pragma once

#include <string>
#include <vector>

#include "sc/geometry.hpp"

namespace sc::feasibility {

/// Rescaled boundary current per boundary sample; the outer data satisfy (1-|grad zeta|^2) d zeta/dn = j.
struct CurrentProfile {
  std::vector<double> j;
  bool mean_free = true;
};

/// Named profile generators.
///  zero                              j = 0
///  cosine  (amplitude, mode, phase)  j = A cos(mode 2 pi s / L + phase)
///  arcs    (amplitude, inlet, outlet, width)  smooth bumps centred at the given fractions of L
///  edges   (amplitude, axis)         j = +-A on the extreme faces normal to the axis (uniform in/out)
struct CurrentSpec {
  std::string preset = "zero";
  double amplitude = 0.0;
  int mode = 1;
  double phase = 0.0;
  double inlet = 0.5;
  double outlet = 0.0;
  double width = 0.1;
  int axis = 0;
};

CurrentProfile make_current(const geometry::BoundaryGeometry& g, const CurrentSpec& spec);
/// Subtracts the arclength-weighted mean so that the trapezoid integral vanishes.
void enforce_mean_free(const geometry::BoundaryGeometry& g, CurrentProfile& j);
double total_flux(const geometry::BoundaryGeometry& g, const CurrentProfile& j);

/// max_{t in [0,1]} (t - t^3) by bisection on the derivative.
double critical_current();

struct PointwiseResult {
  bool ok = true;
  double max_abs = 0.0;
};
PointwiseResult check_pointwise(const CurrentProfile& j);

struct PairValue {
  int a = 0, b = 0;
  double distance = 0, integral = 0, M = 0;
};

struct FeasibilityReport {
  bool pointwise_ok = true;
  double max_abs_j = 0;
  double sup_M = 0;
  Vec2 argmax_x, argmax_y;
  double margin = 0;  ///< critical current minus sup_M (signed)
  bool feasible = true;
  std::string distance_method;
  std::vector<PairValue> pairs;  ///< filled when requested
};

struct FeasibilityOptions {
  double grid_h = 0.02;  ///< graph spacing for non-convex domains
  bool record_pairs = false;
  int jobs = 1;
};

/// Maximises |arc integral of j| / d(x,y) over boundary sample pairs; pairs with d below grid_h are skipped.
FeasibilityReport sup_M(const geometry::BoundaryGeometry& g, const CurrentProfile& j, const FeasibilityOptions& opt = {});

}  // namespace sc::feasibility
