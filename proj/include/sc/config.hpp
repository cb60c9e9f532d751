#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sc/feasibility.hpp"
#include "sc/geometry.hpp"
#include "sc/outer.hpp"

namespace sc::config {

struct DomainConfig {
  std::string preset = "circle";  ///< circle, ellipse, stadium, dumbbell, rectangle, or csv
  std::string csv;                ///< x,y samples of a closed curve when preset is csv
  double radius = 1.0;            ///< circle radius; stadium end radius
  double a = 1.5, b = 1.0;        ///< ellipse semi-axes
  double half_length = 1.0;       ///< stadium straight half-length
  double lx = 1.0, ly = 1.0;      ///< rectangle sides
  double lobe = 1.0, neck_width = 0.2, neck_length = 0.6, fillet = 0.05;  ///< dumbbell
  int samples = 256;
};

struct CurrentConfig {
  feasibility::CurrentSpec spec{"arcs", 0.2, 1, 0.0, 0.5, 0.0, 0.15, 0};
  std::string csv;  ///< single column j sampled at the boundary samples, overrides the preset
};

struct GridConfig {
  double h = 0.05;              ///< outer mesh spacing
  double feasibility_h = 0.02;  ///< graph spacing for non-convex distance
  double inner_h = 0.005;       ///< eta spacing of the inner solves
  double inner_eta_max = 0;     ///< 0 selects 40 / mu_j
  int cells_per_eps = 8;
};

struct StabilityConfig {
  double beta = 0.5, sigma = 1.0, l = 1.0, eps = 0.1;
  int n_max = 20;
};

struct EvolveConfig {
  double T = 30.0, dt = 0.01;
  int n_cells = 200;
  int mode = 1;
  double amplitude = 1e-4;
};

struct SweepConfig {
  std::string axis = "epsilon";  ///< epsilon, sigma0, beta or amplitude
  std::vector<double> values;
};

struct RunConfig {
  DomainConfig domain;
  CurrentConfig current;
  double epsilon = 0.04, sigma0 = 100.0, iota = 0.9;
  GridConfig grid;
  outer::ContinuationOptions continuation;
  bool secular_matching = false;
  StabilityConfig stability;
  EvolveConfig evolve;
  SweepConfig sweep;
  std::string output = "out";
};

/// Parses JSON text. Unknown keys and invalid values throw Error(Config) naming the field path.
RunConfig parse(const std::string& json_text);
RunConfig load(const std::filesystem::path& path);
/// Canonical JSON echo of the effective configuration (sorted keys, fixed number format).
std::string to_json(const RunConfig& c);

/// Boundary curve and current profile described by the configuration.
geometry::BoundaryGeometry make_boundary(const RunConfig& c);
feasibility::CurrentProfile make_current(const RunConfig& c, const geometry::BoundaryGeometry& g);

}  // namespace sc::config
