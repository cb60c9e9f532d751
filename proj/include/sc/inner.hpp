#pragma once

#include <vector>

#include "sc/common.hpp"
#include "sc/outer.hpp"

namespace sc::inner {

/// Station data for the boundary-layer problem.
struct InnerParams {
  double j_r = 0;        ///< j / rho_r^3
  double rho_r = 1;      ///< sqrt(1 - zeta_s^2) at the station
  double sigma0 = 100;   ///< sigma / eps^2
  double dzeta_dt0 = 0;  ///< inward normal derivative of zeta at the station
  double j() const { return j_r * rho_r * rho_r * rho_r; }
};

/// Far-field root of m^4 (1 - m^2) = j_r^2 with m^2 in [2/3, 1]. Throws NoSubcriticalRoot if j_r^2 > 4/27.
double mu_j(double j_r);
/// Root of m^4 (1 - m^2) = (t - j_r)^2 on the branch m^2 in [2/3, 1]; equals 1 at t = j_r and mu_j(j_r) at t = 0.
double branch_mu0(double t, double j_r);

/// Effective coefficient: 1 below j_r, branch_mu0^2 on [j_r, 0], mu_j^2 above 0 (reflected for j_r > 0).
double V(double t, double j_r);
/// L(p) = int_0^p (p - t) / V(t) dt and its first two derivatives, in closed form on each piece.
struct LValues {
  double L = 0, dL = 0, d2L = 0;
};
LValues L_of(double p, double j_r);

struct LeadingOptions {
  double eta_max = 0;  ///< 0 selects 40 / mu_j
  double h = 0.005;    ///< grid spacing in eta
  int max_newton = 100;
};

/// Leading-order layer on a uniform eta grid. Values carry the sign of j_r: for j_r > 0 the problem is
/// solved for -j_r and theta is reflected back.
struct LeadingProfiles {
  double j_r = 0, mu_j = 1, k = 0;
  std::vector<double> eta;
  std::vector<double> w;      ///< theta_0
  std::vector<double> dw;     ///< nodal w'; the boundary value is exactly j_r
  std::vector<double> mu0;    ///< branch_mu0(w')
  std::vector<double> d2mu0;  ///< analytic mu0'' through the chain rule
  std::vector<double> Vw;     ///< V(w')
  double J = 0;               ///< discrete functional at the minimiser
  double gradient_norm = 0;   ///< max |dJ/dw_i| at exit
  int newton_iterations = 0;
};

/// Minimises J(w) = k w(0) + sum h L(w') + trapezoid sum of w^2 / 2 with k = L'(j_r), which makes the
/// natural boundary condition w'(0) = j_r. Throws NewtonDivergence if the minimiser stalls.
LeadingProfiles solve_leading(double j_r, const LeadingOptions& opt = {});

struct CorrectedOptions {
  double tol = 1e-10;  ///< on the max-norm change between iterates
  int max_iter = 500;
};

struct CorrectedProfiles {
  double j_r = 0, mu_j = 1, sigma0 = 0;
  std::vector<double> eta, mu, theta, mu0, theta0;
  double mu1_norm = 0;     ///< || mu - mu0 ||_2 on the half-line
  double theta1_norm = 0;  ///< || theta - theta0 ||_2
  int iterations = 0;
  std::vector<double> trace;  ///< max-norm change per iteration
  double contraction = 0;     ///< mean ratio of successive changes over the last iterations
};

/// Fixed point U <- B^{-1}(mu0''/sigma0 + N1(U), N2(U)) for U = (mu - mu0, theta - theta0). B is the linearised
/// operator with one-sided second-order rows mu'(0) = 0, theta'(0) = j_r and zero slope at eta_max.
/// Throws ContractionFailure after three consecutive increases of the iterate change.
CorrectedProfiles solve_corrected(const LeadingProfiles& lead, double sigma0, const CorrectedOptions& opt = {});

/// The two nonlinear remainders at one node (mu0 > 0, dtheta0 on the branch relation with mu0).
double N1(double mu0, double mu1, double dtheta0, double dtheta1, double j_r);
double N2(double mu0, double mu1, double theta0, double theta1);

/// Root of rho_r^2 - j^2 / r^4 - r^2 = 0 with r^2 > 2 rho_r^2 / 3.
double rho_j(double j, double rho_r);

struct PhysicalInnerProfiles {
  double j = 0, rho_r = 1, sigma0 = 0, dzeta_dt0 = 0;
  double rho_j = 1;
  std::vector<double> tau;  ///< uniform, tau = sqrt(sigma0) eta / rho_r
  std::vector<double> rho_i0, phi_i0, dphi_i0, dupsilon_i0;
  std::vector<double> upsilon_i0;  ///< integral of dupsilon_i0 with value 0 at tau_max
  double decay_rate_phi = 0;       ///< log-linear slopes over the decade 1e-7..1e-6 of the peak
  double decay_rate_rho = 0;
  double value(const std::vector<double>& f, double tau) const;  ///< cubic interpolation, far value beyond tau_max
};

PhysicalInnerProfiles unscale(const CorrectedProfiles& c, const InnerParams& p);

/// rho_r^2 - (sigma0 phi' - j)^2 / rho^4 - rho^2 + rho'' / rho at interior nodes; zero for an exact layer.
std::vector<double> branch_consistency(const PhysicalInnerProfiles& p);
/// -sigma0 phi'' + rho^2 phi at interior nodes.
std::vector<double> elliptic_residual(const PhysicalInnerProfiles& p);

/// Log-linear slope of |f| over the samples whose magnitude lies in [lo, hi] times the peak.
double tail_rate(const std::vector<double>& x, const std::vector<double>& f, double lo = 1e-7, double hi = 1e-6);

struct StationResult {
  InnerParams params;
  double mu_j = 1;
  double w0 = 0;
  int leading_iterations = 0, corrected_iterations = 0;
  double contraction = 0;
  double mu1_norm = 0;
  PhysicalInnerProfiles profile;
};

struct SweepOptions {
  LeadingOptions leading;
  CorrectedOptions corrected;
  int jobs = 1;
  double tau_keep = 0;  ///< > 0 truncates stored profiles beyond this tau
};

/// Independent solves at every boundary station, returned in boundary order.
std::vector<StationResult> sweep(const outer::BoundaryTrace& tr, double sigma0, const SweepOptions& opt = {});
StationResult solve_station(const InnerParams& p, const SweepOptions& opt = {});

}  // namespace sc::inner
