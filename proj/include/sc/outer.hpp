#pragma once

#include <vector>

#include "sc/common.hpp"
#include "sc/feasibility.hpp"
#include "sc/mesh.hpp"

namespace sc::outer {

/// A(z) = (1 - |z|^2) I - 2 z (x) z.
/// Eigenpairs: 1 - |z|^2 along z-perp, 1 - 3|z|^2 along z.
struct EllipticityMatrix {
  double a11 = 1, a12 = 0, a22 = 1;
  double eig_perp = 1, eig_par = 1;
  Vec2 dir_par{1, 0};
  bool positive_definite = true;
  Vec2 apply(Vec2 v) const { return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y}; }
};

EllipticityMatrix assemble_A(Vec2 z);

/// Boundary current sampled at the mesh boundary nodes, with the lumped discrete flux set to zero.
std::vector<double> current_on_mesh(const mesh::Mesh& m, const geometry::BoundaryGeometry& g,
                                    const feasibility::CurrentProfile& j);
/// Subtracts the boundary-weighted mean.
void enforce_discrete_mean_free(const mesh::Mesh& m, std::vector<double>& j);

/// Direct: sparse LDLT with a rank-one pin of the constant mode. DiagonalCG: Jacobi-preconditioned CG.
enum class LinearSolver { Direct, DiagonalCG };

struct ContinuationOptions {
  double initial_step = 0.05;
  double growth = 1.5;
  double max_step = 0.25;
  double min_step = 1e-4;
  double safeguard = 0.0175;  ///< accepted steps keep max element |grad zeta| below 1/sqrt(3) - safeguard
  int max_newton = 40;
  double newton_tol = 1e-11;  ///< on the mass-scaled interior residual
  LinearSolver linear_solver = LinearSolver::Direct;
  double cg_tol = 1e-13;      ///< DiagonalCG only
  int cg_max_iter = 50000;
};

struct ContinuationStep {
  double mu = 0;
  double max_grad = 0;
  int newton_iterations = 0;
  double energy_predictor = 0;
  double energy = 0;
};

struct ZetaSolution {
  std::vector<double> zeta;  ///< nodal values, lumped-mass mean zero
  std::vector<ContinuationStep> mu_path;
  double max_grad = 0;           ///< max element |grad zeta|
  double residual_interior = 0;  ///< discrete L2 norm of the strong-form residual at interior nodes
  double flux_mismatch = 0;      ///< max |weak residual| / boundary length over boundary nodes
};

/// Discrete energy sum_T |T| W(grad zeta_T) - mu sum_i b_i zeta_i with W(z) = -(1 - |z|^2)^2 / 4.
/// Its critical points are the P1 solutions of the conormal problem with data mu j.
double energy(const mesh::Mesh& m, const std::vector<double>& j, double mu, const std::vector<double>& zeta);
/// Weak residual r_i = sum_T |T| (1 - |g_T|^2) g_T . grad phi_i - mu b_i.
std::vector<double> weak_residual(const mesh::Mesh& m, const std::vector<double>& j, double mu,
                                  const std::vector<double>& zeta);
double max_element_gradient(const mesh::Mesh& m, const std::vector<double>& zeta);

/// Continuation in mu from 0 to 1 with Newton on the energy; throws LossOfEllipticity or NewtonDivergence.
ZetaSolution solve_zeta(const mesh::Mesh& m, const std::vector<double>& j, const ContinuationOptions& opt = {});

/// Newton at fixed mu from a given start (no continuation); returns false on failure.
bool newton_fixed_mu(const mesh::Mesh& m, const std::vector<double>& j, double mu, std::vector<double>& zeta,
                     const ContinuationOptions& opt, int* iterations = nullptr);

struct DescentResult {
  std::vector<double> zeta;
  int iterations = 0;
  double energy = 0;
  double residual = 0;
  bool converged = false;
};

/// Cross-check: descent on the energy preconditioned by the Neumann Laplacian plus lumped mass,
/// restricted to max element |grad zeta| <= 1/sqrt(3).
DescentResult solve_zeta_descent(const mesh::Mesh& m, const std::vector<double>& j, double mu = 1.0,
                                 double tol = 1e-10, int max_iter = 2000);

struct MaxGradient {
  double value = 0;
  Vec2 location;
  int node = -1;
  int rank = 0;  ///< edge distance of the reported maximiser from the boundary
  bool in_band = true;
};

/// Maximum of the recovered nodal |grad zeta|. Among maximisers within rel_tol the one closest to the
/// boundary is reported; throws InteriorMaximum when it lies deeper than `band` edges.
MaxGradient max_gradient_check(const mesh::Mesh& m, const std::vector<double>& zeta, int band = 1,
                               double rel_tol = 1e-9, bool throw_on_interior = true);

struct Zeta1Result {
  std::vector<double> zeta1;
  double compatibility = 0;  ///< |sum of loads| / sum of |loads|
  double residual = 0;       ///< ||K zeta1 - f||_2 / ||f||_2
};

/// Linear correction: weak form sum_T |T| A(g_T) grad zeta1 . grad v = -sum_T |T| c_T g_T . grad v,
/// c_T the vertex mean of the nodal Lap(rho0)/rho0; the conormal data cancel in the weak form.
Zeta1Result solve_zeta1(const mesh::Mesh& m, const std::vector<double>& zeta, const ContinuationOptions& opt = {});

struct OuterFields {
  double eps = 0;
  std::vector<double> zeta_x, zeta_y, zeta1_x, zeta1_y;
  std::vector<double> rho0, lap_rho0, rho1;
  std::vector<double> rho_o, chi_o;
  std::vector<double> chi_tilde_x, chi_tilde_y;  ///< grad(eps chi_o)
  std::vector<double> E;                         ///< 1 - |grad(eps chi_o)|^2 - rho_o^2
  std::vector<double> g1, g2;                    ///< stationary-equation defects of (rho_o, chi_o)
};

/// Nodal outer fields; g1 uses the nodal operators, g2 is the lumped weak divergence of rho_o^2 grad chi_o
/// with the boundary flux j/eps.
OuterFields outer_fields(const mesh::Mesh& m, const std::vector<double>& zeta, const std::vector<double>& zeta1,
                         double eps, const std::vector<double>& j);

/// Per-station boundary data for the inner problem and the composite.
struct BoundaryTrace {
  std::vector<double> s, kappa, j;
  std::vector<Vec2> point, normal, tangent;
  std::vector<double> zeta_s;     ///< tangential derivative
  std::vector<double> zeta_t;     ///< inward normal derivative, from the conormal condition on the subcritical branch
  std::vector<double> rho_r;      ///< sqrt(1 - zeta_s^2)
  std::vector<double> rho_out0;   ///< sqrt(1 - zeta_s^2 - zeta_t^2)
  std::vector<double> drho0_dt;   ///< inward normal derivative of rho_out0
};

BoundaryTrace boundary_trace(const mesh::Mesh& m, const std::vector<double>& zeta, const std::vector<double>& j);

/// Root x of (rho_r^2 - x^2) x = jn with |x| < rho_r / sqrt(3).
double conormal_root(double rho_r, double jn);

struct IdentityReport {
  std::vector<double> residual_1, residual_2;  ///< per boundary station
  double rms_1 = 0, rms_2 = 0, max_1 = 0, max_2 = 0;
  double dt_step = 0;  ///< one-sided normal step used for d/dt
};

/// Boundary identities for the solved zeta on a star mesh; d/dt by first-order one-sided differences
/// with step equal to the radial mesh spacing, d/ds by central differences across stations.
IdentityReport boundary_identities(const mesh::Mesh& m, const std::vector<double>& zeta, const std::vector<double>& j);

}  // namespace sc::outer
