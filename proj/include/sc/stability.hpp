#pragma once

#include <complex>
#include <vector>

namespace sc::stability {

/// One-dimensional steady state with phase gradient beta: rho_s e^{i beta x / eps}.
struct StabilityInput {
  double beta = 0.5;
  double sigma = 1.0;
  double l = 1.0;
  double eps = 0.1;
  std::vector<int> mode_indices{1};
};

/// rho_s = sqrt(1 - beta^2).
double steady_amplitude(double beta);

/// gamma_n = eps n pi / l.
double mode_wavenumber(int n, double l, double eps);

/// Closed-form constants of the mode v = sin(gamma x) + i A cos(gamma x).
/// lambda = gamma^2 + 2(1-beta^2) - 2 A gamma beta, so lambda_minus is carried by A_plus.
struct ModeResult {
  double gamma = 0;
  double A_plus = 0;
  double A_minus = 0;
  double lambda_plus = 0;
  double lambda_minus = 0;
  double discriminant = 0;
  bool degenerate = false;  ///< beta = 0: one A root is infinite (pure cos mode)
};

ModeResult eigenvalues(double beta, double sigma, double gamma);

/// gamma -> 0 limit of lambda_minus, evaluated in rationalised form.
double lambda_minus_zero(double beta, double sigma);

/// Zero of lambda_minus_zero in beta on [0, 1), by bisection.
double threshold_beta(double sigma, double tol = 1e-14);

enum class Verdict { Stable, Marginal, Unstable };
const char* to_string(Verdict v);

struct VerdictResult {
  Verdict verdict = Verdict::Stable;
  double min_lambda_minus = 0;
  int argmin_mode = 0;  ///< 0 denotes the gamma -> 0 limit
  double lambda_minus_zero = 0;
  std::vector<ModeResult> modes;  ///< n = 1..n_max
};

/// Scans n = 1..n_max and the gamma -> 0 limit; |min| <= marginal_tol is reported as marginal.
VerdictResult stability_verdict(double beta, double sigma, double l, double eps, int n_max,
                                double marginal_tol = 1e-12);

struct EvolutionState {
  std::vector<std::complex<double>> u;  ///< rotated field w = e^{-i beta X} u on nodes
  std::vector<double> phi;
  double time = 0;
  double J = 0;
  double gauge_avg = 0;
};

struct EvolveOptions {
  int n_cells = 200;
  int mode = 1;
  double amplitude = 1e-4;
  double mix = 0.0;            ///< imaginary mixing coefficient of the seed
  double J = -1.0;             ///< applied current; negative selects the steady value beta rho_s^2
  double fit_start_fraction = 0.5;
  int record_every = 10;
  bool perturb = true;
};

struct EvolveResult {
  std::vector<double> times;
  std::vector<double> norms;  ///< perturbation L2 norm, phase mode removed
  double fitted_rate = 0;     ///< slope of log(norm) over the fit window
  double predicted_rate = 0;  ///< -lambda_minus(gamma_mode)
  double max_gauge_avg = 0;
  EvolutionState final_state;
};

/// Semi-implicit evolution in X = x/eps on [0, l/eps]: linear part implicit, reaction and potential explicit.
EvolveResult evolve_1d(const StabilityInput& input, double T, double dt, const EvolveOptions& opt = {});

}  // namespace sc::stability
