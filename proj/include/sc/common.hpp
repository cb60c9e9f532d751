#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace sc {

/// Critical 1D supercurrent max_{t in [0,1]} (t - t^3).
inline const double kCriticalCurrent = 2.0 / (3.0 * std::sqrt(3.0));
/// Gradient bound below which A(grad zeta) is positive definite.
inline const double kEllipticGradient = 1.0 / std::sqrt(3.0);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Error categories; the CLI maps them onto exit codes.
enum class ErrorKind {
  Config,
  Geometry,
  Infeasible,
  LossOfEllipticity,
  NewtonDivergence,
  InteriorMaximum,
  NoSubcriticalRoot,
  ContractionFailure,
  LinearSolveFailure,
  Resolution,
  Stiffness,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by continuation when the gradient bound is reached; carries the last accepted amplitude.
class LossOfEllipticity : public Error {
 public:
  LossOfEllipticity(const std::string& what, double last_mu, double last_max_grad)
      : Error(ErrorKind::LossOfEllipticity, what), last_good_mu(last_mu), last_good_max_grad(last_max_grad) {}
  double last_good_mu;
  double last_good_max_grad;
};

/// Least-squares slope of log|y| against x over the given samples.
double loglinear_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sc
