#include "sc/common.hpp"

namespace sc {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Geometry: return "GeometryError";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::LossOfEllipticity: return "LossOfEllipticity";
    case ErrorKind::NewtonDivergence: return "NewtonDivergence";
    case ErrorKind::InteriorMaximum: return "InteriorMaximum";
    case ErrorKind::NoSubcriticalRoot: return "NoSubcriticalRoot";
    case ErrorKind::ContractionFailure: return "ContractionFailure";
    case ErrorKind::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorKind::Resolution: return "ResolutionError";
    case ErrorKind::Stiffness: return "StiffnessError";
  }
  return "Error";
}

double loglinear_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::Config, "loglinear_slope: need >= 2 paired samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ly = std::log(std::abs(y[i]));
    sx += x[i];
    sy += ly;
    sxx += x[i] * x[i];
    sxy += x[i] * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace sc
