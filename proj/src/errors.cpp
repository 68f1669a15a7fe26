#include "nue/errors.hpp"

#include <cstdio>

namespace nue {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::CriticalHit: return "CriticalHit";
    case ErrorKind::UndefinedDerivative: return "UndefinedDerivative";
    case ErrorKind::BranchEscape: return "BranchEscape";
    case ErrorKind::PrecisionLoss: return "PrecisionLoss";
    case ErrorKind::NotAZoomingTime: return "NotAZoomingTime";
    case ErrorKind::UndefinedJacobian: return "UndefinedJacobian";
    case ErrorKind::HypothesisFail: return "HypothesisFail";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DistortionUnbounded: return "DistortionUnbounded";
    case ErrorKind::InfiniteMeanReturn: return "InfiniteMeanReturn";
    case ErrorKind::WeightMass: return "WeightMass";
    case ErrorKind::InvalidScenario: return "InvalidScenario";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

static std::string crit_msg(std::size_t index, double point) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "orbit step %zu at x=%.17g", index, point);
  return buf;
}

CriticalHit::CriticalHit(std::size_t idx, double pt)
    : Error(ErrorKind::CriticalHit, crit_msg(idx, pt)), index(idx), point(pt) {}

}  // namespace nue
