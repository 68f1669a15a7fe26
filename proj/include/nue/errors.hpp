#pragma once

#include <stdexcept>
#include <string>

namespace nue {

enum class ErrorKind {
  CriticalHit,
  UndefinedDerivative,
  BranchEscape,
  PrecisionLoss,
  NotAZoomingTime,
  UndefinedJacobian,
  HypothesisFail,
  CapExceeded,
  NoConvergence,
  DistortionUnbounded,
  InfiniteMeanReturn,
  WeightMass,
  InvalidScenario,
  NotFound,
  ConfigError,
};

const char* error_kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Thrown when an orbit lands on the critical set; index is the orbit step.
class CriticalHit : public Error {
 public:
  CriticalHit(std::size_t index, double point);
  std::size_t index;
  double point;
};

}  // namespace nue
