#pragma once

#include <stdexcept>
#include <string>

namespace compoc {

// Base type for every failure a caller is expected to branch on.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// An intermediate value left the domain box of the node consuming it.
struct DomainViolation : Error {
  using Error::Error;
};

// Least-squares system too ill-conditioned for the requested width/grid pair.
struct IllConditioned : Error {
  using Error::Error;
};

// Closed-form solver asked to handle a non-quadratic objective.
struct NotQuadratic : Error {
  using Error::Error;
};

// Iterative solver hit its iteration cap before reaching tolerance.
struct NoConvergence : Error {
  using Error::Error;
};

// Domain calibration observed divergent rollouts.
struct CalibrationFailure : Error {
  using Error::Error;
};

// Requested accuracy cannot be met by a realizable schedule.
struct PlanInfeasible : Error {
  using Error::Error;
};

// Surrogate failed its error budget even after width escalation.
struct SurrogateTooCoarse : Error {
  using Error::Error;
};

// Controller iterate left the trust region around U0.
struct IterateEscaped : Error {
  using Error::Error;
};

// Malformed configuration or instance file.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace compoc
