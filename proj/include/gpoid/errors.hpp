#pragma once

#include <stdexcept>
#include <string>

namespace gpoid {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// bad argument values (non-finite input, parameter outside its domain, ...)
struct InvalidInputError : Error {
  using Error::Error;
};

// operation not supported by the model (no analytic gradient, unbounded density)
struct CapabilityError : Error {
  using Error::Error;
};

// all particle weights underflowed to zero at some time step
struct DegenerateFilterError : Error {
  explicit DegenerateFilterError(int t_)
      : Error("particle filter degenerated: all weights zero at t=" + std::to_string(t_)),
        t(t_) {}
  int t;
};

// rejection-sampling bound rho smaller than an observed transition density
struct BoundViolationError : Error {
  using Error::Error;
};

// information matrix not positive definite even after jitter
struct SingularInformationError : Error {
  using Error::Error;
};

// Gram matrix not factorizable after jitter escalation
struct ConditioningError : Error {
  using Error::Error;
};

// hyperparameter fit failed on every start
struct FittingError : Error {
  using Error::Error;
};

// acquisition produced a point that cannot be projected into the domain
struct InfeasibleProposalError : Error {
  using Error::Error;
};

// combinatorial size guard exceeded
struct CapacityError : Error {
  using Error::Error;
};

// unstable AR coefficients
struct StabilityError : Error {
  using Error::Error;
};

// malformed experiment configuration
struct ConfigError : Error {
  using Error::Error;
};

// too many failed objective evaluations; the optimization loop gave up
struct RunAbortError : Error {
  using Error::Error;
};

}  // namespace gpoid
