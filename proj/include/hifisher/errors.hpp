#pragma once

#include <stdexcept>
#include <string>

namespace hifisher {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad user-supplied configuration (grids, flags, model parameters).
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Parameter value outside the declared open domain.
struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(what) {}
};

// Monte Carlo run discarded more than the tolerated share of draws.
struct TooManyRejections : Error {
  explicit TooManyRejections(const std::string& what) : Error(what) {}
};

// Finite-difference step could not be shrunk into the domain.
struct StepUnderflow : Error {
  explicit StepUnderflow(const std::string& what) : Error(what) {}
};

// Estimated information matrix has an eigenvalue below -3 * stderr.
struct NonPositiveInformation : Error {
  explicit NonPositiveInformation(const std::string& what) : Error(what) {}
};

// Doubling quadrature nodes moved the result more than the tolerance.
struct QuadratureNotConverged : Error {
  explicit QuadratureNotConverged(const std::string& what) : Error(what) {}
};

}  // namespace hifisher
