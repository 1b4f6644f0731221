#ifndef SERPENT_ERRORS_HPP
#define SERPENT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace serpent {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration or malformed input file.  CLI exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Numerical failures.  CLI exit code 3.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Control perturbation drives an effective normal friction coefficient
// strictly negative.
class InvalidControlError : public NumericalError {
 public:
  explicit InvalidControlError(const std::string& msg) : NumericalError(msg) {}
};

// The quasi-static group balance matrix is numerically singular
// (condition number above 1e12), e.g. all friction coefficients zero.
class SingularFrictionBlockError : public NumericalError {
 public:
  explicit SingularFrictionBlockError(const std::string& msg)
      : NumericalError(msg) {}
};

// A state component left the finite range during integration.
class NonFiniteError : public NumericalError {
 public:
  explicit NonFiniteError(const std::string& msg) : NumericalError(msg) {}
};

// The shape trajectory failed to close onto a periodic orbit.
class NoLimitCycleError : public NumericalError {
 public:
  explicit NoLimitCycleError(const std::string& msg) : NumericalError(msg) {}
};

// A quadratic control weight lost positivity; the Hamiltonian has no
// minimizer in u.
class NonConvexHamiltonianError : public NumericalError {
 public:
  explicit NonConvexHamiltonianError(const std::string& msg)
      : NumericalError(msg) {}
};

}  // namespace serpent

#endif  // SERPENT_ERRORS_HPP
