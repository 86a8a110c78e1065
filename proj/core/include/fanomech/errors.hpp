#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fanomech {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown mode label, mismatched layouts or bad truncation dimensions.
class LayoutError : public Error {
 public:
  using Error::Error;
};

/// A density matrix violates Hermiticity, normalization or positivity.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// Odd cat state with vanishing amplitude has no normalizable form.
class DegenerateCatError : public Error {
 public:
  using Error::Error;
};

/// g2 requested for a state with no population in the mode.
class UndefinedStatisticsError : public Error {
 public:
  using Error::Error;
};

/// Dissipation coefficient matrix has a significantly negative eigenvalue.
class NonMarkovianError : public Error {
 public:
  using Error::Error;
};

/// Liouvillian would exceed the superoperator size guard.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Steady-state kernel is not one-dimensional.
class MultipleSteadyStatesError : public Error {
 public:
  using Error::Error;
};

/// Integrator step size underflow, or a lab-frame model handed to evolve().
class StiffnessError : public Error {
 public:
  using Error::Error;
};

/// Scenario or parameter validation failure.
class ValidationError : public Error {
 public:
  using Error::Error;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the process-wide warning sink (default: stderr). Returns the old one.
WarningHandler set_warning_handler(WarningHandler handler);

/// Routes a non-fatal diagnostic to the current warning sink.
void warn(std::string_view message);

}  // namespace fanomech
