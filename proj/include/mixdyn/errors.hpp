#pragma once

#include <stdexcept>
#include <string>

namespace mixdyn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: dimension mismatches, invalid parameters, malformed input.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A time-dependent quantity was evaluated outside [t0, +inf).
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double t) : Error(what), t_(t) {}
  double time() const noexcept { return t_; }

 private:
  double t_;
};

/// A linear-algebra or iterative solver failed.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Power iteration ran out of iterations. Carries the last Rayleigh quotient.
class ConvergenceError : public SolverError {
 public:
  ConvergenceError(const std::string& what, double last_rayleigh)
      : SolverError(what), last_rayleigh_(last_rayleigh) {}
  double last_rayleigh() const noexcept { return last_rayleigh_; }

 private:
  double last_rayleigh_;
};

/// A rate fit had too few usable points.
class FitError : public Error {
 public:
  using Error::Error;
};

/// A run configuration could not be parsed or validated.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

enum class IntegrationFailureKind {
  kStepUnderflow,  // step size fell below h_min (stiffness)
  kStepBudget,     // max_steps exhausted
  kNonFinite,      // field returned NaN/Inf
  kWallClock,      // wall-clock budget exhausted
};

const char* to_string(IntegrationFailureKind kind) noexcept;

/// Integration aborted at time t.
class IntegrationError : public Error {
 public:
  IntegrationError(IntegrationFailureKind kind, double t, const std::string& what)
      : Error(what), kind_(kind), t_(t) {}
  IntegrationFailureKind kind() const noexcept { return kind_; }
  double time() const noexcept { return t_; }

 private:
  IntegrationFailureKind kind_;
  double t_;
};

}  // namespace mixdyn
