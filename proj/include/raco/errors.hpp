#pragma once

#include <stdexcept>
#include <string>

namespace raco {

/// Rejected scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  enum class Kind { MissingKey, OutOfRange, NonPositive, Malformed };

  ConfigError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Adaptive quadrature ran out of subdivisions.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bracket handed to a root finder does not straddle a sign change.
class NoSignChange : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// No number of random-access channels keeps the system stable.
class NoFeasibleM : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few successful devices to estimate an outage probability.
class InsufficientSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace raco
