#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace evocoef {

/// A violated precondition of a numerical routine (bad grid, bad datum, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A standing hypothesis of the recovery formulas fails on the supplied data.
class HypothesisViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadrature could not reach the requested tolerance.
class ToleranceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration problem tied to a named field (dotted path).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace evocoef
