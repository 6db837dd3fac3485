#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgan {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed or invariant-violating scenario documents. `field` names the
// offending schema field, `line` is 1-based (0 when unknown).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, std::string field, std::size_t line = 0)
      : Error(message), field_(std::move(field)), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

// A closed-form result was requested outside the hypotheses it is valid for
// (unequal generated weights, nonpositive coefficients, ...).
class HypothesisError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace kgan
