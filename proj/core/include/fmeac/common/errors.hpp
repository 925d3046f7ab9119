#pragma once

#include <stdexcept>
#include <string>

namespace fmeac {

// Shape disagreement between tensors or between a tensor and a layer.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke a documented precondition (stale cache, asymmetric matrix, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite value in a gradient, loss or parameter.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function (e.g. log of 0 distance).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Bad configuration file, unknown key or unparsable value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pipeline stage could not complete (missing artifact, I/O failure).
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fmeac
