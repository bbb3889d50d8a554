#pragma once

#include <stdexcept>
#include <string>

namespace bindlab {

// Non-positive-definite matrices, degenerate mixture components.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched particle numbers, empty bases, malformed configs.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidPairError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Densities whose integral is not 1.
class NormalizationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace bindlab
