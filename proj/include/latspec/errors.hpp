#pragma once

#include <stdexcept>
#include <string>

namespace latspec {

// Input data violates a model invariant (hermiticity, support, shape).
class ModelValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Spectral parameter lies above the sampled band bottom.
class SpectralParameterError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Eigensolver or quadrature produced unusable numbers.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace latspec
