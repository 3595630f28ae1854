#pragma once

#include <stdexcept>
#include <string>

namespace gemengelab {

// Operands live on incompatible spaces, or a tensor product would exceed
// the configured dimension cap.
class DimensionError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A value failed its construction invariants (non-normalized state,
// non-unitary coupling, invalid partition, ...).
class ValidationError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Projection onto the requested (anti)symmetric subspace is the zero vector.
class ZeroProjectionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A gemenge branch does not factor as a product across the requested cut,
// so no structure-preserving reduction exists.
class ProductFormError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normalized correlation is undefined for (near-)constant observables.
class ZeroVarianceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A scattering output stayed entangled across the system/target cut.
class FactorizationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario file syntax or semantic error, annotated with a line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace gemengelab
