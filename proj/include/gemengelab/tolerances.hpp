#pragma once

#include <cstdint>

namespace gemengelab {

// Numerical tolerances used by validations and property checks. Every
// operation that compares against one of these accepts an explicit
// Tolerances argument; the process-global instance only supplies defaults.
struct Tolerances {
  double norm = 1e-10;  // state normalization, trace-one, weight sums
  double herm = 1e-10;  // hermiticity residuals
  double orth = 1e-10;  // orthonormality of vector families
  double eq = 1e-8;     // generic operator/vector equality
  double pos = 1e-10;   // positive-semidefiniteness slack
  double var = 1e-8;    // variance floor below which correlations are undefined
  double rec = 1e-8;    // coefficient-reconstruction round-trip residual
};

// Mutable process-wide defaults. Intended to be adjusted once at startup
// (CLI flags, environment); library code never writes to it.
inline Tolerances& global_tolerances() {
  static Tolerances t;
  return t;
}

inline const Tolerances& tols() { return global_tolerances(); }

// Composite dimensions above this are refused by tensor composition.
inline constexpr std::int64_t kDimCap = std::int64_t{1} << 20;

// Probabilities at or below this are reported as exactly zero and their
// conditional states marked undefined.
inline constexpr double kZeroProbability = 1e-14;

}  // namespace gemengelab
