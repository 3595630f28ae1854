#pragma once

// Seeded generators for randomized property checks. All functions take the
// engine by reference so callers control the stream.

#include <random>

#include "gemengelab/hilbert.hpp"

namespace gemengelab {

using Rng = std::mt19937_64;

inline Vector random_complex_gaussian(Rng& rng, std::int64_t dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (std::int64_t i = 0; i < dim; ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v(i) = Complex(re, im);
  }
  return v;
}

inline StateVector random_state_vector(Rng& rng, const HilbertSpace& space) {
  Vector v = random_complex_gaussian(rng, space.dim());
  return StateVector(space, v / v.norm());
}

inline Matrix random_unitary_matrix(Rng& rng, std::int64_t dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(dim, dim);
  for (std::int64_t i = 0; i < dim; ++i)
    for (std::int64_t j = 0; j < dim; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::int64_t j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

inline Operator random_unitary(Rng& rng, const HilbertSpace& space) {
  return Operator(space, random_unitary_matrix(rng, space.dim()));
}

inline Operator random_hermitian(Rng& rng, const HilbertSpace& space, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::int64_t d = space.dim();
  Matrix g(d, d);
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < d; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  Matrix h = 0.5 * scale * (g + Matrix(g.adjoint()));
  return Operator(space, std::move(h));
}

// Full-rank random mixed state (normalized Wishart).
inline StateOperator random_state_operator(Rng& rng, const HilbertSpace& space) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::int64_t d = space.dim();
  Matrix g(d, d);
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < d; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  Matrix w = g * g.adjoint();
  w /= w.trace().real();
  w = 0.5 * (w + Matrix(w.adjoint()));
  return StateOperator(Operator(space, std::move(w)));
}

}  // namespace gemengelab
