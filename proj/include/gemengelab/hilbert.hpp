#pragma once

// Finite-dimensional complex Hilbert space primitives: vectors, operators,
// tensor composition, partial traces, Schmidt decomposition, unitary
// completion and (anti)symmetrization. Everything is a value; every
// operation is a pure function.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gemengelab/errors.hpp"
#include "gemengelab/tolerances.hpp"

namespace gemengelab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

namespace detail {

inline std::vector<std::int64_t> strides_for(const std::vector<std::int64_t>& dims) {
  std::vector<std::int64_t> s(dims.size(), 1);
  for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i)
    s[i] = s[i + 1] * dims[i + 1];
  return s;
}

// Sign of a permutation via inversion count.
inline int permutation_parity(const std::vector<int>& perm) {
  int inversions = 0;
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = i + 1; j < perm.size(); ++j)
      if (perm[i] > perm[j]) ++inversions;
  return (inversions % 2 == 0) ? +1 : -1;
}

}  // namespace detail

// A finite-dimensional space, possibly carrying an explicit tensor-factor
// structure. Factor order is significant and preserved by composition.
class HilbertSpace {
 public:
  explicit HilbertSpace(std::int64_t dim, std::string label = "H")
      : factors_{dim}, label_(std::move(label)) {
    if (dim < 1) throw ValidationError("HilbertSpace dimension must be >= 1");
  }

  static HilbertSpace from_factors(std::vector<std::int64_t> dims, std::string label = "H") {
    if (dims.empty()) throw ValidationError("HilbertSpace needs at least one factor");
    for (auto d : dims)
      if (d < 1) throw ValidationError("HilbertSpace factor dimension must be >= 1");
    HilbertSpace s(1, std::move(label));
    s.factors_ = std::move(dims);
    return s;
  }

  std::int64_t dim() const {
    std::int64_t d = 1;
    for (auto f : factors_) d *= f;
    return d;
  }

  int factor_count() const { return static_cast<int>(factors_.size()); }
  std::int64_t factor_dim(int i) const { return factors_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::int64_t>& factor_dims() const { return factors_; }
  const std::string& label() const { return label_; }

  HilbertSpace factor(int i) const {
    return HilbertSpace(factor_dim(i), label_ + "[" + std::to_string(i) + "]");
  }

  // Spaces compare by dimension structure only; labels are report sugar.
  bool same_dimension(const HilbertSpace& o) const { return dim() == o.dim(); }
  bool operator==(const HilbertSpace& o) const { return factors_ == o.factors_; }

 private:
  std::vector<std::int64_t> factors_;
  std::string label_;
};

inline HilbertSpace tensor_space(const HilbertSpace& a, const HilbertSpace& b,
                                 std::int64_t cap = kDimCap) {
  if (a.dim() > cap / b.dim())
    throw DimensionError("tensor product dimension exceeds cap");
  std::vector<std::int64_t> dims = a.factor_dims();
  dims.insert(dims.end(), b.factor_dims().begin(), b.factor_dims().end());
  return HilbertSpace::from_factors(std::move(dims), a.label() + "*" + b.label());
}

// A unit vector on a HilbertSpace. Normalization is enforced at
// construction; all downstream code may rely on it.
class StateVector {
 public:
  StateVector(HilbertSpace space, Vector amplitudes, const Tolerances& tol = tols())
      : space_(std::move(space)), amp_(std::move(amplitudes)) {
    if (amp_.size() != space_.dim())
      throw DimensionError("amplitude count does not match space dimension");
    if (std::abs(amp_.norm() - 1.0) > tol.norm)
      throw ValidationError("state vector is not normalized");
  }

  static StateVector basis_state(const HilbertSpace& space, std::int64_t index) {
    if (index < 0 || index >= space.dim())
      throw DimensionError("basis index out of range");
    Vector v = Vector::Zero(space.dim());
    v(index) = 1.0;
    return StateVector(space, std::move(v));
  }

  const HilbertSpace& space() const { return space_; }
  const Vector& amplitudes() const { return amp_; }
  std::int64_t dim() const { return amp_.size(); }

  // <this|other>
  Complex inner(const StateVector& other) const {
    if (dim() != other.dim()) throw DimensionError("inner product dimension mismatch");
    return amp_.dot(other.amp_);
  }

 private:
  HilbertSpace space_;
  Vector amp_;
};

// A dense linear operator. No algebraic properties are assumed; hermiticity,
// positivity and unitarity are asked for via predicates.
class Operator {
 public:
  Operator(HilbertSpace space, Matrix entries)
      : space_(std::move(space)), m_(std::move(entries)) {
    if (m_.rows() != space_.dim() || m_.cols() != space_.dim())
      throw DimensionError("operator entries do not match space dimension");
  }

  static Operator identity(const HilbertSpace& space) {
    return Operator(space, Matrix::Identity(space.dim(), space.dim()));
  }
  static Operator zero(const HilbertSpace& space) {
    return Operator(space, Matrix::Zero(space.dim(), space.dim()));
  }

  const HilbertSpace& space() const { return space_; }
  const Matrix& matrix() const { return m_; }
  std::int64_t dim() const { return m_.rows(); }

  Operator adjoint() const { return Operator(space_, m_.adjoint()); }

  bool is_hermitian(double tol) const {
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol;
  }

  bool is_unitary(double tol) const;  // operator-norm based, defined below

  bool is_positive_semidefinite(double tol) const {
    if (!is_hermitian(std::max(tol, 1e-9))) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
  }

  bool is_projection(double tol) const {
    return is_hermitian(tol) && (m_ * m_ - m_).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  HilbertSpace space_;
  Matrix m_;
};

// Largest singular value.
inline double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline double op_norm(const Operator& a) { return op_norm(a.matrix()); }

inline double op_norm_diff(const Matrix& a, const Matrix& b) { return op_norm(a - b); }

inline bool Operator::is_unitary(double tol) const {
  Matrix g = m_.adjoint() * m_;
  g -= Matrix::Identity(m_.rows(), m_.cols());
  return op_norm(g) <= tol;
}

inline Operator operator*(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw DimensionError("operator product dimension mismatch");
  return Operator(a.space(), a.matrix() * b.matrix());
}

inline Operator operator+(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw DimensionError("operator sum dimension mismatch");
  return Operator(a.space(), a.matrix() + b.matrix());
}

inline Operator operator-(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw DimensionError("operator difference dimension mismatch");
  return Operator(a.space(), a.matrix() - b.matrix());
}

inline Operator operator*(Complex s, const Operator& a) {
  return Operator(a.space(), s * a.matrix());
}

inline Operator operator*(double s, const Operator& a) {
  return Operator(a.space(), s * a.matrix());
}

inline Vector apply(const Operator& a, const StateVector& v) {
  if (a.dim() != v.dim()) throw DimensionError("operator application dimension mismatch");
  return a.matrix() * v.amplitudes();
}

inline Operator commutator(const Operator& a, const Operator& b) {
  return Operator(a.space(), a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

inline Operator projector(const StateVector& v) {
  return Operator(v.space(), v.amplitudes() * v.amplitudes().adjoint());
}

// A positive trace-one operator. Invariants are enforced at construction.
class StateOperator {
 public:
  explicit StateOperator(Operator op, const Tolerances& tol = tols()) : op_(std::move(op)) {
    const Matrix& m = op_.matrix();
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol.herm)
      throw ValidationError("state operator is not hermitian");
    if (std::abs(m.trace().real() - 1.0) > tol.norm || std::abs(m.trace().imag()) > tol.norm)
      throw ValidationError("state operator trace differs from 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol.pos)
      throw ValidationError("state operator has a negative eigenvalue");
  }

  static StateOperator pure(const StateVector& v, const Tolerances& tol = tols()) {
    return StateOperator(projector(v), tol);
  }

  static StateOperator maximally_mixed(const HilbertSpace& space) {
    Matrix m = Matrix::Identity(space.dim(), space.dim()) / static_cast<double>(space.dim());
    return StateOperator(Operator(space, std::move(m)));
  }

  const HilbertSpace& space() const { return op_.space(); }
  const Matrix& matrix() const { return op_.matrix(); }
  const Operator& as_operator() const { return op_; }
  std::int64_t dim() const { return op_.dim(); }

 private:
  Operator op_;
};

// tr[T A]
inline Complex expectation(const StateOperator& t, const Operator& a) {
  if (t.dim() != a.dim()) throw DimensionError("expectation dimension mismatch");
  return (t.matrix() * a.matrix()).trace();
}

// <v|A|v>
inline Complex expectation(const StateVector& v, const Operator& a) {
  if (v.dim() != a.dim()) throw DimensionError("expectation dimension mismatch");
  return v.amplitudes().dot(a.matrix() * v.amplitudes());
}

// --- Tensor composition -----------------------------------------------

namespace detail {

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

}  // namespace detail

inline StateVector tensor(const StateVector& a, const StateVector& b,
                          std::int64_t cap = kDimCap) {
  HilbertSpace s = tensor_space(a.space(), b.space(), cap);
  return StateVector(std::move(s), detail::kron(a.amplitudes(), b.amplitudes()));
}

inline Operator tensor(const Operator& a, const Operator& b, std::int64_t cap = kDimCap) {
  HilbertSpace s = tensor_space(a.space(), b.space(), cap);
  return Operator(std::move(s), detail::kron(a.matrix(), b.matrix()));
}

inline StateOperator tensor(const StateOperator& a, const StateOperator& b,
                            std::int64_t cap = kDimCap) {
  return StateOperator(tensor(a.as_operator(), b.as_operator(), cap));
}

// --- Partial trace -----------------------------------------------------

namespace detail {

// Offsets of all multi-indices running over the listed factor positions,
// holding every other factor index at zero.
inline std::vector<std::int64_t> subindex_offsets(const std::vector<std::int64_t>& dims,
                                                  const std::vector<std::int64_t>& strides,
                                                  const std::vector<int>& positions) {
  std::int64_t count = 1;
  for (int p : positions) count *= dims[static_cast<std::size_t>(p)];
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(count), 0);
  std::vector<std::int64_t> digits(positions.size(), 0);
  for (std::int64_t idx = 0; idx < count; ++idx) {
    std::int64_t off = 0;
    for (std::size_t i = 0; i < positions.size(); ++i)
      off += digits[i] * strides[static_cast<std::size_t>(positions[i])];
    offsets[static_cast<std::size_t>(idx)] = off;
    for (int i = static_cast<int>(positions.size()) - 1; i >= 0; --i) {
      if (++digits[static_cast<std::size_t>(i)] <
          dims[static_cast<std::size_t>(positions[static_cast<std::size_t>(i)])])
        break;
      digits[static_cast<std::size_t>(i)] = 0;
    }
  }
  return offsets;
}

}  // namespace detail

// Trace out every factor not listed in `keep`. Kept factors retain their
// original relative order and factor structure.
inline StateOperator partial_trace(const StateOperator& t, std::span<const int> keep,
                                   const Tolerances& tol = tols()) {
  const std::vector<std::int64_t>& dims = t.space().factor_dims();
  const int n = t.space().factor_count();
  if (keep.empty()) throw DimensionError("partial trace must keep at least one factor");
  std::vector<int> kept(keep.begin(), keep.end());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i] < 0 || kept[i] >= n) throw DimensionError("factor index out of range");
    if (i > 0 && kept[i] <= kept[i - 1])
      throw DimensionError("keep indices must be strictly increasing");
  }
  std::vector<int> traced;
  for (int i = 0; i < n; ++i)
    if (std::find(kept.begin(), kept.end(), i) == kept.end()) traced.push_back(i);

  std::vector<std::int64_t> strides = detail::strides_for(dims);
  std::vector<std::int64_t> keep_off = detail::subindex_offsets(dims, strides, kept);
  std::vector<std::int64_t> traced_off = detail::subindex_offsets(dims, strides, traced);

  const std::int64_t dk = static_cast<std::int64_t>(keep_off.size());
  const Matrix& m = t.matrix();
  Matrix out = Matrix::Zero(dk, dk);
  for (std::int64_t tr = 0; tr < static_cast<std::int64_t>(traced_off.size()); ++tr) {
    const std::int64_t toff = traced_off[static_cast<std::size_t>(tr)];
    for (std::int64_t i = 0; i < dk; ++i)
      for (std::int64_t j = 0; j < dk; ++j)
        out(i, j) += m(keep_off[static_cast<std::size_t>(i)] + toff,
                       keep_off[static_cast<std::size_t>(j)] + toff);
  }

  std::vector<std::int64_t> kept_dims;
  for (int p : kept) kept_dims.push_back(dims[static_cast<std::size_t>(p)]);
  HilbertSpace s = HilbertSpace::from_factors(std::move(kept_dims), t.space().label());
  return StateOperator(Operator(std::move(s), std::move(out)), tol);
}

inline StateOperator partial_trace(const StateOperator& t, int keep_factor,
                                   const Tolerances& tol = tols()) {
  const int k[1] = {keep_factor};
  return partial_trace(t, std::span<const int>(k, 1), tol);
}

// --- Schmidt decomposition ---------------------------------------------

// Phi = sum_k c_k (l_k tensor r_k) with nonincreasing nonnegative c_k and
// orthonormal one-sided bases. Coefficients below the truncation floor are
// dropped; column phases are fixed so each left vector's leading entry is
// real positive; coefficient ties are ordered by the left vectors' leading
// nonzero amplitude index.
struct SchmidtForm {
  HilbertSpace left;
  HilbertSpace right;
  RealVector coefficients;
  Matrix left_basis;   // columns
  Matrix right_basis;  // columns

  int rank() const { return static_cast<int>(coefficients.size()); }

  StateVector left_vector(int k) const {
    return StateVector(left, left_basis.col(k));
  }
  StateVector right_vector(int k) const {
    return StateVector(right, right_basis.col(k));
  }

  StateVector reconstruct(const Tolerances& tol = tols()) const {
    Vector v = Vector::Zero(left.dim() * right.dim());
    for (int k = 0; k < rank(); ++k)
      v += coefficients(k) * detail::kron(Vector(left_basis.col(k)), Vector(right_basis.col(k)));
    std::vector<std::int64_t> dims = left.factor_dims();
    dims.insert(dims.end(), right.factor_dims().begin(), right.factor_dims().end());
    return StateVector(HilbertSpace::from_factors(std::move(dims), left.label() + "*" + right.label()),
                       std::move(v), tol);
  }
};

inline SchmidtForm schmidt_decompose(const StateVector& phi, int left_factor_count = 1,
                                     const Tolerances& tol = tols()) {
  const int n = phi.space().factor_count();
  if (left_factor_count < 1 || left_factor_count >= n)
    throw DimensionError("bipartition must leave factors on both sides");
  const std::vector<std::int64_t>& dims = phi.space().factor_dims();
  std::vector<std::int64_t> ldims(dims.begin(), dims.begin() + left_factor_count);
  std::vector<std::int64_t> rdims(dims.begin() + left_factor_count, dims.end());
  std::int64_t dl = 1, dr = 1;
  for (auto d : ldims) dl *= d;
  for (auto d : rdims) dr *= d;

  // Row-major reshape: amplitude (i,j) -> entry of a dl x dr matrix.
  Matrix m(dl, dr);
  for (std::int64_t i = 0; i < dl; ++i)
    for (std::int64_t j = 0; j < dr; ++j) m(i, j) = phi.amplitudes()(i * dr + j);

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  RealVector s = svd.singularValues();
  Matrix u = svd.matrixU();
  Matrix v = svd.matrixV().conjugate();  // phi = sum_k s_k u_k ⊗ conj(v)_k

  // Truncate coefficients below the floor (they carry no reconstructible mass).
  int r = 0;
  while (r < s.size() && s(r) > tol.norm) ++r;
  if (r == 0) r = 1;  // a unit vector always has at least one coefficient
  s.conservativeResize(r);
  u.conservativeResize(Eigen::NoChange, r);
  v.conservativeResize(Eigen::NoChange, r);

  auto leading_index = [](const Matrix& basis, int col) {
    for (Eigen::Index i = 0; i < basis.rows(); ++i)
      if (std::abs(basis(i, col)) > 1e-8) return i;
    return basis.rows();
  };

  // Deterministic order inside runs of equal coefficients.
  std::vector<int> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (std::abs(s(a) - s(b)) > 1e-12) return s(a) > s(b);
    return leading_index(u, a) < leading_index(u, b);
  });

  SchmidtForm form{HilbertSpace::from_factors(ldims, phi.space().label()),
                   HilbertSpace::from_factors(rdims, phi.space().label()),
                   RealVector(r), Matrix(dl, r), Matrix(dr, r)};
  for (int k = 0; k < r; ++k) {
    const int src = order[static_cast<std::size_t>(k)];
    Vector lv = u.col(src);
    Vector rv = v.col(src);
    const Eigen::Index lead = leading_index(u, src);
    if (lead < lv.size()) {
      Complex ph = lv(lead) / std::abs(lv(lead));
      lv /= ph;
      rv *= ph;
    }
    form.coefficients(k) = s(src);
    form.left_basis.col(k) = lv;
    form.right_basis.col(k) = rv;
  }
  return form;
}

inline int schmidt_rank(const StateVector& phi, int left_factor_count = 1,
                        double cutoff = 1e-8) {
  SchmidtForm f = schmidt_decompose(phi, left_factor_count);
  int r = 0;
  for (int k = 0; k < f.rank(); ++k)
    if (f.coefficients(k) > cutoff) ++r;
  return r;
}

// --- Unitary completion -------------------------------------------------

namespace detail {

// Extends an orthonormal column family to a full orthonormal basis by
// Gram-Schmidt over the computational basis vectors in index order.
inline Matrix gram_schmidt_extension(const Matrix& family, std::int64_t dim) {
  Matrix basis(dim, dim);
  Eigen::Index count = family.cols();
  basis.leftCols(count) = family;
  for (std::int64_t j = 0; j < dim && count < dim; ++j) {
    Vector v = Vector::Zero(dim);
    v(j) = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      v -= basis.leftCols(count) * (basis.leftCols(count).adjoint() * v);
    const double nrm = v.norm();
    if (nrm > 1e-6) {
      basis.col(count) = v / nrm;
      ++count;
    }
  }
  if (count != dim)
    throw ValidationError("unitary completion failed to span the space");
  return basis;
}

inline double orthonormality_residual(const Matrix& family) {
  if (family.cols() == 0) return 0.0;
  Matrix g = family.adjoint() * family;
  g -= Matrix::Identity(family.cols(), family.cols());
  return g.cwiseAbs().maxCoeff();
}

}  // namespace detail

// Deterministic unitary extension of the map inputs[i] -> outputs[i]. Both
// families must be orthonormal; the completion on the orthogonal complement
// follows the computational basis in index order on both sides.
inline Operator complete_unitary(const HilbertSpace& space,
                                 const std::vector<StateVector>& inputs,
                                 const std::vector<StateVector>& outputs,
                                 const Tolerances& tol = tols()) {
  if (inputs.size() != outputs.size())
    throw ValidationError("input/output pair counts differ");
  const std::int64_t d = space.dim();
  Matrix x(d, static_cast<Eigen::Index>(inputs.size()));
  Matrix y(d, static_cast<Eigen::Index>(outputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].dim() != d || outputs[i].dim() != d)
      throw DimensionError("pair dimension does not match space");
    x.col(static_cast<Eigen::Index>(i)) = inputs[i].amplitudes();
    y.col(static_cast<Eigen::Index>(i)) = outputs[i].amplitudes();
  }
  if (detail::orthonormality_residual(x) > tol.orth)
    throw ValidationError("input family is not orthonormal");
  if (detail::orthonormality_residual(y) > tol.orth)
    throw ValidationError("output family is not orthonormal");
  Matrix xb = detail::gram_schmidt_extension(x, d);
  Matrix yb = detail::gram_schmidt_extension(y, d);
  return Operator(space, yb * xb.adjoint());
}

// --- (Anti)symmetrization ------------------------------------------------

enum class Statistics { symmetric, antisymmetric };

// Normalized projection of a state on n identical factors onto the
// (anti)symmetric subspace. Returns nullopt when the projection vanishes
// (e.g. antisymmetrizing a repeated factor).
inline std::optional<StateVector> symmetrized(const StateVector& psi, Statistics stat,
                                              const Tolerances& tol = tols()) {
  const int n = psi.space().factor_count();
  const std::vector<std::int64_t>& dims = psi.space().factor_dims();
  for (int i = 1; i < n; ++i)
    if (dims[static_cast<std::size_t>(i)] != dims[0])
      throw ValidationError("(anti)symmetrization requires identical factors");
  if (n > 8) throw DimensionError("refusing factorial sum over more than 8 factors");
  if (n == 1) return psi;

  const std::int64_t total = psi.dim();
  std::vector<std::int64_t> strides = detail::strides_for(dims);

  // Digits of every composite index, precomputed once.
  std::vector<std::int64_t> digits(static_cast<std::size_t>(total) * static_cast<std::size_t>(n));
  for (std::int64_t idx = 0; idx < total; ++idx) {
    std::int64_t rest = idx;
    for (int f = 0; f < n; ++f) {
      digits[static_cast<std::size_t>(idx) * n + static_cast<std::size_t>(f)] =
          rest / strides[static_cast<std::size_t>(f)];
      rest %= strides[static_cast<std::size_t>(f)];
    }
  }

  Vector out = Vector::Zero(total);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double factorial = 1.0;
  for (int i = 2; i <= n; ++i) factorial *= i;
  do {
    const double sign =
        (stat == Statistics::antisymmetric) ? detail::permutation_parity(perm) : 1.0;
    for (std::int64_t idx = 0; idx < total; ++idx) {
      std::int64_t src = 0;
      for (int f = 0; f < n; ++f)
        src += digits[static_cast<std::size_t>(idx) * n +
                      static_cast<std::size_t>(perm[static_cast<std::size_t>(f)])] *
               strides[static_cast<std::size_t>(f)];
      out(idx) += sign * psi.amplitudes()(src);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  out /= factorial;

  const double nrm = out.norm();
  if (nrm <= tol.norm) return std::nullopt;
  return StateVector(psi.space(), out / nrm, tol);
}

}  // namespace gemengelab
