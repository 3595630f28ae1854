#pragma once

// Discretized position space: domain projections, D-localization of kernel
// operators, symmetrized two-particle constructions, separation-status
// predicates and the non-unitary status-change transition.

#include <optional>
#include <vector>

#include "gemengelab/hilbert.hpp"

namespace gemengelab {

class LatticeSpace;

// A subset of lattice sites, kept sorted and deduplicated.
class Domain {
 public:
  Domain(std::vector<int> indices, int lattice_size) : lattice_size_(lattice_size) {
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    for (int i : indices)
      if (i < 0 || i >= lattice_size)
        throw ValidationError("domain index outside the lattice");
    indices_ = std::move(indices);
  }

  static Domain range(int begin, int end, int lattice_size) {
    std::vector<int> idx;
    for (int i = begin; i < end; ++i) idx.push_back(i);
    return Domain(std::move(idx), lattice_size);
  }

  static Domain full(int lattice_size) { return range(0, lattice_size, lattice_size); }
  static Domain empty(int lattice_size) { return Domain({}, lattice_size); }

  const std::vector<int>& indices() const { return indices_; }
  int size() const { return static_cast<int>(indices_.size()); }
  int lattice_size() const { return lattice_size_; }

  bool contains(int i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
  }

  Domain complement() const {
    std::vector<int> idx;
    for (int i = 0; i < lattice_size_; ++i)
      if (!contains(i)) idx.push_back(i);
    return Domain(std::move(idx), lattice_size_);
  }

 private:
  std::vector<int> indices_;
  int lattice_size_;
};

// A 1-D lattice of strictly increasing site coordinates carrying the
// position basis of an N-dimensional space.
class LatticeSpace {
 public:
  explicit LatticeSpace(std::vector<double> sites, std::string label = "L")
      : sites_(std::move(sites)), space_(static_cast<std::int64_t>(sites_.size()), std::move(label)) {
    if (sites_.empty()) throw ValidationError("lattice needs at least one site");
    for (std::size_t i = 1; i < sites_.size(); ++i)
      if (sites_[i] <= sites_[i - 1])
        throw ValidationError("lattice sites must be strictly increasing");
  }

  static LatticeSpace uniform(int n, double spacing = 1.0, std::string label = "L") {
    std::vector<double> sites;
    for (int i = 0; i < n; ++i) sites.push_back(i * spacing);
    return LatticeSpace(std::move(sites), std::move(label));
  }

  int size() const { return static_cast<int>(sites_.size()); }
  const std::vector<double>& sites() const { return sites_; }
  double site(int i) const { return sites_.at(static_cast<std::size_t>(i)); }
  const HilbertSpace& space() const { return space_; }

  Operator position_operator() const {
    Matrix m = Matrix::Zero(size(), size());
    for (int i = 0; i < size(); ++i) m(i, i) = sites_[static_cast<std::size_t>(i)];
    return Operator(space_, std::move(m));
  }

  // Cyclic shift by one site.
  Operator shift_operator() const {
    Matrix m = Matrix::Zero(size(), size());
    for (int i = 0; i < size(); ++i) m((i + 1) % size(), i) = 1.0;
    return Operator(space_, std::move(m));
  }

  // Real gaussian amplitudes, optionally hard-truncated to a support domain
  // (needed wherever exact support disjointness is assumed).
  StateVector gaussian_packet(double center, double width,
                              const std::optional<Domain>& support = std::nullopt) const {
    if (width <= 0.0) throw ValidationError("packet width must be positive");
    Vector v = Vector::Zero(size());
    for (int i = 0; i < size(); ++i) {
      if (support && !support->contains(i)) continue;
      const double dx = sites_[static_cast<std::size_t>(i)] - center;
      v(i) = std::exp(-dx * dx / (2.0 * width * width));
    }
    const double nrm = v.norm();
    if (nrm <= 0.0) throw ValidationError("gaussian packet vanishes on its support");
    return StateVector(space_, v / nrm);
  }

 private:
  std::vector<double> sites_;
  HilbertSpace space_;
};

// Diagonal 0/1 projection onto the sites of D.
inline Operator domain_projection(const LatticeSpace& lattice, const Domain& d) {
  if (d.lattice_size() != lattice.size()) throw DimensionError("domain/lattice size mismatch");
  Matrix m = Matrix::Zero(lattice.size(), lattice.size());
  for (int i : d.indices()) m(i, i) = 1.0;
  return Operator(lattice.space(), std::move(m));
}

// P_D A P_D, realized as an entry mask (exact; no rounding enters).
inline Operator localize(const Operator& kernel, const Domain& d) {
  if (d.lattice_size() != kernel.dim()) throw DimensionError("domain/operator size mismatch");
  Matrix m = Matrix::Zero(kernel.dim(), kernel.dim());
  for (int i : d.indices())
    for (int j : d.indices()) m(i, j) = kernel.matrix()(i, j);
  return Operator(kernel.space(), std::move(m));
}

// True iff every row and column indexed outside D vanishes.
inline bool is_d_local(const Operator& kernel, const Domain& d, const Tolerances& tol = tols()) {
  if (d.lattice_size() != kernel.dim()) throw DimensionError("domain/operator size mismatch");
  for (int i = 0; i < kernel.dim(); ++i) {
    const bool inside = d.contains(i);
    for (int j = 0; j < kernel.dim(); ++j) {
      if (inside && d.contains(j)) continue;
      if (std::abs(kernel.matrix()(i, j)) > tol.eq) return false;
    }
  }
  return true;
}

// (psi (x) phi +/- phi (x) psi)/sqrt(2). The normalization presumes remote,
// i.e. orthogonal, preparations; non-orthogonal inputs are rejected.
inline StateVector pair_state(const StateVector& psi, const StateVector& phi, Statistics stat,
                              const Tolerances& tol = tols()) {
  if (psi.dim() != phi.dim()) throw DimensionError("pair state dimension mismatch");
  if (std::abs(psi.inner(phi)) > tol.orth)
    throw ValidationError("pair state requires orthogonal constituents");
  const double sign = (stat == Statistics::antisymmetric) ? -1.0 : 1.0;
  Vector v = detail::kron(psi.amplitudes(), phi.amplitudes()) +
             sign * detail::kron(phi.amplitudes(), psi.amplitudes());
  v /= std::sqrt(2.0);
  return StateVector(tensor_space(psi.space(), phi.space()), std::move(v), tol);
}

// a (x) 1 + 1 (x) a: the observable actually measurable when either of two
// identical particles may contribute.
inline Operator pair_observable(const Operator& kernel, std::int64_t cap = kDimCap) {
  Operator id = Operator::identity(kernel.space());
  return tensor(kernel, id, cap) + tensor(id, kernel, cap);
}

// <Psi| a(x)1 + 1(x)a |Psi> evaluated by contraction, without materializing
// the two-particle matrix.
inline Complex pair_expectation(const Operator& kernel, const StateVector& pair) {
  const std::int64_t n = kernel.dim();
  if (pair.dim() != n * n) throw DimensionError("pair state dimension mismatch");
  Matrix m(n, n);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) m(i, j) = pair.amplitudes()(i * n + j);
  const Matrix left = kernel.matrix() * m;             // (a (x) 1) Psi
  const Matrix right = m * kernel.matrix().transpose();  // (1 (x) a) Psi
  Complex total = 0.0;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j)
      total += std::conj(m(i, j)) * (left(i, j) + right(i, j));
  return total;
}

// True iff P_D T P_D = T: registrations of D-local effects then depend only
// on the D-block of the effect, so they are undisturbed by anything outside.
inline bool separation_status(const StateOperator& t, const Domain& d,
                              const Tolerances& tol = tols()) {
  if (d.lattice_size() != t.dim()) throw DimensionError("domain/state size mismatch");
  double worst = 0.0;
  for (int i = 0; i < t.dim(); ++i)
    for (int j = 0; j < t.dim(); ++j) {
      if (d.contains(i) && d.contains(j)) continue;
      worst = std::max(worst, std::abs(t.matrix()(i, j)));
    }
  return worst <= tol.eq;
}

struct StatusChange {
  StateVector before;  // unsymmetrized product of the newcomer with the resident family
  StateVector after;   // full (anti)symmetrization, renormalized
  double overlap;      // |<before|after>|, < 1 exactly when the step is non-unitary
};

// The transition a system undergoes when it joins a family of identical
// systems: the product state must be replaced by its (anti)symmetrization.
inline StatusChange status_change(const StateVector& psi, const StateVector& resident,
                                  Statistics stat, const Tolerances& tol = tols()) {
  for (int i = 0; i < resident.space().factor_count(); ++i)
    if (resident.space().factor_dim(i) != psi.dim())
      throw ValidationError("resident factors must match the incoming system's space");

  if (resident.space().factor_count() > 1) {
    std::optional<StateVector> projected = symmetrized(resident, stat, tol);
    if (!projected) throw ValidationError("resident state has no (anti)symmetric part");
    Vector diff = projected->amplitudes() - resident.amplitudes();
    if (diff.cwiseAbs().maxCoeff() > tol.eq)
      throw ValidationError("resident state must already be (anti)symmetric");
  }

  StateVector before = tensor(psi, resident);
  std::optional<StateVector> after = symmetrized(before, stat, tol);
  if (!after)
    throw ZeroProjectionError("(anti)symmetrization of the joined state vanishes");
  const double overlap = std::abs(before.inner(*after));
  return StatusChange{std::move(before), std::move(*after), overlap};
}

struct SuperselectionReport {
  double max_residual = 0.0;
  int worst_site = -1;

  bool pass(double tol) const { return max_residual <= tol; }
};

// A D-local operator commutes with every position spectral projection whose
// support avoids D; single-site projections generate them all on a lattice.
inline SuperselectionReport superselection_check(const Operator& kernel, const Domain& d,
                                                 const Tolerances& tol = tols()) {
  if (!is_d_local(kernel, d, tol))
    throw ValidationError("superselection check requires a D-local operator");
  SuperselectionReport report;
  for (int x = 0; x < kernel.dim(); ++x) {
    if (d.contains(x)) continue;
    Matrix e = Matrix::Zero(kernel.dim(), kernel.dim());
    e(x, x) = 1.0;
    const double r = op_norm(kernel.matrix() * e - e * kernel.matrix());
    if (r > report.max_residual) {
      report.max_residual = r;
      report.worst_site = x;
    }
  }
  return report;
}

}  // namespace gemengelab
