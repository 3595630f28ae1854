#pragma once

// States carrying gemenge (preparation-provenance) structure. The structure
// is metadata: operationally identical state operators may differ in it, so
// equality compares branch lists, not just the convex sum.

#include <string>
#include <vector>

#include "gemengelab/hilbert.hpp"

namespace gemengelab {

enum class Provenance { declared_preparation, rule2_generated, trivial };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::declared_preparation: return "declared-preparation";
    case Provenance::rule2_generated: return "rule2-generated";
    case Provenance::trivial: return "trivial";
  }
  return "?";
}

struct GemengeBranch {
  double weight;
  StateOperator state;
};

namespace detail {

// Descending weight; weight ties broken by the first differing matrix entry
// (row-major, real part before imaginary part).
inline bool branch_before(const GemengeBranch& a, const GemengeBranch& b) {
  if (std::abs(a.weight - b.weight) > 1e-12) return a.weight > b.weight;
  const Matrix& ma = a.state.matrix();
  const Matrix& mb = b.state.matrix();
  if (ma.rows() != mb.rows()) return ma.rows() < mb.rows();
  for (Eigen::Index i = 0; i < ma.rows(); ++i)
    for (Eigen::Index j = 0; j < ma.cols(); ++j) {
      const Complex x = ma(i, j), y = mb(i, j);
      if (std::abs(x.real() - y.real()) > 1e-12) return x.real() < y.real();
      if (std::abs(x.imag() - y.imag()) > 1e-12) return x.imag() < y.imag();
    }
  return false;
}

inline void canonicalize_branches(std::vector<GemengeBranch>& branches) {
  std::stable_sort(branches.begin(), branches.end(), branch_before);
}

}  // namespace detail

class GemengeState {
 public:
  static GemengeState trivial(StateOperator state) {
    std::vector<GemengeBranch> b;
    b.push_back({1.0, std::move(state)});
    return GemengeState(std::move(b), Provenance::trivial, tols());
  }

  // A preparation declared as a random mixture of the listed branches.
  static GemengeState declared(std::vector<GemengeBranch> branches,
                               const Tolerances& tol = tols()) {
    return GemengeState(std::move(branches), Provenance::declared_preparation, tol);
  }

  // Reserved for the detector objectification transform; nothing else in the
  // library may introduce multi-branch structure.
  static GemengeState rule2_generated(std::vector<GemengeBranch> branches,
                                      const Tolerances& tol = tols()) {
    return GemengeState(std::move(branches), Provenance::rule2_generated, tol);
  }

  const std::vector<GemengeBranch>& branches() const { return branches_; }
  int branch_count() const { return static_cast<int>(branches_.size()); }
  Provenance provenance() const { return provenance_; }
  bool is_trivial() const { return provenance_ == Provenance::trivial; }
  const HilbertSpace& space() const { return branches_.front().state.space(); }

  // The convex sum. Forgets provenance: distinct gemenge structures can
  // yield the same operator, which is the whole point of tracking them.
  StateOperator as_operator(const Tolerances& tol = tols()) const {
    Matrix sum = Matrix::Zero(space().dim(), space().dim());
    for (const GemengeBranch& b : branches_) sum += b.weight * b.state.matrix();
    return StateOperator(Operator(space(), std::move(sum)), tol);
  }

 private:
  GemengeState(std::vector<GemengeBranch> branches, Provenance provenance, const Tolerances& tol)
      : branches_(std::move(branches)), provenance_(provenance) {
    if (branches_.empty()) throw ValidationError("gemenge needs at least one branch");
    double total = 0.0;
    for (const GemengeBranch& b : branches_) {
      if (b.weight <= 0.0) throw ValidationError("gemenge weights must be positive");
      if (b.state.dim() != branches_.front().state.dim())
        throw DimensionError("gemenge branches on different spaces");
      total += b.weight;
    }
    if (std::abs(total - 1.0) > tol.norm)
      throw ValidationError("gemenge weights must sum to 1");
    if (branches_.size() == 1) provenance_ = Provenance::trivial;
    detail::canonicalize_branches(branches_);
  }

  std::vector<GemengeBranch> branches_;
  Provenance provenance_;
};

// Branch-list comparison up to permutation.
inline bool approx_equal(const GemengeState& a, const GemengeState& b, double tol) {
  if (a.branch_count() != b.branch_count()) return false;
  std::vector<bool> used(static_cast<std::size_t>(b.branch_count()), false);
  for (const GemengeBranch& x : a.branches()) {
    bool matched = false;
    for (std::size_t j = 0; j < used.size(); ++j) {
      if (used[j]) continue;
      const GemengeBranch& y = b.branches()[j];
      if (std::abs(x.weight - y.weight) > tol) continue;
      if (x.state.dim() != y.state.dim()) continue;
      if (op_norm_diff(x.state.matrix(), y.state.matrix()) > tol) continue;
      used[j] = true;
      matched = true;
      break;
    }
    if (!matched) return false;
  }
  return true;
}

// Conjugates every branch by the same unitary; weights and provenance are
// untouched.
inline GemengeState evolve_unitary(const GemengeState& g, const Operator& u,
                                   const Tolerances& tol = tols()) {
  if (!u.is_unitary(tol.eq)) throw ValidationError("evolution operator is not unitary");
  if (u.dim() != g.space().dim()) throw DimensionError("evolution dimension mismatch");
  std::vector<GemengeBranch> branches;
  branches.reserve(g.branches().size());
  for (const GemengeBranch& b : g.branches()) {
    Matrix m = u.matrix() * b.state.matrix() * u.matrix().adjoint();
    branches.push_back({b.weight, StateOperator(Operator(b.state.space(), std::move(m)), tol)});
  }
  switch (g.provenance()) {
    case Provenance::declared_preparation: return GemengeState::declared(std::move(branches), tol);
    case Provenance::rule2_generated: return GemengeState::rule2_generated(std::move(branches), tol);
    case Provenance::trivial: break;
  }
  return GemengeState::trivial(std::move(branches.front().state));
}

// Tail norm of the operator-Schmidt spectrum across the cut after the first
// `left_factors` factors; zero exactly when the operator is a product.
inline double product_form_residual(const StateOperator& t, int left_factors) {
  const std::vector<std::int64_t>& dims = t.space().factor_dims();
  if (left_factors < 1 || left_factors >= t.space().factor_count())
    throw DimensionError("cut must leave factors on both sides");
  std::int64_t dl = 1, dr = 1;
  for (int i = 0; i < t.space().factor_count(); ++i)
    (i < left_factors ? dl : dr) *= dims[static_cast<std::size_t>(i)];

  // Realignment: M[(i,j),(i',j')] -> R[(i,i'),(j,j')].
  Matrix r(dl * dl, dr * dr);
  const Matrix& m = t.matrix();
  for (std::int64_t i = 0; i < dl; ++i)
    for (std::int64_t ip = 0; ip < dl; ++ip)
      for (std::int64_t j = 0; j < dr; ++j)
        for (std::int64_t jp = 0; jp < dr; ++jp)
          r(i * dl + ip, j * dr + jp) = m(i * dr + j, ip * dr + jp);

  Eigen::JacobiSVD<Matrix> svd(r);
  const RealVector& s = svd.singularValues();
  double tail = 0.0;
  for (Eigen::Index k = 1; k < s.size(); ++k) tail += s(k) * s(k);
  return std::sqrt(tail);
}

// Reduction of a gemenge over one side of a bipartite cut. Requires every
// branch to factor as a product across the cut; otherwise no reduction with
// the same structure exists and ProductFormError is thrown.
inline GemengeState partial_trace_gemenge(const GemengeState& g, int left_factors = 1,
                                          int keep_side = 0, const Tolerances& tol = tols()) {
  if (keep_side != 0 && keep_side != 1) throw DimensionError("keep_side must be 0 or 1");
  const int n = g.space().factor_count();
  std::vector<int> keep;
  if (keep_side == 0)
    for (int i = 0; i < left_factors; ++i) keep.push_back(i);
  else
    for (int i = left_factors; i < n; ++i) keep.push_back(i);

  std::vector<GemengeBranch> branches;
  branches.reserve(g.branches().size());
  for (std::size_t i = 0; i < g.branches().size(); ++i) {
    const GemengeBranch& b = g.branches()[i];
    const double residual = product_form_residual(b.state, left_factors);
    if (residual > tol.eq)
      throw ProductFormError("branch " + std::to_string(i) +
                             " is not a product across the cut (residual " +
                             std::to_string(residual) + ")");
    branches.push_back({b.weight, partial_trace(b.state, std::span<const int>(keep), tol)});
  }
  switch (g.provenance()) {
    case Provenance::declared_preparation: return GemengeState::declared(std::move(branches), tol);
    case Provenance::rule2_generated: return GemengeState::rule2_generated(std::move(branches), tol);
    case Provenance::trivial: break;
  }
  return GemengeState::trivial(std::move(branches.front().state));
}

// Merges branches per the given partition of branch indices; group states
// are weight-normalized convex combinations. The convex sum is unchanged.
inline GemengeState coarsen(const GemengeState& g, const std::vector<std::vector<int>>& partition,
                            const Tolerances& tol = tols()) {
  std::vector<bool> seen(static_cast<std::size_t>(g.branch_count()), false);
  for (const auto& cell : partition) {
    if (cell.empty()) throw ValidationError("empty cell in partition");
    for (int idx : cell) {
      if (idx < 0 || idx >= g.branch_count()) throw ValidationError("branch index out of range");
      if (seen[static_cast<std::size_t>(idx)]) throw ValidationError("branch index repeated");
      seen[static_cast<std::size_t>(idx)] = true;
    }
  }
  for (bool s : seen)
    if (!s) throw ValidationError("partition does not cover all branches");

  std::vector<GemengeBranch> branches;
  branches.reserve(partition.size());
  for (const auto& cell : partition) {
    double w = 0.0;
    Matrix sum = Matrix::Zero(g.space().dim(), g.space().dim());
    for (int idx : cell) {
      const GemengeBranch& b = g.branches()[static_cast<std::size_t>(idx)];
      w += b.weight;
      sum += b.weight * b.state.matrix();
    }
    sum /= w;
    branches.push_back({w, StateOperator(Operator(g.space(), std::move(sum)), tol)});
  }
  if (branches.size() == 1) return GemengeState::trivial(std::move(branches.front().state));
  switch (g.provenance()) {
    case Provenance::declared_preparation: return GemengeState::declared(std::move(branches), tol);
    case Provenance::rule2_generated: return GemengeState::rule2_generated(std::move(branches), tol);
    case Provenance::trivial: break;
  }
  return GemengeState::declared(std::move(branches), tol);
}

}  // namespace gemengelab
