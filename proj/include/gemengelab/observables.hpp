#pragma once

// Sharp (projection-valued) observables and positive operator valued
// measures over finite outcome sets.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gemengelab/hilbert.hpp"

namespace gemengelab {

// Outcome labels are opaque text; pointer outcomes are detector identities,
// not numbers. An optional real value supports averages.
struct Outcome {
  std::string label;
  std::optional<double> value;
};

// A candidate effect: validity (0 <= E <= 1) is asked for, not assumed, so
// that invalid measures can be constructed and reported on.
class Effect {
 public:
  explicit Effect(Operator op) : op_(std::move(op)) {}

  const Operator& op() const { return op_; }
  const Matrix& matrix() const { return op_.matrix(); }
  std::int64_t dim() const { return op_.dim(); }

  double hermiticity_residual() const {
    return (op_.matrix() - op_.matrix().adjoint()).cwiseAbs().maxCoeff();
  }

  // How far the spectrum dips below 0 / exceeds 1 (0 when valid).
  std::pair<double, double> spectral_excess() const {
    Matrix h = 0.5 * (op_.matrix() + op_.matrix().adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    return {std::max(0.0, -lo), std::max(0.0, hi - 1.0)};
  }

  bool is_valid(const Tolerances& tol = tols()) const {
    if (hermiticity_residual() > tol.herm) return false;
    auto [below, above] = spectral_excess();
    return below <= tol.pos && above <= tol.pos;
  }

 private:
  Operator op_;
};

class PovMeasure {
 public:
  PovMeasure(HilbertSpace space, std::vector<Outcome> outcomes, std::vector<Effect> effects,
             int dimension = 1)
      : space_(std::move(space)),
        outcomes_(std::move(outcomes)),
        effects_(std::move(effects)),
        dimension_(dimension) {
    if (outcomes_.size() != effects_.size())
      throw ValidationError("one effect per outcome required");
    if (outcomes_.empty()) throw ValidationError("POV measure needs at least one outcome");
    for (const Effect& e : effects_)
      if (e.dim() != space_.dim()) throw DimensionError("effect dimension mismatch");
  }

  const HilbertSpace& space() const { return space_; }
  int outcome_count() const { return static_cast<int>(outcomes_.size()); }
  const Outcome& outcome(int k) const { return outcomes_.at(static_cast<std::size_t>(k)); }
  const Effect& effect(int k) const { return effects_.at(static_cast<std::size_t>(k)); }
  int dimension() const { return dimension_; }

  // E(X) for a subset X of outcome indices; additive by construction.
  Operator effect_for(std::span<const int> subset) const {
    Matrix sum = Matrix::Zero(space_.dim(), space_.dim());
    for (int k : subset) {
      if (k < 0 || k >= outcome_count()) throw ValidationError("unknown outcome index");
      sum += effects_[static_cast<std::size_t>(k)].matrix();
    }
    return Operator(space_, std::move(sum));
  }

 private:
  HilbertSpace space_;
  std::vector<Outcome> outcomes_;
  std::vector<Effect> effects_;
  int dimension_;
};

struct PovmValidation {
  bool positivity_pass = false;
  double positivity_residual = 0.0;  // worst spectral excess over all effects
  bool additivity_pass = false;
  double additivity_residual = 0.0;
  bool normalization_pass = false;
  double normalization_residual = 0.0;

  bool pass() const { return positivity_pass && additivity_pass && normalization_pass; }
};

// Checks the measure axioms over the finite outcome set: each effect
// satisfies 0 <= E <= 1, unions of disjoint outcome sets add, and the full
// set sums to the identity. Failures are reported, never thrown.
inline PovmValidation validate_povm(const PovMeasure& m, const Tolerances& tol = tols()) {
  PovmValidation report;

  for (int k = 0; k < m.outcome_count(); ++k) {
    const Effect& e = m.effect(k);
    auto [below, above] = e.spectral_excess();
    report.positivity_residual = std::max({report.positivity_residual, below, above,
                                           e.hermiticity_residual()});
  }
  report.positivity_pass = report.positivity_residual <= tol.pos;

  // Finite additivity: E(X ∪ Y) = E(X) + E(Y) for disjoint X, Y. With a
  // finite outcome set this holds by construction; evaluated on the
  // even/odd split as a representative disjoint union.
  std::vector<int> evens, odds, all;
  for (int k = 0; k < m.outcome_count(); ++k) {
    (k % 2 == 0 ? evens : odds).push_back(k);
    all.push_back(k);
  }
  Matrix lhs = m.effect_for(all).matrix();
  Matrix rhs = m.effect_for(evens).matrix() + m.effect_for(odds).matrix();
  report.additivity_residual = (lhs - rhs).cwiseAbs().maxCoeff();
  report.additivity_pass = report.additivity_residual <= tol.eq;

  Matrix id = Matrix::Identity(m.space().dim(), m.space().dim());
  report.normalization_residual = op_norm_diff(lhs, id);
  report.normalization_pass = report.normalization_residual <= tol.eq;
  return report;
}

// A discrete observable with distinct real eigenvalues and a complete
// orthonormal eigenvector family per eigenvalue.
class SharpObservable {
 public:
  SharpObservable(HilbertSpace space, std::vector<double> eigenvalues,
                  std::vector<std::vector<StateVector>> eigenvectors,
                  const Tolerances& tol = tols())
      : space_(std::move(space)),
        eigenvalues_(std::move(eigenvalues)),
        eigenvectors_(std::move(eigenvectors)) {
    if (eigenvalues_.size() != eigenvectors_.size() || eigenvalues_.empty())
      throw ValidationError("one eigenvector family per eigenvalue required");
    for (std::size_t k = 0; k < eigenvalues_.size(); ++k)
      for (std::size_t l = k + 1; l < eigenvalues_.size(); ++l)
        if (eigenvalues_[k] == eigenvalues_[l])
          throw ValidationError("eigenvalues must be distinct");

    std::int64_t total = 0;
    for (const auto& family : eigenvectors_) {
      if (family.empty()) throw ValidationError("empty eigenvector family");
      for (const StateVector& v : family) {
        if (v.dim() != space_.dim()) throw DimensionError("eigenvector dimension mismatch");
        ++total;
      }
    }
    if (total != space_.dim())
      throw ValidationError("eigenvector families must span the space");

    Matrix all(space_.dim(), total);
    Eigen::Index col = 0;
    for (const auto& family : eigenvectors_)
      for (const StateVector& v : family) all.col(col++) = v.amplitudes();
    if (detail::orthonormality_residual(all) > tol.orth)
      throw ValidationError("eigenvectors are not an orthonormal basis");

    for (const auto& family : eigenvectors_) {
      Matrix p = Matrix::Zero(space_.dim(), space_.dim());
      for (const StateVector& v : family) p += v.amplitudes() * v.amplitudes().adjoint();
      projections_.emplace_back(space_, std::move(p));
    }
  }

  // Nondegenerate observable from a full eigenbasis, one value per vector.
  static SharpObservable from_basis(const HilbertSpace& space, std::vector<double> eigenvalues,
                                    const std::vector<StateVector>& basis,
                                    const Tolerances& tol = tols()) {
    std::vector<std::vector<StateVector>> families;
    families.reserve(basis.size());
    for (const StateVector& v : basis) families.push_back({v});
    return SharpObservable(space, std::move(eigenvalues), std::move(families), tol);
  }

  const HilbertSpace& space() const { return space_; }
  int outcome_count() const { return static_cast<int>(eigenvalues_.size()); }
  double eigenvalue(int k) const { return eigenvalues_.at(static_cast<std::size_t>(k)); }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  const std::vector<StateVector>& eigenvectors(int k) const {
    return eigenvectors_.at(static_cast<std::size_t>(k));
  }
  int multiplicity(int k) const {
    return static_cast<int>(eigenvectors_.at(static_cast<std::size_t>(k)).size());
  }
  const Operator& projection(int k) const { return projections_.at(static_cast<std::size_t>(k)); }

  bool nondegenerate() const {
    for (const auto& family : eigenvectors_)
      if (family.size() != 1) return false;
    return true;
  }

  Operator as_operator() const {
    Matrix sum = Matrix::Zero(space_.dim(), space_.dim());
    for (std::size_t k = 0; k < eigenvalues_.size(); ++k)
      sum += eigenvalues_[k] * projections_[k].matrix();
    return Operator(space_, std::move(sum));
  }

  PovMeasure as_povm() const {
    std::vector<Outcome> outcomes;
    std::vector<Effect> effects;
    for (std::size_t k = 0; k < eigenvalues_.size(); ++k) {
      outcomes.push_back({"o" + std::to_string(k), eigenvalues_[k]});
      effects.emplace_back(projections_[k]);
    }
    return PovMeasure(space_, std::move(outcomes), std::move(effects));
  }

 private:
  HilbertSpace space_;
  std::vector<double> eigenvalues_;
  std::vector<std::vector<StateVector>> eigenvectors_;
  std::vector<Operator> projections_;
};

// tr[T E], clamped to [0,1] only when within tol.eq of the boundary.
inline double probability(const StateOperator& t, const Operator& effect,
                          const Tolerances& tol = tols()) {
  if (t.dim() != effect.dim()) throw DimensionError("probability dimension mismatch");
  double p = expectation(t, effect).real();
  if (p < 0.0 && p >= -tol.eq) p = 0.0;
  if (p > 1.0 && p <= 1.0 + tol.eq) p = 1.0;
  return p;
}

inline double probability(const StateOperator& t, const Effect& effect,
                          const Tolerances& tol = tols()) {
  return probability(t, effect.op(), tol);
}

}  // namespace gemengelab
