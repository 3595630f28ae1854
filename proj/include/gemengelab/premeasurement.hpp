#pragma once

// The discrete premeasurement coupling model (Beltrametti-Cassinelli-Lahti
// form): a sharp system observable, an orthonormal pointer-state family
// sharing its outcome values, an apparatus initial vector, and an
// outcome-indexed end-state family on the system. The coupling unitary maps
//     phi_kl (x) psi  ->  phi'_kl (x) psi_k
// and is completed deterministically on the rest of the space.

#include <cstdint>
#include <optional>
#include <vector>

#include "gemengelab/gemenge.hpp"
#include "gemengelab/hilbert.hpp"
#include "gemengelab/observables.hpp"
#include "gemengelab/random.hpp"

namespace gemengelab {

class PremeasurementSetup {
 public:
  // The pointer states need not span the apparatus space (detector arrays
  // have far more ionization states than outcomes); they must be
  // orthonormal, one per outcome of the system observable.
  PremeasurementSetup(SharpObservable system_observable, std::vector<StateVector> pointer_states,
                      StateVector apparatus_init,
                      std::vector<std::vector<StateVector>> end_states,
                      const Tolerances& tol = tols())
      : system_(std::move(system_observable)),
        pointer_states_(std::move(pointer_states)),
        apparatus_init_(std::move(apparatus_init)),
        end_states_(std::move(end_states)) {
    const int outcomes = system_.outcome_count();
    if (static_cast<int>(pointer_states_.size()) != outcomes)
      throw ValidationError("one pointer state per outcome required");
    const std::int64_t da = pointer_states_.front().dim();
    Matrix p(da, outcomes);
    for (int k = 0; k < outcomes; ++k) {
      if (pointer_states_[static_cast<std::size_t>(k)].dim() != da)
        throw DimensionError("pointer states on different spaces");
      p.col(k) = pointer_states_[static_cast<std::size_t>(k)].amplitudes();
    }
    if (detail::orthonormality_residual(p) > tol.orth)
      throw ValidationError("pointer states are not orthonormal");
    if (apparatus_init_.dim() != da)
      throw DimensionError("apparatus initial vector dimension mismatch");

    if (static_cast<int>(end_states_.size()) != outcomes)
      throw ValidationError("one end-state family per outcome required");
    for (int k = 0; k < outcomes; ++k) {
      const auto& family = end_states_[static_cast<std::size_t>(k)];
      if (static_cast<int>(family.size()) != system_.multiplicity(k))
        throw ValidationError("end-state family size must match eigenvalue multiplicity");
      Matrix f(system_.space().dim(), family.size());
      for (std::size_t l = 0; l < family.size(); ++l) {
        if (family[l].dim() != system_.space().dim())
          throw DimensionError("end state dimension mismatch");
        f.col(static_cast<Eigen::Index>(l)) = family[l].amplitudes();
      }
      if (detail::orthonormality_residual(f) > tol.orth)
        throw ValidationError("end states for one outcome must be orthonormal");
    }
  }

  // Pointer given as a nondegenerate sharp observable; its eigenvalues must
  // coincide with the system observable's outcome values.
  PremeasurementSetup(SharpObservable system_observable, const SharpObservable& pointer,
                      StateVector apparatus_init,
                      std::vector<std::vector<StateVector>> end_states,
                      const Tolerances& tol = tols())
      : PremeasurementSetup(checked_against_pointer(std::move(system_observable), pointer),
                            extract_pointer_states(pointer), std::move(apparatus_init),
                            std::move(end_states), tol) {}

  // End states equal to the eigenvectors themselves.
  static PremeasurementSetup von_neumann(SharpObservable system_observable,
                                         std::vector<StateVector> pointer_states,
                                         StateVector apparatus_init,
                                         const Tolerances& tol = tols()) {
    std::vector<std::vector<StateVector>> ends;
    for (int k = 0; k < system_observable.outcome_count(); ++k)
      ends.push_back(system_observable.eigenvectors(k));
    return PremeasurementSetup(std::move(system_observable), std::move(pointer_states),
                               std::move(apparatus_init), std::move(ends), tol);
  }

  const SharpObservable& system_observable() const { return system_; }
  int outcome_count() const { return system_.outcome_count(); }
  const HilbertSpace& system_space() const { return system_.space(); }
  const HilbertSpace& apparatus_space() const { return apparatus_init_.space(); }
  const StateVector& pointer_state(int k) const {
    return pointer_states_.at(static_cast<std::size_t>(k));
  }
  const std::vector<StateVector>& pointer_states() const { return pointer_states_; }
  Operator pointer_projection(int k) const { return projector(pointer_state(k)); }
  const StateVector& apparatus_init() const { return apparatus_init_; }
  const StateVector& end_state(int k, int l) const {
    return end_states_.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(l));
  }
  const std::vector<std::vector<StateVector>>& end_states() const { return end_states_; }

  HilbertSpace composite_space() const {
    return tensor_space(system_space(), apparatus_space());
  }

  bool is_von_neumann(const Tolerances& tol = tols()) const {
    for (int k = 0; k < outcome_count(); ++k)
      for (int l = 0; l < system_.multiplicity(k); ++l) {
        Vector diff = end_state(k, l).amplitudes() -
                      system_.eigenvectors(k)[static_cast<std::size_t>(l)].amplitudes();
        if (diff.cwiseAbs().maxCoeff() > tol.eq) return false;
      }
    return true;
  }

  // max |<phi'_kl|phi'_mn> - delta_km delta_ln| over the whole family; the
  // objectification gate requires this within the orthonormality tolerance.
  double end_state_cross_residual() const {
    double worst = 0.0;
    for (int k = 0; k < outcome_count(); ++k)
      for (int l = 0; l < system_.multiplicity(k); ++l)
        for (int m = 0; m < outcome_count(); ++m)
          for (int n = 0; n < system_.multiplicity(m); ++n) {
            const Complex ip = end_state(k, l).inner(end_state(m, n));
            const double want = (k == m && l == n) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(ip - want));
          }
    return worst;
  }

 private:
  static SharpObservable checked_against_pointer(SharpObservable system,
                                                 const SharpObservable& pointer) {
    if (!pointer.nondegenerate()) throw ValidationError("pointer observable must be nondegenerate");
    if (pointer.eigenvalues() != system.eigenvalues())
      throw ValidationError("pointer and system outcome values must coincide");
    return system;
  }

  static std::vector<StateVector> extract_pointer_states(const SharpObservable& pointer) {
    std::vector<StateVector> states;
    for (int k = 0; k < pointer.outcome_count(); ++k)
      states.push_back(pointer.eigenvectors(k).front());
    return states;
  }

  SharpObservable system_;
  std::vector<StateVector> pointer_states_;
  StateVector apparatus_init_;
  std::vector<std::vector<StateVector>> end_states_;
};

// The coupling unitary, as the deterministic completion of the defining map.
inline Operator build_coupling(const PremeasurementSetup& setup, const Tolerances& tol = tols()) {
  std::vector<StateVector> ins, outs;
  for (int k = 0; k < setup.outcome_count(); ++k)
    for (int l = 0; l < setup.system_observable().multiplicity(k); ++l) {
      ins.push_back(tensor(setup.system_observable().eigenvectors(k)[static_cast<std::size_t>(l)],
                           setup.apparatus_init()));
      outs.push_back(tensor(setup.end_state(k, l), setup.pointer_state(k)));
    }
  return complete_unitary(setup.composite_space(), ins, outs, tol);
}

struct PremeasurementResult {
  StateVector final_vector;                            // on system (x) apparatus
  std::vector<double> probabilities;                   // one per outcome
  std::vector<std::optional<StateVector>> conditional_states;  // undefined at p = 0
  std::vector<StateVector> pointer_states;
  double end_state_cross_residual = 0.0;
};

// Closed-form premeasurement of a vector state: amplitudes c_kl onto the
// eigenvectors, outcome probabilities, normalized conditional states and the
// composite final vector sum_k sqrt(p_k) Phi_k (x) psi_k.
inline PremeasurementResult premeasure(const PremeasurementSetup& setup, const StateVector& phi,
                                       const Tolerances& tol = tols()) {
  if (phi.dim() != setup.system_space().dim())
    throw DimensionError("input state dimension mismatch");
  const int outcomes = setup.outcome_count();
  const std::int64_t ds = setup.system_space().dim();
  const std::int64_t da = setup.apparatus_space().dim();

  std::vector<double> probabilities(static_cast<std::size_t>(outcomes), 0.0);
  std::vector<std::optional<StateVector>> conditionals(static_cast<std::size_t>(outcomes));
  Vector joint = Vector::Zero(ds * da);

  for (int k = 0; k < outcomes; ++k) {
    Vector branch = Vector::Zero(ds);
    for (int l = 0; l < setup.system_observable().multiplicity(k); ++l) {
      const Complex c =
          setup.system_observable().eigenvectors(k)[static_cast<std::size_t>(l)].amplitudes().dot(
              phi.amplitudes());
      branch += c * setup.end_state(k, l).amplitudes();
    }
    const double p = branch.squaredNorm();
    if (p <= kZeroProbability) {
      probabilities[static_cast<std::size_t>(k)] = 0.0;
      continue;
    }
    probabilities[static_cast<std::size_t>(k)] = p;
    Vector phik = branch / std::sqrt(p);
    conditionals[static_cast<std::size_t>(k)] =
        StateVector(setup.system_space(), phik, tol);
    joint += std::sqrt(p) * detail::kron(phik, setup.pointer_state(k).amplitudes());
  }

  StateVector composite(tensor_space(setup.system_space(), setup.apparatus_space()),
                        std::move(joint), tol);
  return PremeasurementResult{std::move(composite), std::move(probabilities),
                              std::move(conditionals), setup.pointer_states(),
                              setup.end_state_cross_residual()};
}

// Reduced apparatus state after the coupling,
//   sum_kl sqrt(p_k p_l) <Phi_k|Phi_l> |psi_k><psi_l| .
inline StateOperator apparatus_state(const PremeasurementResult& result,
                                     const Tolerances& tol = tols()) {
  const HilbertSpace& space = result.pointer_states.front().space();
  Matrix m = Matrix::Zero(space.dim(), space.dim());
  const int outcomes = static_cast<int>(result.probabilities.size());
  for (int k = 0; k < outcomes; ++k) {
    if (!result.conditional_states[static_cast<std::size_t>(k)]) continue;
    for (int l = 0; l < outcomes; ++l) {
      if (!result.conditional_states[static_cast<std::size_t>(l)]) continue;
      const Complex overlap = result.conditional_states[static_cast<std::size_t>(k)]->inner(
          *result.conditional_states[static_cast<std::size_t>(l)]);
      const double coeff = std::sqrt(result.probabilities[static_cast<std::size_t>(k)] *
                                     result.probabilities[static_cast<std::size_t>(l)]);
      m += coeff * overlap *
           (result.pointer_states[static_cast<std::size_t>(k)].amplitudes() *
            result.pointer_states[static_cast<std::size_t>(l)].amplitudes().adjoint());
    }
  }
  return StateOperator(Operator(space, std::move(m)), tol);
}

struct ReproducibilityReport {
  double max_residual = 0.0;
  std::vector<double> per_outcome;

  bool pass(double tol) const { return max_residual <= tol; }
};

// Compares the outcome distribution of the system observable in T with the
// pointer distribution in the reduced apparatus state after the coupling.
inline ReproducibilityReport probability_reproducibility(const PremeasurementSetup& setup,
                                                         const StateOperator& t,
                                                         const Tolerances& tol = tols()) {
  if (t.dim() != setup.system_space().dim())
    throw DimensionError("input state dimension mismatch");
  Operator u = build_coupling(setup, tol);
  StateOperator joint = tensor(t, StateOperator::pure(setup.apparatus_init(), tol));
  Matrix evolved = u.matrix() * joint.matrix() * u.matrix().adjoint();
  StateOperator final(Operator(joint.space(), std::move(evolved)), tol);

  std::vector<int> keep;
  const int system_factors = setup.system_space().factor_count();
  for (int i = 0; i < setup.apparatus_space().factor_count(); ++i)
    keep.push_back(system_factors + i);
  StateOperator reduced = partial_trace(final, std::span<const int>(keep), tol);

  ReproducibilityReport report;
  for (int k = 0; k < setup.outcome_count(); ++k) {
    const double lhs = expectation(t, setup.system_observable().projection(k)).real();
    const double rhs = expectation(reduced, setup.pointer_projection(k)).real();
    const double r = std::abs(lhs - rhs);
    report.per_outcome.push_back(r);
    report.max_residual = std::max(report.max_residual, r);
  }
  return report;
}

inline ReproducibilityReport probability_reproducibility(const PremeasurementSetup& setup,
                                                         const StateVector& phi,
                                                         const Tolerances& tol = tols()) {
  return probability_reproducibility(setup, StateOperator::pure(phi, tol), tol);
}

struct ObjectificationVerdict {
  bool criterion_a = false;  // reduced state equals the diagonal pointer mixture
  bool criterion_b = false;  // and that mixture is its gemenge structure
  double residual_a = 0.0;
};

namespace detail {

inline Matrix expected_pointer_mixture(const PremeasurementResult& result) {
  const HilbertSpace& space = result.pointer_states.front().space();
  Matrix expect = Matrix::Zero(space.dim(), space.dim());
  for (std::size_t k = 0; k < result.probabilities.size(); ++k)
    expect += result.probabilities[k] * (result.pointer_states[k].amplitudes() *
                                         result.pointer_states[k].amplitudes().adjoint());
  return expect;
}

}  // namespace detail

// Criterion (a): the reduced apparatus operator equals the convex pointer
// mixture with the outcome weights. A bare state operator carries no
// preparation provenance, so criterion (b) is never met by it.
inline ObjectificationVerdict objectification_check(const PremeasurementResult& result,
                                                    const StateOperator& reduced,
                                                    const Tolerances& tol = tols()) {
  ObjectificationVerdict v;
  v.residual_a = op_norm_diff(reduced.matrix(), detail::expected_pointer_mixture(result));
  v.criterion_a = v.residual_a <= tol.eq;
  v.criterion_b = false;
  return v;
}

// Criterion (b) additionally requires the value to be a gemenge whose branch
// list is exactly the pointer mixture and whose provenance is non-trivial.
inline ObjectificationVerdict objectification_check(const PremeasurementResult& result,
                                                    const GemengeState& reduced,
                                                    const Tolerances& tol = tols()) {
  ObjectificationVerdict v;
  v.residual_a = op_norm_diff(reduced.as_operator(tol).matrix(),
                              detail::expected_pointer_mixture(result));
  v.criterion_a = v.residual_a <= tol.eq;

  std::vector<GemengeBranch> expected;
  for (std::size_t k = 0; k < result.probabilities.size(); ++k)
    if (result.probabilities[k] > kZeroProbability)
      expected.push_back({result.probabilities[k],
                          StateOperator::pure(result.pointer_states[k], tol)});
  GemengeState want = GemengeState::declared(std::move(expected), tol);
  v.criterion_b = approx_equal(reduced, want, tol.eq) && !reduced.is_trivial();
  return v;
}

// The operation-valued measure of the premeasurement in Kraus form,
// K_k = sum_l |phi'_kl><phi_kl|.
class StateTransformer {
 public:
  StateTransformer(std::vector<Operator> kraus, std::vector<double> outcome_values,
                   const Tolerances& tol = tols())
      : kraus_(std::move(kraus)), outcome_values_(std::move(outcome_values)) {
    if (kraus_.empty() || kraus_.size() != outcome_values_.size())
      throw ValidationError("one Kraus operator per outcome required");
    if (completeness_residual() > tol.eq)
      throw ValidationError("Kraus family is not complete");
  }

  int outcome_count() const { return static_cast<int>(kraus_.size()); }
  const Operator& kraus(int k) const { return kraus_.at(static_cast<std::size_t>(k)); }
  double outcome_value(int k) const { return outcome_values_.at(static_cast<std::size_t>(k)); }

  double completeness_residual() const {
    Matrix sum = Matrix::Zero(kraus_.front().dim(), kraus_.front().dim());
    for (const Operator& k : kraus_) sum += k.matrix().adjoint() * k.matrix();
    return op_norm_diff(sum, Matrix::Identity(sum.rows(), sum.cols()));
  }

  // sum_{k in X} K_k M K_k^+ ; unnormalized, trace = outcome probability.
  Operator apply(std::span<const int> outcome_subset, const Operator& m) const {
    Matrix sum = Matrix::Zero(m.dim(), m.dim());
    for (int k : outcome_subset) {
      if (k < 0 || k >= outcome_count()) throw ValidationError("unknown outcome index");
      sum += kraus_[static_cast<std::size_t>(k)].matrix() * m.matrix() *
             kraus_[static_cast<std::size_t>(k)].matrix().adjoint();
    }
    return Operator(m.space(), std::move(sum));
  }

  Operator apply(std::span<const int> outcome_subset, const StateOperator& t) const {
    return apply(outcome_subset, t.as_operator());
  }

 private:
  std::vector<Operator> kraus_;
  std::vector<double> outcome_values_;
};

inline StateTransformer state_transformer(const PremeasurementSetup& setup,
                                          const Tolerances& tol = tols()) {
  std::vector<Operator> kraus;
  std::vector<double> values;
  for (int k = 0; k < setup.outcome_count(); ++k) {
    Matrix m = Matrix::Zero(setup.system_space().dim(), setup.system_space().dim());
    for (int l = 0; l < setup.system_observable().multiplicity(k); ++l)
      m += setup.end_state(k, l).amplitudes() *
           setup.system_observable().eigenvectors(k)[static_cast<std::size_t>(l)].amplitudes().adjoint();
    kraus.emplace_back(setup.system_space(), std::move(m));
    values.push_back(setup.system_observable().eigenvalue(k));
  }
  return StateTransformer(std::move(kraus), std::move(values), tol);
}

struct RepeatabilityReport {
  double max_residual = 0.0;              // |tr I(Y)(I(X)(T)) - tr I(Y∩X)(T)|
  double kraus_idempotence_residual = 0.0;  // max ||K_l K_k - delta_kl K_k||
  bool von_neumann = false;

  bool pass(double tol) const { return max_residual <= tol; }
};

// Samples the repeatability identity. Outcome subsets are exhaustive for up
// to 4 outcomes and random (50 pairs) beyond; states are 20 seeded random
// mixed states.
inline RepeatabilityReport check_repeatability(const PremeasurementSetup& setup,
                                               std::uint64_t seed,
                                               const Tolerances& tol = tols()) {
  StateTransformer st = state_transformer(setup, tol);
  const int outcomes = st.outcome_count();

  auto subset_from_mask = [&](unsigned mask) {
    std::vector<int> s;
    for (int k = 0; k < outcomes; ++k)
      if (mask & (1u << k)) s.push_back(k);
    return s;
  };

  std::vector<std::pair<unsigned, unsigned>> pairs;
  if (outcomes <= 4) {
    const unsigned total = 1u << outcomes;
    for (unsigned x = 0; x < total; ++x)
      for (unsigned y = 0; y < total; ++y) pairs.emplace_back(x, y);
  } else {
    Rng rng(seed);
    std::uniform_int_distribution<unsigned> mask(0, (1u << outcomes) - 1);
    for (int i = 0; i < 50; ++i) pairs.emplace_back(mask(rng), mask(rng));
  }

  Rng state_rng(seed + 1);
  std::vector<StateOperator> samples;
  for (int i = 0; i < 20; ++i)
    samples.push_back(random_state_operator(state_rng, setup.system_space()));

  RepeatabilityReport report;
  for (const auto& [mx, my] : pairs) {
    std::vector<int> x = subset_from_mask(mx);
    std::vector<int> y = subset_from_mask(my);
    std::vector<int> xy = subset_from_mask(mx & my);
    for (const StateOperator& t : samples) {
      const double lhs = st.apply(y, st.apply(x, t.as_operator())).matrix().trace().real();
      const double rhs = st.apply(xy, t.as_operator()).matrix().trace().real();
      report.max_residual = std::max(report.max_residual, std::abs(lhs - rhs));
    }
  }

  for (int l = 0; l < outcomes; ++l)
    for (int k = 0; k < outcomes; ++k) {
      Matrix prod = st.kraus(l).matrix() * st.kraus(k).matrix();
      if (l == k) prod -= st.kraus(k).matrix();
      report.kraus_idempotence_residual =
          std::max(report.kraus_idempotence_residual, op_norm(prod));
    }

  report.von_neumann = setup.is_von_neumann(tol);
  return report;
}

}  // namespace gemengelab
