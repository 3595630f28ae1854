#pragma once

// An array of ideal ionization detectors as a premeasurement apparatus:
// trigger-state construction, the orthonormal-end-state gate a true
// registration must satisfy, and the deterministic non-unitary transform
// that replaces the entangled post-coupling vector by the gemenge of
// correlated branch products.

#include <string>
#include <utility>
#include <vector>

#include "gemengelab/gemenge.hpp"
#include "gemengelab/premeasurement.hpp"

namespace gemengelab {

enum class DetectorMode { absorbing, non_absorbing };

inline const char* to_string(DetectorMode m) {
  return m == DetectorMode::absorbing ? "absorbing" : "non-absorbing";
}

// N ideal detectors (efficiency fixed at 1), each with an ionization degree
// of freedom of `ion_levels` states. The shared excitation amplitudes a_n
// must vanish on the un-ionized level so that trigger states are mutually
// orthogonal and distinguishable from the quiet state.
class DetectorArrayModel {
 public:
  DetectorArrayModel(int detector_count, int ion_levels, std::vector<Complex> amplitudes,
                     const Tolerances& tol = tols())
      : detector_count_(detector_count),
        ion_levels_(ion_levels),
        amplitudes_(std::move(amplitudes)) {
    if (detector_count_ < 1) throw ValidationError("detector array needs at least one detector");
    if (ion_levels_ < 2) throw ValidationError("ionization needs at least two levels");
    if (static_cast<int>(amplitudes_.size()) != ion_levels_)
      throw ValidationError("one amplitude per ionization level required");
    double total = 0.0;
    for (const Complex& a : amplitudes_) total += std::norm(a);
    if (std::abs(total - 1.0) > tol.norm)
      throw ValidationError("excitation amplitudes must be normalized");
    if (std::abs(amplitudes_.front()) > tol.norm)
      throw ValidationError("excitation amplitude on the un-ionized level must vanish");
  }

  int detector_count() const { return detector_count_; }
  int ion_levels() const { return ion_levels_; }
  const std::vector<Complex>& amplitudes() const { return amplitudes_; }

  // Detectors are ideal: a crossing system always responds.
  double efficiency() const { return 1.0; }

  HilbertSpace per_detector_space() const { return HilbertSpace(ion_levels_, "ion"); }

  HilbertSpace array_space() const {
    std::vector<std::int64_t> dims(static_cast<std::size_t>(detector_count_), ion_levels_);
    return HilbertSpace::from_factors(std::move(dims), "A");
  }

 private:
  int detector_count_;
  int ion_levels_;
  std::vector<Complex> amplitudes_;
};

// The perfectly un-ionized array state.
inline StateVector unexcited_state(const DetectorArrayModel& model) {
  return StateVector::basis_state(model.array_space(), 0);
}

// psi_k: detector k carries the shared excitation superposition, every other
// detector stays un-ionized. Mutually orthogonal by the amplitude convention.
inline std::vector<StateVector> trigger_states(const DetectorArrayModel& model) {
  const HilbertSpace one = model.per_detector_space();
  StateVector quiet = StateVector::basis_state(one, 0);
  Vector excited_amp = Vector::Zero(model.ion_levels());
  for (int n = 0; n < model.ion_levels(); ++n)
    excited_amp(n) = model.amplitudes()[static_cast<std::size_t>(n)];
  StateVector excited(one, std::move(excited_amp));

  std::vector<StateVector> states;
  for (int k = 0; k < model.detector_count(); ++k) {
    StateVector acc = (k == 0) ? excited : quiet;
    for (int j = 1; j < model.detector_count(); ++j)
      acc = tensor(acc, (j == k) ? excited : quiet);
    states.push_back(StateVector(model.array_space(), acc.amplitudes()));
  }
  return states;
}

// Assembles the premeasurement setup whose pointer states are the trigger
// states and whose apparatus starts un-ionized. The end-state family must be
// orthonormal across all outcomes (the gate for a true registration);
// omitted, it defaults to the eigenvectors themselves.
inline PremeasurementSetup build_detector_setup(
    const DetectorArrayModel& model, const SharpObservable& system_observable,
    std::vector<std::vector<StateVector>> end_states, const Tolerances& tol = tols()) {
  if (system_observable.outcome_count() != model.detector_count())
    throw ValidationError("outcome count must equal the detector count");
  PremeasurementSetup setup(system_observable, trigger_states(model), unexcited_state(model),
                            std::move(end_states), tol);
  if (setup.end_state_cross_residual() > tol.orth)
    throw ValidationError("end states must be orthonormal across all outcomes");
  return setup;
}

inline PremeasurementSetup build_detector_setup(const DetectorArrayModel& model,
                                                const SharpObservable& system_observable,
                                                const Tolerances& tol = tols()) {
  std::vector<std::vector<StateVector>> ends;
  for (int k = 0; k < system_observable.outcome_count(); ++k)
    ends.push_back(system_observable.eigenvectors(k));
  return build_detector_setup(model, system_observable, std::move(ends), tol);
}

struct Rule2Output {
  GemengeState gemenge;  // on system (x) array space
  DetectorMode mode;
  // Absorbing detectors: the system factor of each branch only marks that
  // the system was lost inside that detector; it is not a prepared state.
  bool system_factor_symbolic = false;
  // Non-absorbing detectors: each branch releases the conditional system
  // state as a fresh preparation, correlated with the firing detector.
  std::vector<std::pair<int, StateVector>> released;  // (outcome index, state)
};

// The deterministic non-unitary replacement of the post-coupling vector by
// the gemenge of correlated branch products
//   sum_k p_k |Phi_k><Phi_k| (x) |psi_k><psi_k| .
// Requires the orthonormal-end-state gate of the originating setup.
inline Rule2Output rule2_transform(const PremeasurementResult& result,
                                   const DetectorArrayModel& model, DetectorMode mode,
                                   const Tolerances& tol = tols()) {
  if (result.end_state_cross_residual > tol.orth)
    throw ValidationError("end states violate the orthonormality gate");
  if (static_cast<int>(result.probabilities.size()) != model.detector_count())
    throw DimensionError("result does not match the detector array");

  std::vector<GemengeBranch> branches;
  std::vector<std::pair<int, StateVector>> released;
  for (std::size_t k = 0; k < result.probabilities.size(); ++k) {
    const double p = result.probabilities[k];
    if (p <= kZeroProbability) continue;
    const StateVector& phik = *result.conditional_states[k];
    branches.push_back(
        {p, tensor(StateOperator::pure(phik, tol),
                   StateOperator::pure(result.pointer_states[k], tol))});
    if (mode == DetectorMode::non_absorbing)
      released.emplace_back(static_cast<int>(k), phik);
  }

  GemengeState gemenge = GemengeState::rule2_generated(std::move(branches), tol);
  return Rule2Output{std::move(gemenge), mode, mode == DetectorMode::absorbing,
                     std::move(released)};
}

struct ScatterOutput {
  StateVector system_state;
  StateOperator target_state;
};

// A scattering that leaves the system and the target unentangled,
//   |phi><phi| (x) T  ->  |phi'><phi'| (x) T' .
// The corrections for separation-status changes are trivial here: the output
// already has the correlated-product form with a trivial gemenge structure.
// Couplings whose output stays entangled are rejected.
inline ScatterOutput no_entanglement_scatter(const StateVector& phi, const StateOperator& target,
                                             const Operator& coupling,
                                             const Tolerances& tol = tols()) {
  if (!coupling.is_unitary(tol.eq)) throw ValidationError("coupling must be unitary");
  StateOperator joint = tensor(StateOperator::pure(phi, tol), target);
  if (coupling.dim() != joint.dim()) throw DimensionError("coupling dimension mismatch");
  Matrix evolved = coupling.matrix() * joint.matrix() * coupling.matrix().adjoint();
  StateOperator out(Operator(joint.space(), std::move(evolved)), tol);

  const int system_factors = phi.space().factor_count();
  const double residual = product_form_residual(out, system_factors);
  if (residual > tol.eq)
    throw FactorizationError("coupling entangles the systems (residual " +
                             std::to_string(residual) + ")");

  std::vector<int> keep_sys, keep_target;
  for (int i = 0; i < out.space().factor_count(); ++i)
    (i < system_factors ? keep_sys : keep_target).push_back(i);
  StateOperator sys = partial_trace(out, std::span<const int>(keep_sys), tol);
  StateOperator tgt = partial_trace(out, std::span<const int>(keep_target), tol);

  // The system side must stay pure; its dominant eigenvector is phi'.
  Eigen::SelfAdjointEigenSolver<Matrix> es(sys.matrix());
  const Eigen::Index top = sys.dim() - 1;  // eigenvalues ascending
  if (es.eigenvalues()(top) < 1.0 - tol.eq)
    throw FactorizationError("system output is not a vector state");
  Vector phip = es.eigenvectors().col(top);
  // Deterministic phase: leading nonzero entry real positive.
  for (Eigen::Index i = 0; i < phip.size(); ++i)
    if (std::abs(phip(i)) > 1e-8) {
      phip *= std::abs(phip(i)) / phip(i);
      break;
    }
  return ScatterOutput{StateVector(phi.space(), phip / phip.norm()), std::move(tgt)};
}

}  // namespace gemengelab
