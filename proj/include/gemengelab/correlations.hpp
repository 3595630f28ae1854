#pragma once

// Correlation calculus for bipartite states: normalized correlations,
// Schmidt-basis projector and phase operators, the dephasing that erases
// phase correlations, and coefficient reconstruction from correlation data.

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "gemengelab/hilbert.hpp"

namespace gemengelab {

namespace detail {

struct MomentSet {
  double mean_left;
  double mean_right;
  double mean_joint;
  double dev_left;
  double dev_right;
};

inline MomentSet correlation_moments(const Operator& o, const Operator& oprime,
                                     const StateOperator& state) {
  const std::int64_t dl = o.dim();
  const std::int64_t dr = oprime.dim();
  if (state.dim() != dl * dr) throw DimensionError("state does not match observable pair");
  Matrix idl = Matrix::Identity(dl, dl);
  Matrix idr = Matrix::Identity(dr, dr);
  Matrix left = kron(o.matrix(), idr);
  Matrix right = kron(idl, oprime.matrix());
  Matrix joint = kron(o.matrix(), oprime.matrix());
  MomentSet ms{};
  ms.mean_left = (state.matrix() * left).trace().real();
  ms.mean_right = (state.matrix() * right).trace().real();
  ms.mean_joint = (state.matrix() * joint).trace().real();
  const double sq_left = (state.matrix() * Matrix(left * left)).trace().real();
  const double sq_right = (state.matrix() * Matrix(right * right)).trace().real();
  ms.dev_left = std::sqrt(std::max(0.0, sq_left - ms.mean_left * ms.mean_left));
  ms.dev_right = std::sqrt(std::max(0.0, sq_right - ms.mean_right * ms.mean_right));
  return ms;
}

}  // namespace detail

// (<OO'> - <O><O'>) / (dev O * dev O'). Undefined below the variance floor;
// signaled, never NaN.
inline double normalized_correlation(const Operator& o, const Operator& oprime,
                                     const StateOperator& state, const Tolerances& tol = tols()) {
  detail::MomentSet ms = detail::correlation_moments(o, oprime, state);
  if (ms.dev_left <= tol.var || ms.dev_right <= tol.var)
    throw ZeroVarianceError("correlation undefined for (near-)constant observable");
  return (ms.mean_joint - ms.mean_left * ms.mean_right) / (ms.dev_left * ms.dev_right);
}

inline double normalized_correlation(const Operator& o, const Operator& oprime,
                                     const StateVector& phi, const Tolerances& tol = tols()) {
  return normalized_correlation(o, oprime, StateOperator::pure(phi, tol), tol);
}

// Projectors onto the k-th Schmidt pair, (|l_k><l_k|, |r_k><r_k|).
inline std::pair<Operator, Operator> schmidt_projectors(const SchmidtForm& form, int k) {
  if (k < 0 || k >= form.rank()) throw DimensionError("Schmidt index out of range");
  Vector l = form.left_basis.col(k);
  Vector r = form.right_basis.col(k);
  return {Operator(form.left, l * l.adjoint()), Operator(form.right, r * r.adjoint())};
}

// The bounded self-adjoint pair
//   e^{i a}|l_k><l_l| + e^{-i a}|l_l><l_k|  and its primed analogue.
inline std::pair<Operator, Operator> phase_operators(const SchmidtForm& form, int k, int l,
                                                     double alpha, double beta) {
  if (k == l) throw ValidationError("phase operators need two distinct indices");
  if (k < 0 || k >= form.rank() || l < 0 || l >= form.rank())
    throw DimensionError("Schmidt index out of range");
  const Complex ea = std::polar(1.0, alpha);
  const Complex eb = std::polar(1.0, beta);
  Vector lk = form.left_basis.col(k), ll = form.left_basis.col(l);
  Vector rk = form.right_basis.col(k), rl = form.right_basis.col(l);
  Matrix left = ea * (lk * ll.adjoint()) + std::conj(ea) * (ll * lk.adjoint());
  Matrix right = eb * (rk * rl.adjoint()) + std::conj(eb) * (rl * rk.adjoint());
  return {Operator(form.left, std::move(left)), Operator(form.right, std::move(right))};
}

// sum_k |c_k|^2 P_k (x) P'_k: keeps the pairwise projector correlations of
// the vector state and erases every phase correlation.
inline StateOperator dephased_operator(const SchmidtForm& form, const Tolerances& tol = tols()) {
  const std::int64_t dl = form.left.dim();
  const std::int64_t dr = form.right.dim();
  Matrix m = Matrix::Zero(dl * dr, dl * dr);
  for (int k = 0; k < form.rank(); ++k) {
    Vector l = form.left_basis.col(k);
    Vector r = form.right_basis.col(k);
    m += (form.coefficients(k) * form.coefficients(k)) *
         detail::kron(Matrix(l * l.adjoint()), Matrix(r * r.adjoint()));
  }
  // Renormalize away the truncation loss of the Schmidt form.
  m /= m.trace().real();
  std::vector<std::int64_t> dims = form.left.factor_dims();
  dims.insert(dims.end(), form.right.factor_dims().begin(), form.right.factor_dims().end());
  return StateOperator(
      Operator(HilbertSpace::from_factors(std::move(dims), form.left.label()), std::move(m)), tol);
}

// Correlation data sufficient to reconstruct the coefficients: projector
// means plus the phase correlations at combined phase 0 and pi/2 for every
// index pair. Entries are NaN where the correlation is undefined.
struct CorrelationSamples {
  std::vector<double> projector_means;  // <P_k>
  Eigen::MatrixXd rho_zero;             // alpha + beta = 0, upper triangle
  Eigen::MatrixXd rho_quarter;          // alpha + beta = pi/2, upper triangle
};

inline CorrelationSamples sample_correlations(const SchmidtForm& form, const StateVector& phi,
                                              const Tolerances& tol = tols()) {
  const int r = form.rank();
  StateOperator state = StateOperator::pure(phi, tol);
  CorrelationSamples s;
  s.projector_means.resize(static_cast<std::size_t>(r));
  s.rho_zero = Eigen::MatrixXd::Constant(r, r, std::numeric_limits<double>::quiet_NaN());
  s.rho_quarter = s.rho_zero;

  for (int k = 0; k < r; ++k) {
    Matrix pk = schmidt_projectors(form, k).first.matrix();
    Matrix full = detail::kron(pk, Matrix(Matrix::Identity(form.right.dim(), form.right.dim())));
    s.projector_means[static_cast<std::size_t>(k)] =
        (state.matrix() * full).trace().real();
  }
  for (int k = 0; k < r; ++k)
    for (int l = k + 1; l < r; ++l) {
      auto value = [&](double alpha, double beta) {
        auto [a, b] = phase_operators(form, k, l, alpha, beta);
        try {
          return normalized_correlation(a, b, state, tol);
        } catch (const ZeroVarianceError&) {
          return std::numeric_limits<double>::quiet_NaN();
        }
      };
      s.rho_zero(k, l) = value(0.0, 0.0);
      s.rho_quarter(k, l) = value(std::numbers::pi / 2.0, 0.0);
    }
  return s;
}

struct ReconstructionResult {
  std::vector<Complex> coefficients;  // global phase fixed: first sound index real positive
  std::vector<int> flagged;           // indices with unrecoverable phase
};

// Inverts the sampled correlations: moduli from the projector means, relative
// phases from the two phase samples chained off the first sound index.
inline ReconstructionResult reconstruct_coefficients(const CorrelationSamples& s,
                                                     const Tolerances& tol = tols()) {
  const int r = static_cast<int>(s.projector_means.size());
  ReconstructionResult out;
  out.coefficients.assign(static_cast<std::size_t>(r), Complex(0.0, 0.0));

  std::vector<double> moduli(static_cast<std::size_t>(r));
  for (int k = 0; k < r; ++k)
    moduli[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, s.projector_means[static_cast<std::size_t>(k)]));

  int anchor = -1;
  for (int k = 0; k < r; ++k) {
    if (moduli[static_cast<std::size_t>(k)] <= tol.var) {
      out.flagged.push_back(k);
    } else if (anchor < 0) {
      anchor = k;
    }
  }
  if (anchor < 0) throw ValidationError("no coefficient above the variance floor");

  for (int k = 0; k < r; ++k) {
    const double ck = moduli[static_cast<std::size_t>(k)];
    if (ck <= tol.var) {
      out.coefficients[static_cast<std::size_t>(k)] = ck;  // modulus only, phase unrecoverable
      continue;
    }
    if (k == anchor) {
      out.coefficients[static_cast<std::size_t>(k)] = ck;
      continue;
    }
    const int lo = std::min(anchor, k), hi = std::max(anchor, k);
    const double denom = moduli[static_cast<std::size_t>(lo)] * moduli[static_cast<std::size_t>(lo)] +
                         moduli[static_cast<std::size_t>(hi)] * moduli[static_cast<std::size_t>(hi)];
    // rho_0 = 2 Re(c*_lo c_hi)/denom, rho_{pi/2} = -2 Im(c*_lo c_hi)/denom.
    const Complex cross(0.5 * denom * s.rho_zero(lo, hi), -0.5 * denom * s.rho_quarter(lo, hi));
    Complex value;
    if (lo == anchor) {
      value = cross / moduli[static_cast<std::size_t>(anchor)];  // c_hi, anchor real positive
    } else {
      value = std::conj(cross) / moduli[static_cast<std::size_t>(anchor)];  // c_lo from c*_lo c_anchor
    }
    // Keep the sampled modulus; the phase carries the new information.
    if (std::abs(value) > 0.0) value *= ck / std::abs(value);
    out.coefficients[static_cast<std::size_t>(k)] = value;
  }
  return out;
}

struct ErasureCheck {
  double projector_corr_phi_residual = 0.0;  // max_k |rho(P_k,P'_k,Phi) - 1|
  double projector_corr_t_residual = 0.0;    // same in the dephased state
  double phase_corr_phi_residual = 0.0;      // max grid deviation from the closed form
  double phase_corr_t_max = 0.0;             // max |rho| in the dephased state

  bool pass(double tol) const {
    return projector_corr_phi_residual <= tol && projector_corr_t_residual <= tol &&
           phase_corr_phi_residual <= tol && phase_corr_t_max <= tol;
  }
};

// Evaluates the correlation summary on a vector state and its dephasing:
// projector correlations survive at exactly 1, phase correlations match the
// closed form in the vector state and vanish after dephasing.
inline ErasureCheck erasure_check(const SchmidtForm& form, const StateVector& phi,
                                  int grid = 8, const Tolerances& tol = tols()) {
  ErasureCheck out;
  StateOperator pure = StateOperator::pure(phi, tol);
  StateOperator dephased = dephased_operator(form, tol);

  for (int k = 0; k < form.rank(); ++k) {
    const double c = form.coefficients(k);
    if (c * (1.0 - c * c) <= tol.var) continue;  // boundary: correlation undefined
    auto [pk, pkp] = schmidt_projectors(form, k);
    out.projector_corr_phi_residual =
        std::max(out.projector_corr_phi_residual,
                 std::abs(normalized_correlation(pk, pkp, pure, tol) - 1.0));
    out.projector_corr_t_residual =
        std::max(out.projector_corr_t_residual,
                 std::abs(normalized_correlation(pk, pkp, dephased, tol) - 1.0));
  }

  for (int k = 0; k < form.rank(); ++k)
    for (int l = k + 1; l < form.rank(); ++l) {
      const Complex ck = form.coefficients(k), cl = form.coefficients(l);
      const double denom = std::norm(ck) + std::norm(cl);
      if (std::sqrt(denom) <= tol.var) continue;
      for (int a = 0; a < grid; ++a)
        for (int b = 0; b < grid; ++b) {
          const double alpha = 2.0 * std::numbers::pi * a / grid;
          const double beta = 2.0 * std::numbers::pi * b / grid;
          auto [pa, pb] = phase_operators(form, k, l, alpha, beta);
          const Complex phase = std::polar(1.0, alpha + beta);
          const double closed =
              ((phase * std::conj(ck) * cl + std::conj(phase) * std::conj(cl) * ck) / denom).real();
          out.phase_corr_phi_residual =
              std::max(out.phase_corr_phi_residual,
                       std::abs(normalized_correlation(pa, pb, pure, tol) - closed));
          out.phase_corr_t_max = std::max(
              out.phase_corr_t_max, std::abs(normalized_correlation(pa, pb, dephased, tol)));
        }
    }
  return out;
}

}  // namespace gemengelab
