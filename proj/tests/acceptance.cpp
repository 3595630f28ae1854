// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Each criterion pins its tolerance in code; nothing is deferred to
// configuration.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "test_support.hpp"

using namespace gemengelab;
namespace sc = gemengelab::scenario;

namespace {

struct CriterionResult {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<CriterionResult> results;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// [1] 1000 random couplings, mixed inputs, residual <= 1e-8, under 10 s.
void criterion_reproducibility() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20260809);
  std::uniform_int_distribution<int> dim(2, 6);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int ds = dim(rng);
    const int da = dim(rng);
    std::uniform_int_distribution<int> kdist(1, std::min(ds, da));
    PremeasurementSetup setup =
        testsupport::random_setup(rng, ds, da, kdist(rng), rep % 2 == 0);
    StateOperator t = random_state_operator(rng, setup.system_space());
    worst = std::max(worst, probability_reproducibility(setup, t).max_residual);
  }
  const double elapsed = seconds_since(start);
  results.push_back({1, "probability-reproducibility", worst <= 1e-8 && elapsed < 10.0,
                     "max residual " + fmt(worst) + ", 1000 cases, " + fmt(elapsed) + " s"});
}

// [2] Exact presets: no-go gives A/!B, rule2-detector gives A&B with the
// outcome weights within 1e-8.
void criterion_no_go_presets() {
  bool pass = true;
  std::string detail;

  sc::Report nogo = sc::run_scenario(sc::preset("no-go"));
  bool saw = false;
  for (const auto& entry : nogo.json["checks"])
    if (entry["name"] == "objectification") {
      saw = true;
      pass = pass && entry["criterion_a"].get<bool>() && !entry["criterion_b"].get<bool>();
    }
  pass = pass && saw && nogo.all_passed;

  sc::Report rule2 = sc::run_scenario(sc::preset("rule2-detector"));
  saw = false;
  double weight_residual = 1.0;
  for (const auto& entry : rule2.json["checks"]) {
    if (entry["name"] == "objectification") {
      saw = true;
      pass = pass && entry["criterion_a"].get<bool>() && entry["criterion_b"].get<bool>();
    }
    if (entry["name"] == "gemenge-weights") {
      weight_residual = entry["max_residual"].get<double>();
      pass = pass && weight_residual <= 1e-8;
    }
  }
  pass = pass && saw && rule2.all_passed;
  detail = "presets no-go and rule2-detector, weight residual " + fmt(weight_residual);
  results.push_back({2, "objectification-no-go", pass, detail});
}

// [3] Repeatability: von Neumann setups satisfy the identity over exhaustive
// subsets; the frozen rotated counterexample violates it by >= 1e-2.
void criterion_repeatability() {
  Rng rng(424242);
  std::uniform_int_distribution<int> dim(2, 4);
  double worst = 0.0;
  for (int rep = 0; rep < 40; ++rep) {
    const int ds = dim(rng);
    const int da = dim(rng);
    std::uniform_int_distribution<int> kdist(1, std::min(ds, da));
    PremeasurementSetup setup = testsupport::random_setup(rng, ds, da, kdist(rng), true);
    worst = std::max(worst, check_repeatability(setup, 7 + rep).max_residual);
  }

  // Frozen counterexample: end states rotated by pi/4 across the eigenspaces.
  HilbertSpace s(2, "S"), a(2, "A");
  SharpObservable o = SharpObservable::from_basis(
      s, {1.0, -1.0}, {StateVector::basis_state(s, 0), StateVector::basis_state(s, 1)});
  const double c = std::cos(std::numbers::pi / 4.0), sn = std::sin(std::numbers::pi / 4.0);
  Vector e1(2), e2(2);
  e1 << c, sn;
  e2 << -sn, c;
  PremeasurementSetup rotated(
      o, {StateVector::basis_state(a, 0), StateVector::basis_state(a, 1)},
      StateVector::basis_state(a, 0),
      {{StateVector(s, e1)}, {StateVector(s, e2)}});
  const double violation = check_repeatability(rotated, 99).max_residual;

  const bool pass = worst <= 1e-8 && violation >= 1e-2;
  results.push_back({3, "repeatability", pass,
                     "von Neumann residual " + fmt(worst) + ", counterexample violation " +
                         fmt(violation)});
}

// [4] Correlation closed forms at 1e-10 over 8x8 phase grids; coefficient
// reconstruction round-trips at 1e-8 for dims up to 8.
void criterion_correlations() {
  Rng rng(555);
  double projector_phi = 0.0, projector_t = 0.0, phase_phi = 0.0, phase_t = 0.0;
  for (int dim : {4, 8}) {
    HilbertSpace joint = HilbertSpace::from_factors({dim, dim});
    StateVector phi = random_state_vector(rng, joint);
    SchmidtForm form = schmidt_decompose(phi);
    ErasureCheck check = erasure_check(form, phi, 8);
    projector_phi = std::max(projector_phi, check.projector_corr_phi_residual);
    projector_t = std::max(projector_t, check.projector_corr_t_residual);
    phase_phi = std::max(phase_phi, check.phase_corr_phi_residual);
    phase_t = std::max(phase_t, check.phase_corr_t_max);
  }

  double roundtrip = 0.0;
  std::uniform_real_distribution<double> mag(0.2, 1.0);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
  for (int r = 2; r <= 8; ++r) {
    std::vector<Complex> cs;
    double total = 0.0;
    for (int k = 0; k < r; ++k) {
      cs.push_back(std::polar(mag(rng), ph(rng)));
      total += std::norm(cs.back());
    }
    for (Complex& x : cs) x /= std::sqrt(total);

    Matrix ul = random_unitary_matrix(rng, r);
    Matrix ur = random_unitary_matrix(rng, r);
    Vector amp = Vector::Zero(r * r);
    for (int k = 0; k < r; ++k)
      amp += cs[static_cast<std::size_t>(k)] *
             gemengelab::detail::kron(Vector(ul.col(k)), Vector(ur.col(k)));
    RealVector moduli(r);
    for (int k = 0; k < r; ++k) moduli(k) = std::abs(cs[static_cast<std::size_t>(k)]);
    SchmidtForm frame{HilbertSpace(r), HilbertSpace(r), moduli, ul, ur};
    StateVector state(HilbertSpace::from_factors({r, r}), amp);

    ReconstructionResult rec = reconstruct_coefficients(sample_correlations(frame, state));
    const Complex align = cs[0] / std::abs(cs[0]);
    for (int k = 0; k < r; ++k)
      roundtrip = std::max(roundtrip, std::abs(rec.coefficients[static_cast<std::size_t>(k)] -
                                               cs[static_cast<std::size_t>(k)] / align));
  }

  const bool pass = projector_phi <= 1e-10 && projector_t <= 1e-10 && phase_phi <= 1e-10 &&
                    phase_t <= 1e-10 && roundtrip <= 1e-8;
  results.push_back({4, "correlation-closed-forms", pass,
                     "phase residual " + fmt(std::max(phase_phi, phase_t)) + ", round trip " +
                         fmt(roundtrip)});
}

// [5] Cluster separability on lattices up to N=64: 100 random kernels,
// disjoint packets, both statistics, residual <= 1e-10; position averages add.
void criterion_cluster() {
  Rng rng(777);
  double worst = 0.0, worst_position = 0.0;
  int kernels = 0;
  for (int n : {8, 16, 32, 64}) {
    LatticeSpace lat = LatticeSpace::uniform(n);
    Domain d = Domain::range(0, n / 2, n);
    StateVector psi = lat.gaussian_packet(n * 0.2, n * 0.05 + 0.4, d);
    StateVector phi = lat.gaussian_packet(n * 0.75, n * 0.05 + 0.4, d.complement());

    Operator x = lat.position_operator();
    const double separate = expectation(psi, x).real() + expectation(phi, x).real();

    for (int rep = 0; rep < 25; ++rep, ++kernels) {
      Operator a = random_hermitian(rng, lat.space());
      Operator ad = localize(a, d);
      const double local = expectation(psi, a).real();
      for (Statistics stat : {Statistics::symmetric, Statistics::antisymmetric}) {
        StateVector pair = pair_state(psi, phi, stat);
        worst = std::max(worst, std::abs(pair_expectation(ad, pair).real() - local));
        worst_position =
            std::max(worst_position, std::abs(pair_expectation(x, pair).real() - separate));
      }
    }
  }
  const bool pass = worst <= 1e-10 && worst_position <= 1e-10;
  results.push_back({5, "cluster-separability", pass,
                     std::to_string(kernels) + " kernels, identity residual " + fmt(worst) +
                         ", additivity residual " + fmt(worst_position)});
}

// [6] Localization laws: norm contraction over 500 random operators,
// exact idempotence, superselection commutators <= 1e-10.
void criterion_localization() {
  Rng rng(888);
  LatticeSpace lat = LatticeSpace::uniform(16);
  std::uniform_int_distribution<int> coin(0, 1);
  double contraction_excess = 0.0, idempotence = 0.0, superselection = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    Operator a = random_hermitian(rng, lat.space());
    std::vector<int> idx;
    for (int i = 0; i < 16; ++i)
      if (coin(rng)) idx.push_back(i);
    Domain d(idx, 16);
    Operator local = localize(a, d);
    contraction_excess = std::max(contraction_excess, op_norm(local) - op_norm(a));
    idempotence = std::max(idempotence,
                           (localize(local, d).matrix() - local.matrix()).cwiseAbs().maxCoeff());
    superselection = std::max(superselection, superselection_check(local, d).max_residual);
  }
  const bool pass = contraction_excess <= 1e-12 && idempotence == 0.0 && superselection <= 1e-10;
  results.push_back({6, "localization-laws", pass,
                     "contraction excess " + fmt(contraction_excess) + ", superselection " +
                         fmt(superselection)});
}

// [7] Gemenge preservation: the evolve/convex-sum square commutes over 500
// cases; reduction rejects entangled branches and accepts product branches.
void criterion_gemenge() {
  Rng rng(999);
  std::uniform_int_distribution<int> dim(2, 8);
  std::uniform_int_distribution<int> count(2, 4);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const int d = dim(rng);
    HilbertSpace h(d);
    const int n = count(rng);
    std::vector<GemengeBranch> branches;
    double total = 0.0;
    std::vector<double> w(static_cast<std::size_t>(n));
    for (double& x : w) total += (x = weight(rng));
    for (int i = 0; i < n; ++i)
      branches.push_back({w[static_cast<std::size_t>(i)] / total, random_state_operator(rng, h)});
    GemengeState g = GemengeState::declared(branches);
    Operator u = random_unitary(rng, h);
    worst = std::max(worst, op_norm_diff(evolve_unitary(g, u).as_operator().matrix(),
                                         u.matrix() * g.as_operator().matrix() *
                                             u.matrix().adjoint()));
  }

  int rejected = 0, accepted = 0;
  for (int rep = 0; rep < 50; ++rep) {
    HilbertSpace h2(2);
    HilbertSpace pair = HilbertSpace::from_factors({2, 2});

    // Entangled branch: a Bell pair rotated by local unitaries.
    Vector bell(4);
    bell << 1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0);
    Matrix local = gemengelab::detail::kron(random_unitary_matrix(rng, 2),
                                            random_unitary_matrix(rng, 2));
    StateVector entangled(pair, Vector(local * bell));
    GemengeState bad = GemengeState::trivial(StateOperator::pure(entangled));
    try {
      partial_trace_gemenge(bad, 1, 0);
    } catch (const ProductFormError&) {
      ++rejected;
    }

    GemengeState good = GemengeState::trivial(
        tensor(random_state_operator(rng, h2), random_state_operator(rng, h2)));
    try {
      partial_trace_gemenge(good, 1, 0);
      ++accepted;
    } catch (const ProductFormError&) {
    }
  }

  const bool pass = worst <= 1e-8 && rejected == 50 && accepted == 50;
  results.push_back({7, "gemenge-preservation", pass,
                     "commuting-square residual " + fmt(worst) + ", " +
                         std::to_string(rejected) + "/50 rejected, " +
                         std::to_string(accepted) + "/50 accepted"});
}

// [8] Runtime: each preset completes in under 1 s; the suite stays under 60 s.
void criterion_runtime(std::chrono::steady_clock::time_point suite_start) {
  double worst_preset = 0.0;
  for (const std::string& name : sc::preset_names()) {
    const auto start = std::chrono::steady_clock::now();
    sc::Report report = sc::run_scenario(sc::preset(name));
    const double elapsed = seconds_since(start);
    worst_preset = std::max(worst_preset, elapsed);
    if (!report.all_passed) {
      results.push_back({8, "runtime", false, "preset " + name + " failed"});
      return;
    }
  }
  const double total = seconds_since(suite_start);
  const bool pass = worst_preset < 1.0 && total < 60.0;
  results.push_back({8, "runtime", pass,
                     "slowest preset " + fmt(worst_preset) + " s, suite " + fmt(total) + " s"});
}

}  // namespace

int main() {
  const auto suite_start = std::chrono::steady_clock::now();
  criterion_reproducibility();
  criterion_no_go_presets();
  criterion_repeatability();
  criterion_correlations();
  criterion_cluster();
  criterion_localization();
  criterion_gemenge();
  criterion_runtime(suite_start);

  int failures = 0;
  for (const CriterionResult& r : results) {
    std::printf("[%d] %-32s %s  (%s)\n", r.id, r.name.c_str(), r.pass ? "PASS" : "FAIL",
                r.detail.c_str());
    if (!r.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
