#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace gemengelab;
using testsupport::make_state;
using Catch::Matchers::WithinAbs;

namespace {
const Complex I_(0.0, 1.0);
}

TEST_CASE("tensor of basis vectors lands on the composite basis index") {
  HilbertSpace h2(2);
  StateVector zero = StateVector::basis_state(h2, 0);
  StateVector one = StateVector::basis_state(h2, 1);
  StateVector prod = tensor(zero, one);
  REQUIRE(prod.dim() == 4);
  REQUIRE_THAT(std::abs(prod.amplitudes()(1) - 1.0), WithinAbs(0.0, 1e-15));
  REQUIRE(prod.space().factor_count() == 2);
}

TEST_CASE("tensor of identities is the identity") {
  HilbertSpace h2(2);
  Operator id2 = Operator::identity(h2);
  Operator id4 = tensor(id2, id2);
  REQUIRE((id4.matrix() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tensor application matches the entrywise 4x4 oracle") {
  HilbertSpace h2(2);
  Matrix sz(2, 2);
  sz << 1, 0, 0, -1;
  Operator z(h2, sz);
  StateVector plus = make_state(h2, {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)});
  StateVector zero = StateVector::basis_state(h2, 0);

  Operator big = tensor(z, Operator::identity(h2));
  Vector got = apply(big, tensor(plus, zero));

  // Oracle: build the 4x4 matrix and the 4-vector by hand and multiply.
  Matrix oracle_m = testsupport::naive_kron(sz, Matrix::Identity(2, 2));
  Vector oracle_v = testsupport::naive_kron_vec(plus.amplitudes(), zero.amplitudes());
  Vector expected = oracle_m * oracle_v;
  REQUIRE((got - expected).cwiseAbs().maxCoeff() <= 1e-15);

  // The result is |-> (x) |0>.
  StateVector minus = make_state(h2, {1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)});
  REQUIRE((got - tensor(minus, zero).amplitudes()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("tensor refuses products beyond the dimension cap") {
  HilbertSpace big(1 << 11);
  StateVector a = StateVector::basis_state(big, 0);
  REQUIRE_THROWS_AS(tensor(a, tensor(a, a)), DimensionError);
}

TEST_CASE("partial trace of a product state returns the factors") {
  Rng rng(7);
  HilbertSpace h2(2), h3(3);
  StateOperator rho = random_state_operator(rng, h2);
  StateOperator sigma = random_state_operator(rng, h3);
  StateOperator joint = tensor(rho, sigma);
  REQUIRE(op_norm_diff(partial_trace(joint, 0).matrix(), rho.matrix()) <= 1e-12);
  REQUIRE(op_norm_diff(partial_trace(joint, 1).matrix(), sigma.matrix()) <= 1e-12);
}

TEST_CASE("partial trace of the Bell state matches the summation oracle") {
  HilbertSpace pair = HilbertSpace::from_factors({2, 2});
  StateVector bell = make_state(pair, {1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0)});
  StateOperator joint = StateOperator::pure(bell);

  Matrix oracle = testsupport::naive_partial_trace(joint.matrix(), 2, 2, 0);
  StateOperator reduced = partial_trace(joint, 0);
  REQUIRE(op_norm_diff(reduced.matrix(), oracle) <= 1e-14);
  REQUIRE(op_norm_diff(reduced.matrix(), Matrix::Identity(2, 2) / 2.0) <= 1e-14);
}

TEST_CASE("partial trace keeps unit trace on either side") {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    std::uniform_int_distribution<int> dim(2, 4);
    HilbertSpace joint = HilbertSpace::from_factors({dim(rng), dim(rng)});
    StateOperator t = random_state_operator(rng, joint);
    for (int keep : {0, 1}) {
      StateOperator r = partial_trace(t, keep);
      REQUIRE_THAT(r.matrix().trace().real(), WithinAbs(1.0, 1e-10));
    }
  }
}

TEST_CASE("partial trace rejects bad factor indices") {
  HilbertSpace pair = HilbertSpace::from_factors({2, 2});
  StateOperator t = StateOperator::maximally_mixed(pair);
  REQUIRE_THROWS_AS(partial_trace(t, 2), DimensionError);
  REQUIRE_THROWS_AS(partial_trace(t, -1), DimensionError);
}

TEST_CASE("Schmidt form of a product state has a single unit coefficient") {
  Rng rng(3);
  HilbertSpace h3(3), h4(4);
  StateVector psi = random_state_vector(rng, h3);
  StateVector phi = random_state_vector(rng, h4);
  SchmidtForm form = schmidt_decompose(tensor(psi, phi));
  REQUIRE(form.rank() >= 1);
  REQUIRE_THAT(form.coefficients(0), WithinAbs(1.0, 1e-12));
  for (int k = 1; k < form.rank(); ++k) REQUIRE(form.coefficients(k) <= 1e-10);
}

TEST_CASE("Schmidt coefficients of the Bell state are (1/sqrt2, 1/sqrt2)") {
  // Oracle: singular values of the amplitude matrix [[1/sqrt2, 0], [0, 1/sqrt2]]
  // are 1/sqrt2 twice, read off directly from the diagonal form.
  HilbertSpace pair = HilbertSpace::from_factors({2, 2});
  StateVector bell = make_state(pair, {1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0)});
  SchmidtForm form = schmidt_decompose(bell);
  REQUIRE(form.rank() == 2);
  REQUIRE_THAT(form.coefficients(0), WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
  REQUIRE_THAT(form.coefficients(1), WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
}

TEST_CASE("Schmidt reconstruction reproduces random bipartite states") {
  Rng rng(5);
  std::uniform_int_distribution<int> dim(1, 8);
  for (int rep = 0; rep < 1000; ++rep) {
    const int dl = dim(rng);
    const int dr = dim(rng);
    if (dl == 1 && dr == 1) continue;
    HilbertSpace joint = HilbertSpace::from_factors({dl, dr});
    StateVector phi = random_state_vector(rng, joint);
    SchmidtForm form = schmidt_decompose(phi);
    StateVector back = form.reconstruct();
    REQUIRE((back.amplitudes() - phi.amplitudes()).norm() <= 1e-8);
    for (int k = 1; k < form.rank(); ++k)
      REQUIRE(form.coefficients(k) <= form.coefficients(k - 1) + 1e-12);
  }
}

TEST_CASE("Schmidt bases are orthonormal") {
  Rng rng(17);
  HilbertSpace joint = HilbertSpace::from_factors({4, 5});
  for (int rep = 0; rep < 20; ++rep) {
    SchmidtForm form = schmidt_decompose(random_state_vector(rng, joint));
    Matrix gl = form.left_basis.adjoint() * form.left_basis;
    Matrix gr = form.right_basis.adjoint() * form.right_basis;
    REQUIRE((gl - Matrix::Identity(form.rank(), form.rank())).cwiseAbs().maxCoeff() <= 1e-10);
    REQUIRE((gr - Matrix::Identity(form.rank(), form.rank())).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("completing a full basis map gives that exact unitary") {
  HilbertSpace h2(2);
  std::vector<StateVector> ins = {StateVector::basis_state(h2, 0), StateVector::basis_state(h2, 1)};
  std::vector<StateVector> outs = {StateVector::basis_state(h2, 1), StateVector::basis_state(h2, 0)};
  Operator u = complete_unitary(h2, ins, outs);
  Matrix expect(2, 2);
  expect << 0, 1, 1, 0;
  REQUIRE(op_norm_diff(u.matrix(), expect) <= 1e-12);
}

TEST_CASE("completing the empty map gives the identity") {
  HilbertSpace h2(2);
  Operator u = complete_unitary(h2, {}, {});
  REQUIRE(op_norm_diff(u.matrix(), Matrix::Identity(2, 2)) <= 1e-12);
}

TEST_CASE("coupling-style pair completion is unitary and maps every pair") {
  // phi_k (x) psi -> phi_k (x) psi_k on a 2-level system and 2-level pointer.
  HilbertSpace h2(2);
  HilbertSpace joint = tensor_space(h2, h2);
  StateVector psi = StateVector::basis_state(h2, 0);
  std::vector<StateVector> ins, outs;
  for (int k = 0; k < 2; ++k) {
    StateVector phik = StateVector::basis_state(h2, k);
    StateVector psik = StateVector::basis_state(h2, k);
    ins.push_back(tensor(phik, psi));
    outs.push_back(tensor(phik, psik));
  }
  Operator u = complete_unitary(joint, ins, outs);
  Matrix gram = u.matrix().adjoint() * u.matrix();
  REQUIRE(op_norm_diff(gram, Matrix::Identity(4, 4)) <= 1e-8);
  for (std::size_t i = 0; i < ins.size(); ++i) {
    Vector image = u.matrix() * ins[i].amplitudes();
    REQUIRE((image - outs[i].amplitudes()).norm() <= 1e-8);
  }
}

TEST_CASE("unitary completion rejects non-orthonormal families") {
  HilbertSpace h2(2);
  StateVector zero = StateVector::basis_state(h2, 0);
  StateVector plus = make_state(h2, {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)});
  REQUIRE_THROWS_AS(complete_unitary(h2, {zero, plus}, {zero, plus}), ValidationError);
}

TEST_CASE("random unitary completions are unitary") {
  Rng rng(23);
  for (int rep = 0; rep < 100; ++rep) {
    std::uniform_int_distribution<int> dim(2, 8);
    const int d = dim(rng);
    std::uniform_int_distribution<int> count(0, d);
    const int m = count(rng);
    Matrix uin = random_unitary_matrix(rng, d);
    Matrix uout = random_unitary_matrix(rng, d);
    HilbertSpace h(d);
    std::vector<StateVector> ins, outs;
    for (int i = 0; i < m; ++i) {
      ins.emplace_back(h, Vector(uin.col(i)));
      outs.emplace_back(h, Vector(uout.col(i)));
    }
    Operator u = complete_unitary(h, ins, outs);
    REQUIRE(u.is_unitary(1e-8));
  }
}

TEST_CASE("symmetrizing orthogonal product states gives the balanced sum") {
  HilbertSpace h4(4);
  StateVector psi = StateVector::basis_state(h4, 0);
  StateVector phi = StateVector::basis_state(h4, 2);
  auto sym = symmetrized(tensor(psi, phi), Statistics::symmetric);
  REQUIRE(sym.has_value());
  Vector expect = (testsupport::naive_kron_vec(psi.amplitudes(), phi.amplitudes()) +
                   testsupport::naive_kron_vec(phi.amplitudes(), psi.amplitudes())) /
                  std::sqrt(2.0);
  REQUIRE((sym->amplitudes() - expect).norm() <= 1e-12);
}

TEST_CASE("antisymmetrizing a repeated factor vanishes") {
  HilbertSpace h3(3);
  StateVector psi = StateVector::basis_state(h3, 1);
  auto anti = symmetrized(tensor(psi, psi), Statistics::antisymmetric);
  REQUIRE_FALSE(anti.has_value());
}

TEST_CASE("three-factor symmetrization matches the six-term permutation oracle") {
  Rng rng(31);
  HilbertSpace h3(3);
  StateVector a = random_state_vector(rng, h3);
  StateVector b = random_state_vector(rng, h3);
  StateVector c = random_state_vector(rng, h3);
  StateVector product = tensor(tensor(a, b), c);

  for (Statistics stat : {Statistics::symmetric, Statistics::antisymmetric}) {
    Vector oracle = testsupport::naive_symmetrize_sum(product.amplitudes(), 3, 3,
                                                      stat == Statistics::antisymmetric);
    oracle /= 6.0;  // group order
    const double nrm = oracle.norm();
    auto got = symmetrized(product, stat);
    REQUIRE(got.has_value());
    REQUIRE((got->amplitudes() - oracle / nrm).norm() <= 1e-10);
  }
}

TEST_CASE("(anti)symmetrization is idempotent") {
  Rng rng(37);
  for (Statistics stat : {Statistics::symmetric, Statistics::antisymmetric}) {
    for (int rep = 0; rep < 20; ++rep) {
      HilbertSpace joint = HilbertSpace::from_factors({3, 3, 3});
      StateVector psi = random_state_vector(rng, joint);
      auto once = symmetrized(psi, stat);
      if (!once) continue;
      auto twice = symmetrized(*once, stat);
      REQUIRE(twice.has_value());
      REQUIRE((twice->amplitudes() - once->amplitudes()).norm() <= 1e-8);
    }
  }
}

TEST_CASE("symmetrization requires identical factors") {
  HilbertSpace joint = HilbertSpace::from_factors({2, 3});
  StateVector psi = StateVector::basis_state(joint, 0);
  REQUIRE_THROWS_AS(symmetrized(psi, Statistics::symmetric), ValidationError);
}

TEST_CASE("operator norm is the largest singular value") {
  HilbertSpace h2(2);
  Matrix m(2, 2);
  m << 3, 0, 0, -1;
  REQUIRE_THAT(op_norm(Operator(h2, m)), WithinAbs(3.0, 1e-12));
}

TEST_CASE("state vectors must be normalized and state operators positive") {
  HilbertSpace h2(2);
  Vector bad(2);
  bad << 1.0, 1.0;
  REQUIRE_THROWS_AS(StateVector(h2, bad), ValidationError);

  Matrix neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  REQUIRE_THROWS_AS(StateOperator(Operator(h2, neg)), ValidationError);

  Matrix off(2, 2);
  off << 0.5, 0.5, 0.0, 0.5;
  REQUIRE_THROWS_AS(StateOperator(Operator(h2, off)), ValidationError);
}
