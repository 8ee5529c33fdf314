#include "doctest.h"

#include "oam3/qstate.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace oam3;

namespace {

constexpr double kS3 = 0.57735026918962576451;  // 1/sqrt(3)

std::mt19937_64 eng(20240811ULL);

BipartiteKet random_ket() {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec9c v;
  for (int i = 0; i < 9; ++i) v(i) = cxd(g(eng), g(eng));
  return BipartiteKet::normalized(v);
}

DensityMatrix random_state(int rank = 9) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat9c m = Mat9c::Zero();
  for (int r = 0; r < rank; ++r) {
    Vec9c v;
    for (int i = 0; i < 9; ++i) v(i) = cxd(g(eng), g(eng));
    m += v * v.adjoint();
  }
  m /= m.trace().real();
  return DensityMatrix::make(m);
}

}  // namespace

TEST_CASE("mes_state amplitudes") {
  const auto zero = mes_state(0.0, 0.0);
  CHECK(std::abs(zero.amplitudes()(2) - cxd(kS3, 0)) < 1e-12);  // |-1,+1>
  CHECK(std::abs(zero.amplitudes()(4) - cxd(kS3, 0)) < 1e-12);  // |0,0>
  CHECK(std::abs(zero.amplitudes()(6) - cxd(kS3, 0)) < 1e-12);  // |+1,-1>
  for (int i : {0, 1, 3, 5, 7, 8})
    CHECK(std::abs(zero.amplitudes()(i)) == 0.0);

  const auto pi = mes_state(std::numbers::pi, std::numbers::pi);
  CHECK(std::abs(pi.amplitudes()(2) - cxd(-kS3, 0)) < 1e-12);
  CHECK(std::abs(pi.amplitudes()(4) - cxd(kS3, 0)) < 1e-12);
  CHECK(std::abs(pi.amplitudes()(6) - cxd(-kS3, 0)) < 1e-12);

  // the paper-regime member is still normalized and anticorrelated
  const auto best = mes_state(0.98 * 2 * std::numbers::pi,
                              0.07 * 2 * std::numbers::pi);
  CHECK(std::abs(best.amplitudes().squaredNorm() - 1.0) < 1e-12);
  CHECK(std::abs(std::abs(best.amplitudes()(2)) - kS3) < 1e-12);
}

TEST_CASE("schmidt decomposition of named states") {
  // product state |0,0>
  Vec9c prod = Vec9c::Zero();
  prod(pair_index(1, 1)) = 1.0;
  auto dec = schmidt_decompose(BipartiteKet::from(prod));
  CHECK(dec.coefficients(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dec.coefficients(1) == doctest::Approx(0.0).epsilon(1e-12));

  // symmetric MES
  dec = schmidt_decompose(mes_state(0.0, 0.0));
  for (int i = 0; i < 3; ++i)
    CHECK(dec.coefficients(i) == doctest::Approx(kS3).epsilon(1e-12));

  // diagonal coefficient matrix (2|0,0> + |1,-1>)/sqrt5
  Vec9c two = Vec9c::Zero();
  two(pair_index(1, 1)) = 2.0 / std::sqrt(5.0);
  two(pair_index(2, 0)) = 1.0 / std::sqrt(5.0);
  dec = schmidt_decompose(BipartiteKet::from(two));
  CHECK(dec.coefficients(0) == doctest::Approx(2.0 / std::sqrt(5.0)));
  CHECK(dec.coefficients(1) == doctest::Approx(1.0 / std::sqrt(5.0)));
  CHECK(dec.coefficients(2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("schmidt round trip is identity up to global phase") {
  for (int trial = 0; trial < 50; ++trial) {
    const BipartiteKet psi = random_ket();
    const auto dec = schmidt_decompose(psi);
    CHECK(dec.coefficients.squaredNorm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dec.coefficients(0) >= dec.coefficients(1));
    CHECK(dec.coefficients(1) >= dec.coefficients(2));
    CHECK(dec.coefficients(2) >= -1e-12);
    const BipartiteKet back = dec.reconstruct();
    const double overlap = std::abs(back.amplitudes().dot(psi.amplitudes()));
    CHECK(overlap == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("fidelity_pure basics") {
  const BipartiteKet psi = mes_state(1.3, -0.4);
  CHECK(fidelity_pure(DensityMatrix::pure(psi), psi) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fidelity_pure(DensityMatrix::maximally_mixed(9), psi) ==
        doctest::Approx(1.0 / 9.0).epsilon(1e-12));
  CHECK_THROWS_AS(fidelity_pure(DensityMatrix::maximally_mixed(3), psi),
                  std::invalid_argument);
}

TEST_CASE("fidelity of the parity-dephased MES is 5/9") {
  // oracle: zero every coherence between the |0>_B slot and the |+-1>_B
  // slots of the MES projector by hand
  const BipartiteKet psi = mes_state(0.0, 0.0);
  Mat9c m = (psi.amplitudes() * psi.amplitudes().adjoint());
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c) {
      const bool r_even = (r % 3) == 1;  // Bob index 1 <-> l = 0
      const bool c_even = (c % 3) == 1;
      if (r_even != c_even) m(r, c) = 0.0;
    }
  const auto rho = DensityMatrix::make(m);
  CHECK(fidelity_pure(rho, psi) == doctest::Approx(5.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("fidelity_pure is invariant under a global phase of psi") {
  const DensityMatrix rho = random_state(3);
  const BipartiteKet psi = random_ket();
  const BipartiteKet shifted =
      BipartiteKet::from(std::polar(1.0, 0.7331) * psi.amplitudes());
  CHECK(fidelity_pure(rho, psi) ==
        doctest::Approx(fidelity_pure(rho, shifted)).epsilon(1e-12));
}

TEST_CASE("purity") {
  CHECK(purity(DensityMatrix::pure(mes_state(0.2, 0.9))) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(purity(DensityMatrix::maximally_mixed(9)) ==
        doctest::Approx(1.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("purity 1 iff a unit eigenvalue") {
  for (int trial = 0; trial < 20; ++trial) {
    const DensityMatrix rho = random_state(trial % 3 + 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.matrix());
    const double top = es.eigenvalues().maxCoeff();
    if (purity(rho) > 1.0 - 1e-8)
      CHECK(top == doctest::Approx(1.0).epsilon(1e-7));
    if (top > 1.0 - 1e-9)
      CHECK(purity(rho) == doctest::Approx(1.0).epsilon(1e-8));
  }
  const DensityMatrix pure = DensityMatrix::pure(random_ket());
  CHECK(purity(pure) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("partial_trace") {
  // |0,0><0,0| trace out B -> |0><0|
  Vec9c prod = Vec9c::Zero();
  prod(pair_index(1, 1)) = 1.0;
  const auto red =
      partial_trace(DensityMatrix::pure(BipartiteKet::from(prod)), Side::B);
  CHECK(red(1, 1).real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(red(0, 0)) < 1e-12);

  // MES marginals are maximally mixed
  const auto rho = DensityMatrix::pure(mes_state(0.4, 1.1));
  for (Side s : {Side::A, Side::B}) {
    const auto marg = partial_trace(rho, s);
    CHECK((marg.matrix() - Mat3c::Identity() / 3.0).cwiseAbs().maxCoeff() <
          1e-12);
  }

  // product factorization: tracing out B of rho_A x rho_B returns rho_A
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3c a, b;
  for (int i = 0; i < 3; ++i) {
    a(i) = cxd(g(eng), g(eng));
    b(i) = cxd(g(eng), g(eng));
  }
  a.normalize();
  b.normalize();
  const Mat3c rho_a = a * a.adjoint();
  const Mat3c rho_b = b * b.adjoint();
  const auto joint = DensityMatrix::make(kron(rho_a, rho_b));
  CHECK((partial_trace(joint, Side::B).matrix() - rho_a).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((partial_trace(joint, Side::A).matrix() - rho_b).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("density matrix invariants are enforced") {
  Mat3c bad = Mat3c::Identity() / 3.0;
  bad(0, 1) = cxd(0.1, 0.0);  // not Hermitian
  CHECK_THROWS_AS(DensityMatrix::make(bad), std::invalid_argument);

  Mat3c neg = Mat3c::Zero();  // eigenvalue -0.1
  neg(0, 0) = 0.6;
  neg(1, 1) = 0.5;
  neg(2, 2) = -0.1;
  CHECK_THROWS_AS(DensityMatrix::make(neg), std::invalid_argument);

  Mat3c off_trace = Mat3c::Identity();  // trace 3
  CHECK_THROWS_AS(DensityMatrix::make(off_trace), std::invalid_argument);

  // tiny negative eigenvalues clamp to zero
  Mat3c tiny = Mat3c::Zero();
  tiny(0, 0) = 1.0 + 5e-9;
  tiny(1, 1) = -5e-9;
  const auto fixed = DensityMatrix::make(tiny);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(fixed.matrix());
  CHECK(es.eigenvalues().minCoeff() >= -1e-15);
  CHECK(fixed.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(DensityMatrix::make(Eigen::MatrixXcd::Identity(4, 4) / 4.0),
                  std::invalid_argument);
}

TEST_CASE("ket validation") {
  CHECK_THROWS_AS(QutritKet::from(Vec3c(1.0, 1.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(QutritKet::basis(2), std::invalid_argument);
  CHECK_THROWS_AS(QutritKet::normalized(Vec3c::Zero()), std::invalid_argument);
  const auto k = QutritKet::normalized(Vec3c(1.0, 1.0, 0.0));
  CHECK(std::abs(k.amplitudes().squaredNorm() - 1.0) < 1e-14);
  CHECK(k.amplitude(-1) == k.amplitude(0));
  // flip reverses the label order
  CHECK(QutritKet::basis(-1).oam_flipped().amplitude(+1) == cxd(1.0, 0.0));
}

TEST_CASE("operator basis: Hermitian, independent, fixed Gram matrix") {
  const auto& basis = GellMannBasis::instance();
  for (int m = 0; m < 9; ++m)
    CHECK((basis.op(m) - basis.op(m).adjoint()).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::Matrix<double, 9, 9> expected = Eigen::Matrix<double, 9, 9>::Zero();
  expected.diagonal() << 3, 2, 2, 2, 2, 2, 2, 2, 2;
  CHECK((basis.gram() - expected).cwiseAbs().maxCoeff() < 1e-12);

  CHECK(basis.op(0).isApprox(Mat3c::Identity()));
  Mat3c l9 = Mat3c::Zero();
  l9(0, 0) = 1;
  l9(1, 1) = 1;
  l9(2, 2) = -2;
  CHECK(basis.op(8).isApprox(l9 / std::sqrt(3.0)));

  // nonsingular Gram <=> linear independence
  CHECK(basis.gram().fullPivLu().rank() == 9);
}
