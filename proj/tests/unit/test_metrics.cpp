#include "spinbridge/metrics.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <random>

using namespace spinbridge;

namespace {

Operator random_density(int dim, int rank, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Operator x(dim, rank);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < rank; ++j) x(i, j) = Complex(g(rng), g(rng));
  }
  Operator rho = x * x.adjoint();
  return rho / rho.trace().real();
}

Operator projector(const StateVector& psi) { return psi * psi.adjoint(); }

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("partial trace of a product state recovers each factor") {
    const ModeLayout layout(3, 2, 4);
    const StateVector u = coherent_state(Complex(0.4, 0.2), 3).amplitudes;
    const StateVector v = superposition_state(2);
    const StateVector w = basis_ket(4, 2);
    const QState s = product_state(layout, u, v, w);
    CHECK((partial_trace(s, Mode::Microwave) - projector(u)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((partial_trace(s, Mode::Spin) - projector(v)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((partial_trace(s, Mode::Optical) - projector(w)).cwiseAbs().maxCoeff() < 1e-12);
    for (Mode m : kAllModes) CHECK(partial_trace(s, m).trace().real() == doctest::Approx(1.0));
  }

  TEST_CASE("entangled pair reduces to the maximally mixed state") {
    const ModeLayout layout(2, 2, 2);
    StateVector psi = StateVector::Zero(8);
    psi(layout.index({0, 0, 0})) = 1.0 / std::sqrt(2.0);
    psi(layout.index({1, 0, 1})) = 1.0 / std::sqrt(2.0);
    const QState s = QState::pure(layout, psi);
    const Operator r = partial_trace(s, Mode::Optical);
    CHECK((r - 0.5 * Operator::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("square root of random PSD matrices") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      const Operator rho = random_density(5, 1 + trial % 5, rng);
      const auto r = hermitian_sqrt(rho);
      CHECK((r.root * r.root - rho).cwiseAbs().maxCoeff() < 1e-9);
    }
    Operator bad = Operator::Zero(2, 2);
    bad(0, 0) = 1.0;
    bad(1, 1) = -1e-3;
    CHECK_THROWS_AS(hermitian_sqrt(bad), InvalidState);
    bad(1, 1) = -1e-9;
    const auto clamped = hermitian_sqrt(bad);
    CHECK(clamped.clamped == doctest::Approx(1e-9));
  }

  TEST_CASE("fidelity reference values") {
    const Operator zero = projector(basis_ket(4, 0));
    const Operator one = projector(basis_ket(4, 1));
    CHECK(uhlmann_fidelity(zero, zero) == doctest::Approx(1.0));
    CHECK(uhlmann_fidelity(zero, one) == doctest::Approx(0.0));
    // Untruncated overlap |<0|alpha=1>|^2 = e^-1, approached with a large space.
    const Operator coh = projector(coherent_state(Complex(1.0, 0.0), 30).amplitudes);
    Operator zero30 = Operator::Zero(30, 30);
    zero30(0, 0) = 1.0;
    CHECK(uhlmann_fidelity(zero30, coh) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }

  TEST_CASE("fidelity is symmetric, bounded, and the pure shortcut agrees") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
      const Operator a = random_density(4, 1 + trial % 4, rng);
      const Operator b = random_density(4, 1 + (trial + 1) % 4, rng);
      const double fab = uhlmann_fidelity(a, b);
      const double fba = uhlmann_fidelity(b, a);
      CHECK(std::abs(fab - fba) < 1e-9);
      CHECK(fab >= 0.0);
      CHECK(fab <= 1.0);
    }
    const Operator pure = random_density(4, 1, rng);
    const Operator mixed = random_density(4, 3, rng);
    const auto shortcut = uhlmann_fidelity_report(pure, mixed);
    CHECK(shortcut.pure_shortcut);
    Eigen::SelfAdjointEigenSolver<Operator> es(pure);
    const StateVector psi = es.eigenvectors().col(3);
    CHECK(shortcut.value == doctest::Approx((psi.adjoint() * mixed * psi)(0, 0).real()));

    // Commuting states reduce to the classical overlap (sum sqrt(p q))^2.
    const Eigen::Vector4d p(0.5, 0.3, 0.2, 0.0);
    const Eigen::Vector4d q(0.1, 0.6, 0.0, 0.3);
    Eigen::HouseholderQR<Operator> qr(random_density(4, 4, rng));
    const Operator u = qr.householderQ();
    const auto general = uhlmann_fidelity_report(u * p.cast<Complex>().asDiagonal() * u.adjoint(),
                                                 u * q.cast<Complex>().asDiagonal() * u.adjoint());
    CHECK_FALSE(general.pure_shortcut);
    const double classical = std::pow((p.array() * q.array()).sqrt().sum(), 2);
    CHECK(std::abs(general.value - classical) < 1e-12);
  }

  TEST_CASE("fidelity decreases under depolarizing noise") {
    std::mt19937 rng(3);
    const Operator rho = random_density(4, 2, rng);
    const Operator mixed = 0.25 * Operator::Identity(4, 4);
    double previous = 1.0 + 1e-12;
    for (double p = 0.0; p <= 1.0; p += 0.1) {
      const double f = uhlmann_fidelity(rho, (1.0 - p) * rho + p * mixed);
      CHECK(f <= previous + 1e-12);
      previous = f;
    }
  }

  TEST_CASE("fidelity rejects inputs that cannot be normalized") {
    CHECK_THROWS_AS(uhlmann_fidelity(Operator::Zero(2, 2), Operator::Identity(2, 2)),
                    InvalidState);
    CHECK_THROWS_AS(uhlmann_fidelity(Operator::Identity(2, 2), Operator::Identity(3, 3)),
                    InvalidDimension);
  }

  TEST_CASE("occupations") {
    const ModeLayout layout(8, 2, 2);
    const QState vacuum = fock_state(layout, {0, 0, 0});
    CHECK(occupation(vacuum, Mode::Microwave) == 0.0);
    CHECK(occupation(fock_state(layout, {1, 1, 0}), Mode::Spin) == doctest::Approx(1.0));
    const QState coh = product_state(layout, coherent_state(Complex(1.0, 0.0), 8).amplitudes,
                                     basis_ket(2, 0), basis_ket(2, 0));
    CHECK(occupation(coh, Mode::Microwave) == doctest::Approx(1.0).epsilon(1e-4));
    const Eigen::Vector3cd amps = mean_amplitudes(coh.rho(), layout);
    CHECK(std::abs(amps(0) - 1.0) < 1e-4);
    const Eigen::Matrix3cd m = second_moments(coh.rho(), layout);
    CHECK(m(0, 0).real() == doctest::Approx(occupation(coh, Mode::Microwave)));
    CHECK(purity(coh.rho()) == doctest::Approx(1.0));
  }
}
