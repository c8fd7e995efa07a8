#include "spinbridge/metrics.hpp"
#include "spinbridge/oracle.hpp"
#include "spinbridge/protocols.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace spinbridge;
using namespace spinbridge::oracle;

namespace {

const double kPi = std::numbers::pi;

double max_abs(const Operator& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("beam-splitter rotation of coherent amplitudes") {
    const Complex a(0.6, -0.3);
    const auto [a1, b1] = heisenberg_swap_amplitudes(a, 0.0, kPi / 2.0, 1.0);
    CHECK(std::abs(a1) < 1e-15);
    CHECK(std::abs(b1 - Complex(0.0, -1.0) * a) < 1e-15);

    const auto [a0, b0] = heisenberg_swap_amplitudes(a, Complex(0.1, 0.2), 0.0, 1.3);
    CHECK(a0 == a);
    CHECK(b0 == Complex(0.1, 0.2));

    const Complex b(0.2, 0.5);
    const auto [x, y] = heisenberg_swap_amplitudes(a, b, 0.77, 1.9);
    CHECK(std::norm(x) + std::norm(y) == doctest::Approx(std::norm(a) + std::norm(b)));
  }

  TEST_CASE("matrix exponential matches series summation") {
    std::mt19937 rng(5);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 8; ++trial) {
      Operator m(4, 4);
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) m(i, j) = Complex(g(rng), g(rng));
      }
      const Operator series = expm_series(m);
      CHECK(max_abs(expm(m) - series) <= 1e-10 * max_abs(series));
    }
    CHECK(max_abs(expm(Operator::Zero(3, 3)) - Operator::Identity(3, 3)) == 0.0);
  }

  TEST_CASE("column-stacking convention") {
    const ModeLayout layout(2, 2, 2);
    const Operator h = hamiltonian_at(0.0, PulseSchedule(ConstantCoupling{0.8, 0.3}), layout);
    const Operator l = liouvillian(h, layout, DecayRates(0.2, 0.1, 0.3));
    const QState s = initial_state(Superposition{}, layout);
    const Eigen::Map<const Eigen::VectorXcd> v(s.rho().data(), 64);
    const Eigen::VectorXcd lv = l * v;
    const Operator expected = lindblad_rhs(s, 0.0, PulseSchedule(ConstantCoupling{0.8, 0.3}),
                                           DecayRates(0.2, 0.1, 0.3));
    CHECK(max_abs(Eigen::Map<const Operator>(lv.data(), 8, 8) - expected) < 1e-14);
  }

  TEST_CASE("Liouvillian size guard") {
    const ModeLayout big(5, 5, 5);
    CHECK_THROWS_AS(liouvillian(Operator::Zero(125, 125), big, DecayRates::lossless()),
                    InvalidDimension);
    const ModeLayout ok(4, 4, 4);
    CHECK(ok.total() * ok.total() == kMaxLiouvillianDim);
  }

  TEST_CASE("exponential of a zero generator is the identity map") {
    const ModeLayout layout(2, 2, 2);
    const QState s = initial_state(Superposition{}, layout);
    const QState out =
        liouvillian_exponential_evolve(s, Operator::Zero(8, 8), DecayRates::lossless(), 3.0);
    CHECK(max_abs(out.rho() - s.rho()) < 1e-15);
  }

  TEST_CASE("pure decay of a single photon") {
    const ModeLayout layout(2, 2, 2);
    const double kappa = 0.3;
    const double tau = 2.5;
    const QState out = liouvillian_exponential_evolve(
        fock_state(layout, {1, 0, 0}), Operator::Zero(8, 8), DecayRates(kappa, 0, 0), tau);
    CHECK(occupation(out, Mode::Microwave) == doctest::Approx(std::exp(-kappa * tau)).epsilon(1e-13));
  }

  TEST_CASE("integrator agrees with the exponential on the first swap segment") {
    const ModeLayout layout(3, 3, 3);
    const QState s = initial_state(Fock1{}, layout);
    const PulseSchedule swap(ConstantCoupling{1.0, 0.0});
    const SimResult r =
        evolve(s, swap, DecayRates::lossless(), {0.0, kPi / 2.0}, {}, 3);
    const QState ref = liouvillian_exponential_evolve(s, hamiltonian_at(0.0, swap, layout),
                                                      DecayRates::lossless(), kPi / 2.0);
    CHECK(max_abs(r.final_state.rho() - ref.rho()) <= 1e-7);
  }

  TEST_CASE("classical amplitudes on constant segments are exact rotations") {
    const PulseSchedule swap(PiecewiseSwap{1.0, 1.0, 0.0, kPi / 2.0, kPi});
    const Eigen::Vector3cd start(Complex(0.8, 0.1), 0.0, 0.0);
    const Eigen::Vector3cd end =
        classical_mode_amplitudes(swap, DecayRates::lossless(), start, {0.0, kPi});
    CHECK(std::abs(end(2) + start(0)) < 1e-12);
    CHECK(std::abs(end(0)) < 1e-12);

    const Eigen::Vector3cd damped = classical_mode_amplitudes(
        PulseSchedule(ConstantCoupling{0.0, 0.0}), DecayRates(0.2, 0.0, 0.0), start, {0.0, 3.0});
    CHECK(std::abs(damped(0) - start(0) * std::exp(-0.3)) < 1e-12);
  }

  TEST_CASE("first moments of a coherent input follow the classical equations") {
    const auto spec = dark_state_spec(Coherent{Complex(0.5, 0.0)}, DecayRates::lossy_defaults());
    const ModeLayout layout(5, 5, 5);
    const QState initial = initial_state(spec.initial, layout);
    const SimResult r = run_protocol(spec, layout, {}, 5);
    const Eigen::Vector3cd expected = classical_mode_amplitudes(
        spec.schedule, spec.decay, mean_amplitudes(initial.rho(), layout), spec.window);
    const Eigen::Vector3cd actual = mean_amplitudes(r.final_state.rho(), layout);
    CHECK((actual - expected).cwiseAbs().maxCoeff() <= 1e-6);
  }

  TEST_CASE("coherent fidelity under timing errors") {
    CHECK(lossless_coherent_fidelity(Complex(1.0, 0.0), 0.0) == doctest::Approx(1.0));
    CHECK(lossless_coherent_fidelity(Complex(0.0, 0.0), 0.3) == 1.0);
    // Both swaps overshoot by eps, leaving -cos^2(eps) alpha in a2, so
    // F = exp(-|alpha|^2 sin^4(eps)).
    for (double eps : {0.01, 0.05, 0.2}) {
      const double s2 = std::sin(eps) * std::sin(eps);
      const double expected = std::exp(-s2 * s2);
      const double f = lossless_coherent_fidelity(Complex(1.0, 0.0), eps);
      CHECK(f == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  TEST_CASE("coherent fidelity matches the density-matrix run") {
    const double eps = 0.1;
    const PulseSchedule late(PiecewiseSwap{1.0, 1.0, 0.0, kPi / 2.0 + eps, kPi + 2.0 * eps});
    ProtocolSpec spec{ProtocolKind::DoubleSwap, late, {0.0, kPi + 2.0 * eps},
                      Coherent{}, DecayRates::lossless(), true};
    const SimResult r = run_protocol(spec, ModeLayout(10, 10, 10), {}, 3);
    CHECK(r.fidelity.back() ==
          doctest::Approx(lossless_coherent_fidelity(Complex(1.0, 0.0), eps)).epsilon(1e-6));
  }
}
