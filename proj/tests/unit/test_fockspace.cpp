#include "spinbridge/fockspace.hpp"
#include "spinbridge/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace spinbridge;

TEST_SUITE("fockspace") {
  TEST_CASE("annihilation has sqrt(n) on the superdiagonal") {
    const Operator a2 = annihilation(2);
    CHECK(a2(0, 1) == Complex(1.0, 0.0));
    CHECK(a2.cwiseAbs().sum() == doctest::Approx(1.0));

    const Operator a3 = annihilation(3);
    CHECK(a3(0, 1).real() == doctest::Approx(1.0));
    CHECK(a3(1, 2).real() == doctest::Approx(std::sqrt(2.0)));
    CHECK(a3.cwiseAbs().sum() == doctest::Approx(1.0 + std::sqrt(2.0)));

    const Operator n4 = creation(4) * annihilation(4);
    for (int k = 0; k < 4; ++k) CHECK(n4(k, k).real() == doctest::Approx(k));
    CHECK((n4 - number(4)).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("undersized ladder operators are rejected") {
    CHECK_THROWS_AS(annihilation(1), InvalidDimension);
    CHECK_THROWS_AS(ModeLayout(2, 1, 2), InvalidDimension);
  }

  TEST_CASE("truncation defect sits only in the top level") {
    for (int d = 2; d <= 7; ++d) {
      const Operator a = annihilation(d);
      Operator expected = Operator::Identity(d, d);
      expected(d - 1, d - 1) -= static_cast<double>(d);
      CHECK((a * a.adjoint() - a.adjoint() * a - expected).cwiseAbs().maxCoeff() < 1e-14);
    }
  }

  TEST_CASE("adjoint of adjoint is exact") {
    const Operator a = annihilation(5) + Complex(0.0, 0.3) * number(5);
    CHECK(a.adjoint().adjoint() == a);
  }

  TEST_CASE("layout index round trip and strides") {
    const ModeLayout layout(3, 4, 5);
    CHECK(layout.total() == 60);
    CHECK(layout.stride(Mode::Optical) == 1);
    CHECK(layout.stride(Mode::Spin) == 5);
    CHECK(layout.stride(Mode::Microwave) == 20);
    for (int i = 0; i < layout.total(); ++i) CHECK(layout.index(layout.occupations(i)) == i);
    CHECK_THROWS_AS(layout.index({3, 0, 0}), TruncationError);
  }

  TEST_CASE("embedded lowering operator acts on its own mode") {
    const ModeLayout layout(2, 2, 2);
    const Operator a1 = embed(annihilation(2), Mode::Microwave, layout);
    StateVector psi = StateVector::Zero(8);
    psi(layout.index({1, 0, 0})) = 1.0;
    const StateVector out = a1 * psi;
    CHECK(std::abs(out(layout.index({0, 0, 0})) - 1.0) < 1e-15);
    CHECK(out.norm() == doctest::Approx(1.0));
  }

  TEST_CASE("embedded operators on different modes commute") {
    const ModeLayout layout(3, 4, 2);
    const Operator a = embed(annihilation(3), Mode::Microwave, layout);
    const Operator b = embed(annihilation(4), Mode::Spin, layout);
    const Operator c = embed(creation(2), Mode::Optical, layout);
    CHECK((a * b - b * a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a * c - c * a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b.adjoint() * c - c * b.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("embedding the identity gives the identity") {
    const ModeLayout layout(3, 2, 4);
    for (Mode m : kAllModes) {
      const Operator id = embed(identity(layout.dim(m)), m, layout);
      CHECK(id == Operator::Identity(layout.total(), layout.total()));
    }
  }

  TEST_CASE("embedding preserves spectra with complementary multiplicity") {
    const ModeLayout layout(2, 3, 2);
    const Operator n = embed(number(3), Mode::Spin, layout);
    Eigen::SelfAdjointEigenSolver<Operator> es(n);
    const Eigen::VectorXd ev = es.eigenvalues();
    for (int k = 0; k < 3; ++k) {
      int count = 0;
      for (Eigen::Index i = 0; i < ev.size(); ++i) count += std::abs(ev(i) - k) < 1e-12;
      CHECK(count == 4);
    }
  }

  TEST_CASE("embed rejects a mismatched operator") {
    CHECK_THROWS_AS(embed(annihilation(3), Mode::Spin, ModeLayout(2, 2, 2)), InvalidDimension);
  }

  TEST_CASE("Fock product state") {
    const ModeLayout layout(3, 3, 3);
    const QState s = fock_state(layout, {1, 0, 0});
    CHECK(s.rho().trace().real() == 1.0);
    CHECK(s.rho().cwiseAbs().sum() == 1.0);
    CHECK(s.rho()(layout.index({1, 0, 0}), layout.index({1, 0, 0})).real() == 1.0);
    CHECK(occupation(s, Mode::Microwave) == doctest::Approx(1.0));
    CHECK(occupation(s, Mode::Spin) == doctest::Approx(0.0));
    CHECK(occupation(s, Mode::Optical) == doctest::Approx(0.0));
    CHECK_THROWS_AS(fock_state(layout, {3, 0, 0}), TruncationError);
  }

  TEST_CASE("coherent state amplitudes and tail") {
    const auto vacuum = coherent_state(Complex(0.0, 0.0), 6);
    CHECK(std::abs(vacuum.amplitudes(0) - 1.0) == 0.0);
    CHECK(vacuum.amplitudes.tail(5).norm() == 0.0);
    CHECK(vacuum.tail_weight == 0.0);

    // Direct summation of the untruncated tail for alpha = 1, d = 8.
    double tail = 0.0;
    double term = std::exp(-1.0);
    for (int n = 1; n < 40; ++n) {
      term /= n;
      if (n >= 8) tail += term;
    }
    const auto c = coherent_state(Complex(1.0, 0.0), 8);
    CHECK(c.tail_weight == doctest::Approx(tail).epsilon(1e-12));
    CHECK(c.tail_weight < 1.1e-5);
    CHECK(c.truncation_flagged);
    CHECK(c.amplitudes.norm() == doctest::Approx(1.0));

    const double p0 = std::norm(c.amplitudes(0)) * (1.0 - c.tail_weight);
    CHECK(p0 == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    CHECK(coherent_state(Complex(3.0, 0.0), 8).truncation_flagged);
    CHECK_FALSE(coherent_state(Complex(1.0, 0.0), 12).truncation_flagged);
  }

  TEST_CASE("superposition state") {
    const StateVector s = superposition_state(4);
    CHECK(s.norm() == doctest::Approx(1.0));
    CHECK(s(0).real() == doctest::Approx(1.0 / std::sqrt(2.0)));
    const double n = (s.adjoint() * number(4) * s)(0, 0).real();
    CHECK(n == doctest::Approx(0.5));
  }

  TEST_CASE("QState validation") {
    const ModeLayout layout(2, 2, 2);
    Operator rho = Operator::Zero(8, 8);
    rho(0, 0) = 0.5;
    CHECK_THROWS_AS(QState(layout, rho), InvalidState);
    rho(1, 1) = 0.5;
    CHECK_NOTHROW(QState(layout, rho));
    rho(0, 1) = Complex(0.0, 1e-6);
    CHECK_THROWS_AS(QState(layout, rho), InvalidState);
    Operator neg = Operator::Zero(8, 8);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(QState(layout, neg), InvalidState);
    CHECK_THROWS_AS(QState(layout, Operator::Identity(4, 4)), InvalidDimension);
  }
}
