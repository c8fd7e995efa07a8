#include "spinbridge/oracle.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace spinbridge::oracle {

std::pair<Complex, Complex> heisenberg_swap_amplitudes(Complex alpha1, Complex beta, double tau,
                                                       double g1) {
  const double c = std::cos(g1 * tau);
  const Complex is(0.0, std::sin(g1 * tau));
  return {c * alpha1 - is * beta, c * beta - is * alpha1};
}

Operator liouvillian(const Operator& h, const ModeLayout& layout, const DecayRates& decay) {
  const int n = layout.total();
  if (h.rows() != n || h.cols() != n) throw InvalidDimension("Hamiltonian does not match layout");
  if (n * n > kMaxLiouvillianDim) {
    throw InvalidDimension("Liouvillian dimension " + std::to_string(n * n) +
                           " exceeds the dense oracle limit " +
                           std::to_string(kMaxLiouvillianDim));
  }
  const Operator id = Operator::Identity(n, n);
  Operator l = Complex(0.0, -1.0) * (kron(id, h) - kron(h.transpose(), id));
  const std::array<double, 3> rates = {decay.kappa1, decay.gamma_s, decay.kappa2};
  for (int k = 0; k < 3; ++k) {
    if (rates[k] == 0.0) continue;
    const Mode mode = static_cast<Mode>(k);
    const Operator a = embed(annihilation(layout.dim(mode)), mode, layout);
    const Operator ada = a.adjoint() * a;
    l += rates[k] * (kron(a.conjugate(), a) - 0.5 * kron(id, ada) - 0.5 * kron(ada.transpose(), id));
  }
  return l;
}

Operator expm(const Operator& m) { return m.exp(); }

Operator expm_series(const Operator& m) {
  const Eigen::Index n = m.rows();
  Operator sum = Operator::Identity(n, n);
  Operator term = Operator::Identity(n, n);
  for (int k = 1; k < 400; ++k) {
    term = term * m / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18 * std::max(1.0, sum.cwiseAbs().maxCoeff())) break;
  }
  return sum;
}

QState liouvillian_exponential_evolve(const QState& initial, const Operator& hamiltonian,
                                      const DecayRates& decay, double tau) {
  const ModeLayout& layout = initial.layout();
  const int n = layout.total();
  const Operator l = liouvillian(hamiltonian, layout, decay);
  const Operator propagator = expm(tau * l);
  const Eigen::Map<const Eigen::VectorXcd> vec(initial.rho().data(), n * n);
  const Eigen::VectorXcd out = propagator * vec;
  Operator rho = Eigen::Map<const Operator>(out.data(), n, n);
  return QState(layout, std::move(rho), {1e-9, 1e-8, -1e-8});
}

namespace {

Eigen::Matrix3cd mode_matrix(const Couplings& g, const DecayRates& decay) {
  Eigen::Matrix3cd a = Eigen::Matrix3cd::Zero();
  const Complex mi(0.0, -1.0);
  a(0, 1) = a(1, 0) = mi * g.g1;
  a(2, 1) = a(1, 2) = mi * g.g2;
  a(0, 0) = -0.5 * decay.kappa1;
  a(1, 1) = -0.5 * decay.gamma_s;
  a(2, 2) = -0.5 * decay.kappa2;
  return a;
}

}  // namespace

Eigen::Vector3cd classical_mode_amplitudes(const PulseSchedule& schedule, const DecayRates& decay,
                                           const Eigen::Vector3cd& initial, TimeSpan span,
                                           int substeps_per_unit) {
  if (!(span.end >= span.start)) throw std::invalid_argument("time span must be ordered");
  std::vector<double> nodes = {span.start};
  for (double b : schedule.breakpoints()) {
    if (b > span.start && b < span.end) nodes.push_back(b);
  }
  nodes.push_back(span.end);
  std::sort(nodes.begin(), nodes.end());

  // Fourth-order Magnus step with two Gauss-Legendre nodes per substep.
  const double gl = std::sqrt(3.0) / 6.0;
  Eigen::Vector3cd amp = initial;
  for (std::size_t p = 1; p < nodes.size(); ++p) {
    const double a = nodes[p - 1];
    const double b = nodes[p];
    if (b <= a) continue;
    const int steps = std::max(1, static_cast<int>(std::ceil((b - a) * substeps_per_unit)));
    const double h = (b - a) / steps;
    for (int s = 0; s < steps; ++s) {
      const double t = a + s * h;
      // Gauss nodes lie strictly inside the piece, so one-sided limits never matter.
      const Eigen::Matrix3cd a1 = mode_matrix(schedule.at(t + (0.5 - gl) * h), decay);
      const Eigen::Matrix3cd a2 = mode_matrix(schedule.at(t + (0.5 + gl) * h), decay);
      const Eigen::Matrix3cd omega =
          0.5 * h * (a1 + a2) + (std::sqrt(3.0) / 12.0) * h * h * (a2 * a1 - a1 * a2);
      amp = omega.exp() * amp;
    }
  }
  return amp;
}

double lossless_coherent_fidelity(Complex alpha, double timing_error) {
  const double segment = 0.5 * std::numbers::pi + timing_error;
  const auto [a1, b1] = heisenberg_swap_amplitudes(alpha, 0.0, segment, 1.0);
  (void)a1;
  const auto [a2, b2] = heisenberg_swap_amplitudes(Complex(0.0, 0.0), b1, segment, 1.0);
  (void)b2;
  return std::exp(-std::norm(-alpha - a2));
}

}  // namespace spinbridge::oracle
