#pragma once

#include "spinbridge/dynamics.hpp"
#include "spinbridge/fockspace.hpp"

#include <utility>

namespace spinbridge::oracle {

// Closed-form beam-splitter rotation of coherent amplitudes under
// G1 (a1 b^dagger + a1^dagger b) for a time tau:
//   alpha1' = cos(G1 tau) alpha1 - i sin(G1 tau) beta
//   beta'   = cos(G1 tau) beta   - i sin(G1 tau) alpha1
std::pair<Complex, Complex> heisenberg_swap_amplitudes(Complex alpha1, Complex beta, double tau,
                                                       double g1);

// Dense Liouvillian on column-stacked vec(rho): vec(A rho B) = (B^T kron A) vec(rho).
Operator liouvillian(const Operator& hamiltonian, const ModeLayout& layout,
                     const DecayRates& decay);

// Largest Liouvillian dimension (dim^2) the dense oracle accepts.
inline constexpr int kMaxLiouvillianDim = 4096;

// rho(tau) = exp(tau L)[rho(0)] for a constant Hamiltonian.
QState liouvillian_exponential_evolve(const QState& initial, const Operator& hamiltonian,
                                      const DecayRates& decay, double tau);

// Matrix exponential (scaling and squaring with Pade approximants).
Operator expm(const Operator& m);

// Truncated Taylor series summed until terms fall below 1e-18 relative; only
// meant for small, well-scaled test matrices.
Operator expm_series(const Operator& m);

// Classical first-moment equations d<a>/dtau = (-i G(tau) - K/2) <a> for the
// mode vector (a1, b, a2), integrated segment-wise with 3x3 exponentials on a
// fine grid. Each substep is a fourth-order Magnus step, which is exact on
// constant segments.
Eigen::Vector3cd classical_mode_amplitudes(const PulseSchedule& schedule, const DecayRates& decay,
                                           const Eigen::Vector3cd& initial, TimeSpan span,
                                           int substeps_per_unit = 2000);

// Coherent input |alpha> through the lossless double swap with both swap
// segments lengthened by `timing_error`. Amplitudes follow the classical mode
// equations and F = exp(-|alpha_target - alpha_actual|^2) with target -alpha.
double lossless_coherent_fidelity(Complex alpha, double timing_error);

}  // namespace spinbridge::oracle
