#pragma once

#include "spinbridge/fockspace.hpp"

#include <Eigen/Dense>

namespace spinbridge {

// Reduced density matrix of one mode.
Operator partial_trace(const QState& state, Mode keep);
Operator partial_trace(const Operator& rho, const ModeLayout& layout, Mode keep);

// Eigenvalues in [-kClampLimit, 0) are numerical noise and are clamped to zero;
// anything more negative means the state is broken.
inline constexpr double kClampLimit = 1e-6;

struct SqrtResult {
  Operator root;
  double clamped;  // magnitude of the most negative eigenvalue that was clamped
};

// Principal square root of a Hermitian PSD matrix via eigendecomposition.
SqrtResult hermitian_sqrt(const Operator& m);

struct FidelityReport {
  double value;
  double clamped;  // largest negative eigenvalue magnitude removed from either input
  bool pure_shortcut;
};

// F = (Tr sqrt(sqrt(r1) r2 sqrt(r1)))^2.
FidelityReport uhlmann_fidelity_report(const Operator& rho1, const Operator& rho2);
double uhlmann_fidelity(const Operator& rho1, const Operator& rho2);

// <a^dagger a> for one mode; tiny imaginary parts are discarded.
double occupation(const QState& state, Mode mode);
double occupation(const Operator& rho, const ModeLayout& layout, Mode mode);

// M(k, l) = <a_k^dagger a_l> over the three modes in tensor order.
Eigen::Matrix3cd second_moments(const Operator& rho, const ModeLayout& layout);

// First moments <a_k>.
Eigen::Vector3cd mean_amplitudes(const Operator& rho, const ModeLayout& layout);

double purity(const Operator& rho);

}  // namespace spinbridge
