#pragma once

#include "spinbridge/dynamics.hpp"
#include "spinbridge/microscopic.hpp"
#include "spinbridge/protocols.hpp"

#include <string>
#include <vector>

namespace spinbridge::validation {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline constexpr double kOracleTolerance = 1e-7;
inline constexpr double kMomentTolerance = 1e-6;
inline constexpr double kConservationTolerance = 1e-7;
inline constexpr double kStepHalvingTolerance = 1e-7;
inline constexpr double kTraceTolerance = 1e-7;
inline constexpr double kHermiticityTolerance = 1e-8;
inline constexpr double kEigenvalueFloor = -1e-6;
inline constexpr double kScalingExponent = 2.0;
inline constexpr double kScalingExponentTolerance = 0.5;
inline constexpr double kDickeTolerance = 1e-12;
inline constexpr int kDickeMaxSpins = 12;

// Max elementwise |evolve - exp(tau L)| over constant-coupling segments on a
// [3,3,3] layout.
double liouvillian_discrepancy(const IntegratorOptions& options);

// Max |<a_k>_evolve - <a_k>_classical| at the end of a run that started from
// `initial`.
double moment_discrepancy(const ProtocolSpec& spec, const QState& initial, const SimResult& run);

// Bounds that must hold on every run; lossless runs must also stay pure and
// conserve n_a1 + n_b + n_a2.
CheckResult run_invariants(const std::string& label, const SimResult& run, bool lossless);

// |peak(dt) - peak(dt/2)| with both peaks taken on the same sample grid.
double step_halving_change(const ProtocolSpec& spec, const ModeLayout& layout,
                           const IntegratorOptions& options,
                           int sample_count = kDefaultSamples);

CheckResult check_liouvillian(const IntegratorOptions& options);
CheckResult check_classical_moments(const IntegratorOptions& options);
CheckResult check_lossless_invariants(const IntegratorOptions& options);
CheckResult check_step_halving(const IntegratorOptions& options);
CheckResult check_effective_couplings();
CheckResult check_elimination_scaling(micro::MicroModel model);
CheckResult check_holstein_primakoff();

struct ValidationOptions {
  IntegratorOptions integrator;
  bool quick = false;  // skip the microscopic checks
};

// Each check catches its own failures, so one broken check never hides the
// others.
std::vector<CheckResult> run_validation(const ValidationOptions& options);

}  // namespace spinbridge::validation
