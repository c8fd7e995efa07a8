#pragma once

#include "spinbridge/dynamics.hpp"
#include "spinbridge/fockspace.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spinbridge::micro {

// Per-spin levels. The four-level model uses all of them; the three-level
// model drops |a> and keeps (b, c, e) in that order.
enum Level { LevelA = 0, LevelB = 1, LevelC = 2, LevelE = 3 };

struct MicroConfig {
  int spins = 1;
  double g1 = 1.0;
  double g2 = 1.0;
  double omega1 = 1.0;
  double omega2 = 1.0;
  double delta1 = 20.0;
  double delta2 = 20.0;
  int d1 = 2;
  int d2 = 2;
  // Inhomogeneous detuning shifts per spin. Only all-zero shifts are
  // supported; the fields exist so configs can carry them.
  std::vector<double> shifts1;
  std::vector<double> shifts2;

  void validate() const;
  // Large-detuning condition: one message per ratio |Delta|/max(Omega, g) < 5.
  std::vector<std::string> warnings() const;
};

inline constexpr int kMaxSpins = 3;
inline constexpr int kMaxMicroDim = 4096;
inline constexpr double kDetuningRatioWarning = 5.0;

// H(t) = S + exp(i D1 t) X1 + exp(i D2 t) X2 + h.c. with S Hermitian.
struct PhasedHamiltonian {
  Operator stationary;
  Operator x1;
  double delta1 = 0.0;
  Operator x2;
  double delta2 = 0.0;

  Operator at(double t) const;
  Eigen::Index dim() const { return stationary.rows(); }
};

// Spins first (spin 1 outermost), then a1, then a2.
int four_level_dim(const MicroConfig& config);
int three_level_dim(const MicroConfig& config);

PhasedHamiltonian four_level_model(const MicroConfig& config);
PhasedHamiltonian three_level_model(const MicroConfig& config);

Operator full_hamiltonian_at(double t, const MicroConfig& config);
Operator three_level_hamiltonian_at(double t, const MicroConfig& config);

// G_k = Omega_k sqrt(N) g_k / Delta_k.
Couplings effective_couplings(const MicroConfig& config);

// (sqrt(N) g1, Omega2 sqrt(N) g2 / Delta2): the microwave link is direct.
Couplings three_level_effective(const MicroConfig& config);

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend Rational operator*(Rational a, Rational b);
  friend Rational operator/(Rational a, Rational b);
  friend bool operator==(Rational a, Rational b) = default;
};

// Omega * collective_g / Delta in exact arithmetic.
Rational effective_coupling_exact(Rational omega, Rational collective_g, Rational delta);

// Second-order effective Hamiltonians after eliminating |a> and |e>, including
// the level shifts. Written on the full spin (x) a1 (x) a2 space so they can be
// evolved side by side with the microscopic model.
Operator four_level_effective_hamiltonian(const MicroConfig& config);
Operator three_level_effective_hamiltonian(const MicroConfig& config);

// The same effective models with the level shifts dropped (beam-splitter
// couplings only).
Operator four_level_beam_splitter(const MicroConfig& config);
Operator three_level_beam_splitter(const MicroConfig& config);

// n1 + n2 + sum_j (P_c + P_e); conserved by both microscopic models.
Operator excitation_number(const MicroConfig& config, bool four_level);

enum class MicroModel { FourLevel, ThreeLevel };

struct EliminationReport {
  double deviation = 0.0;  // max |<O>_full - <O>_eff| over n1, n2 and P_c
  double beam_splitter_deviation = 0.0;  // same, against the unshifted model
  double leakage_a = 0.0;  // max total population of |a>
  double leakage_e = 0.0;  // max total population of |e>
  double excitation_drift = 0.0;  // max |<Q>(t) - <Q>(0)| in the full model
  double duration = 0.0;  // physical time simulated
};

// Adaptive Dormand-Prince with tight tolerances; the microscopic models
// oscillate at the detunings.
IntegratorOptions elimination_integrator();

// Starts from one photon in a1 with every spin in |b>, runs the microscopic
// model and the shifted effective model over `span` (in units of 1/|G1| for
// the four-level model and 1/|G2| for the three-level model).
EliminationReport adiabatic_elimination_check(const MicroConfig& config, TimeSpan span,
                                              MicroModel model = MicroModel::FourLevel,
                                              const IntegratorOptions& options = elimination_integrator());

struct ScalingReport {
  EliminationReport base;
  EliminationReport scaled;
  double factor = 2.0;
  double exponent = 0.0;  // log(base.deviation / scaled.deviation) / log(factor)
};

// Multiplies both detunings by `factor` with Omega and g fixed. The
// dimensionless dynamics is unchanged because time is measured in units of
// the effective coupling. In the three-level model g1 is divided by `factor`
// so that G1'/G2 stays fixed.
ScalingReport detuning_scaling(const MicroConfig& config, TimeSpan span, double factor = 2.0,
                               MicroModel model = MicroModel::FourLevel);

// 1 - sqrt(1 - n/N): relative error of sqrt(N) b^dagger against the exact
// collective matrix element <n+1| J_cb |n>.
double holstein_primakoff_error(int spins, int n);

// <D_{n+1}| J_cb |D_n> for symmetric Dicke states, built explicitly on the
// 2^N product basis.
inline constexpr int kMaxDickeSpins = 16;
double dicke_matrix_element(int spins, int n);

}  // namespace spinbridge::micro
