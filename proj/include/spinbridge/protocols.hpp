#pragma once

#include "spinbridge/dynamics.hpp"
#include "spinbridge/fockspace.hpp"

#include <string>
#include <variant>
#include <vector>

namespace spinbridge {

enum class ProtocolKind { DoubleSwap, DarkState };

struct Fock1 {};
struct Superposition {};
struct Coherent {
  Complex alpha{1.0, 0.0};
};
using InitialKind = std::variant<Fock1, Superposition, Coherent>;

std::string initial_name(const InitialKind& kind);

struct ProtocolSpec {
  ProtocolKind kind;
  PulseSchedule schedule;
  TimeSpan window;
  InitialKind initial;
  DecayRates decay;
  bool phase_correction = true;

  void validate() const;
};

struct ScheduledWindow {
  PulseSchedule schedule;
  TimeSpan window;
};

// Swap a1 -> b with G1 for pi/(2 G1), then b -> a2 with G2 for pi/(2 G2),
// starting at tau = 0.
ScheduledWindow double_swap_schedule(double g1, double g2);

struct DarkStatePulses {
  double amplitude1 = 1.0;
  double center1 = 2.8;
  double width1 = 20.0;
  double amplitude2 = 1.45;
  double center2 = 0.0;
  double width2 = 6.0;
};

PulseSchedule dark_state_schedule(const DarkStatePulses& pulses = {});

inline constexpr TimeSpan kDarkStateWindow{-6.0, 12.0};

// theta = atan2(G1, G2) in [0, pi/2]. When both couplings vanish the angle is
// undefined and `previous` is returned unchanged.
double mixing_angle(const Couplings& g, double previous = 0.0);
double mixing_angle(double tau, const PulseSchedule& schedule, double previous = 0.0);

// Coefficients (a1, b, a2) of the hybridized modes.
//   c_d = -cos(theta) a1 + sin(theta) a2
//   c_b =  sin(theta) a1 + cos(theta) a2
//   c_pm = (c_b +- b) / sqrt(2)
struct HybridModes {
  Eigen::Vector3d dark;
  Eigen::Vector3d bright;
  Eigen::Vector3d plus;
  Eigen::Vector3d minus;
};
HybridModes hybrid_modes(double theta);

// <c^dagger c> for c = sum_k u_k a_k.
double mode_occupation(const Operator& rho, const ModeLayout& layout,
                       const Eigen::Vector3d& coefficients);

double dark_mode_occupation(const Operator& rho, const ModeLayout& layout, double theta);
double dark_mode_occupation(const QState& state, double theta);

struct HybridFrequencies {
  double dark;
  double plus;
  double minus;
};
HybridFrequencies hybrid_mode_frequencies(double nu1, double nu_s, double nu2);

// Initial ket for the microwave cavity.
StateVector initial_ket(const InitialKind& kind, int dim);

// Initial a1 state with b and a2 in vacuum.
QState initial_state(const InitialKind& kind, const ModeLayout& layout);

// Default truncation: [6,6,6], or [8,8,8] for coherent inputs.
ModeLayout default_layout(const InitialKind& kind);

inline constexpr int kDefaultSamples = 1001;

ProtocolSpec double_swap_spec(const InitialKind& initial, const DecayRates& decay);
ProtocolSpec dark_state_spec(const InitialKind& initial, const DecayRates& decay);

SimResult run_protocol(const ProtocolSpec& spec, const ModeLayout& layout,
                       const IntegratorOptions& options = {}, int sample_count = kDefaultSamples);

inline const std::vector<double> kDefaultSpinDecaySweep = {0.01, 0.03, 0.06, 0.1};

// One run per gamma_s value, other parameters taken from `spec`. Runs
// concurrently; results come back in input order.
std::vector<SimResult> sweep_spin_decay(const ProtocolSpec& spec,
                                        const std::vector<double>& gammas,
                                        const ModeLayout& layout,
                                        const IntegratorOptions& options = {},
                                        int sample_count = kDefaultSamples);

}  // namespace spinbridge
