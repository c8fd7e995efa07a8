#include "spinbridge/protocols.hpp"

#include "spinbridge/metrics.hpp"

#include <cmath>
#include <future>
#include <numbers>
#include <sstream>

namespace spinbridge {

std::string initial_name(const InitialKind& kind) {
  if (std::holds_alternative<Fock1>(kind)) return "fock1";
  if (std::holds_alternative<Superposition>(kind)) return "superposition";
  return "coherent";
}

void ProtocolSpec::validate() const {
  if (!std::isfinite(window.start) || !std::isfinite(window.end) || !(window.start < window.end)) {
    throw std::invalid_argument("protocol window must be finite with start < end");
  }
}

ScheduledWindow double_swap_schedule(double g1, double g2) {
  if (!(g1 > 0.0) || !(g2 > 0.0)) {
    throw InvalidSchedule("double-swap couplings must be > 0");
  }
  const double t1 = std::numbers::pi / (2.0 * g1);
  const double t2 = t1 + std::numbers::pi / (2.0 * g2);
  return {PulseSchedule(PiecewiseSwap{g1, g2, 0.0, t1, t2}), TimeSpan{0.0, t2}};
}

PulseSchedule dark_state_schedule(const DarkStatePulses& p) {
  return PulseSchedule(
      GaussianPair{p.amplitude1, p.center1, p.width1, p.amplitude2, p.center2, p.width2});
}

double mixing_angle(const Couplings& g, double previous) {
  if (g.g1 == 0.0 && g.g2 == 0.0) return previous;
  return std::atan2(g.g1, g.g2);
}

double mixing_angle(double tau, const PulseSchedule& schedule, double previous) {
  return mixing_angle(schedule.at(tau), previous);
}

HybridModes hybrid_modes(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double r = 1.0 / std::numbers::sqrt2;
  HybridModes m;
  m.dark = {-c, 0.0, s};
  m.bright = {s, 0.0, c};
  m.plus = r * (m.bright + Eigen::Vector3d(0.0, 1.0, 0.0));
  m.minus = r * (m.bright - Eigen::Vector3d(0.0, 1.0, 0.0));
  return m;
}

double mode_occupation(const Operator& rho, const ModeLayout& layout,
                       const Eigen::Vector3d& u) {
  const Eigen::Matrix3cd m = second_moments(rho, layout);
  const Eigen::Vector3cd uc = u.cast<Complex>();
  return (uc.adjoint() * m * uc)(0, 0).real();
}

double dark_mode_occupation(const Operator& rho, const ModeLayout& layout, double theta) {
  return mode_occupation(rho, layout, hybrid_modes(theta).dark);
}

double dark_mode_occupation(const QState& state, double theta) {
  return dark_mode_occupation(state.rho(), state.layout(), theta);
}

HybridFrequencies hybrid_mode_frequencies(double nu1, double nu_s, double nu2) {
  const double split = std::hypot(nu1, nu2);
  return {nu_s, nu_s + split, nu_s - split};
}

StateVector initial_ket(const InitialKind& kind, int dim) {
  if (std::holds_alternative<Fock1>(kind)) return basis_ket(dim, 1);
  if (std::holds_alternative<Superposition>(kind)) return superposition_state(dim);
  return coherent_state(std::get<Coherent>(kind).alpha, dim).amplitudes;
}

QState initial_state(const InitialKind& kind, const ModeLayout& layout) {
  return product_state(layout, initial_ket(kind, layout.dim(Mode::Microwave)),
                       basis_ket(layout.dim(Mode::Spin), 0),
                       basis_ket(layout.dim(Mode::Optical), 0));
}

ModeLayout default_layout(const InitialKind& kind) {
  if (std::holds_alternative<Coherent>(kind)) return ModeLayout(8, 8, 8);
  return ModeLayout(6, 6, 6);
}

ProtocolSpec double_swap_spec(const InitialKind& initial, const DecayRates& decay) {
  auto sw = double_swap_schedule(1.0, 1.0);
  return ProtocolSpec{ProtocolKind::DoubleSwap, sw.schedule, sw.window, initial, decay, true};
}

ProtocolSpec dark_state_spec(const InitialKind& initial, const DecayRates& decay) {
  return ProtocolSpec{ProtocolKind::DarkState, dark_state_schedule(), kDarkStateWindow, initial,
                      decay, true};
}

SimResult run_protocol(const ProtocolSpec& spec, const ModeLayout& layout,
                       const IntegratorOptions& options, int sample_count) {
  spec.validate();
  const QState initial = initial_state(spec.initial, layout);
  // Target is the initial microwave state; the transfer maps a1 -> -a2, so
  // the optical state is compared after exp(i pi n) when correcting phase.
  const StateVector ket = initial_ket(spec.initial, layout.dim(Mode::Microwave));
  FidelityReference ref{ket * ket.adjoint(), spec.phase_correction};
  return evolve(initial, spec.schedule, spec.decay, spec.window, options, sample_count, ref);
}

std::vector<SimResult> sweep_spin_decay(const ProtocolSpec& spec,
                                        const std::vector<double>& gammas,
                                        const ModeLayout& layout,
                                        const IntegratorOptions& options, int sample_count) {
  for (double g : gammas) {
    if (!(g >= 0.0) || !std::isfinite(g)) {
      throw std::invalid_argument("spin decay rates must be finite and >= 0");
    }
  }
  std::vector<std::future<SimResult>> jobs;
  jobs.reserve(gammas.size());
  for (double g : gammas) {
    ProtocolSpec entry = spec;
    entry.decay = DecayRates(spec.decay.kappa1, g, spec.decay.kappa2);
    jobs.push_back(std::async(std::launch::async, [entry, layout, options, sample_count] {
      return run_protocol(entry, layout, options, sample_count);
    }));
  }
  std::vector<SimResult> results;
  results.reserve(jobs.size());
  for (auto& job : jobs) results.push_back(job.get());
  return results;
}

}  // namespace spinbridge
