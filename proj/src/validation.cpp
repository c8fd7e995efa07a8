#include "spinbridge/validation.hpp"

#include "spinbridge/metrics.hpp"
#include "spinbridge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

namespace spinbridge::validation {

namespace {

std::string format(double v) {
  std::ostringstream out;
  out.precision(3);
  out << v;
  return out.str();
}

CheckResult guarded(const std::string& name, const std::function<CheckResult()>& body) {
  try {
    CheckResult r = body();
    r.name = name;
    return r;
  } catch (const std::exception& e) {
    return {name, false, std::string("error: ") + e.what()};
  }
}

const std::vector<InitialKind>& all_initials() {
  static const std::vector<InitialKind> kinds = {Fock1{}, Superposition{}, Coherent{}};
  return kinds;
}

}  // namespace

double liouvillian_discrepancy(const IntegratorOptions& options) {
  const ModeLayout layout(3, 3, 3);
  struct Segment {
    ConstantCoupling coupling;
    DecayRates decay;
    QState initial;
    double tau;
  };
  const double quarter = 0.5 * std::numbers::pi;
  const std::vector<Segment> segments = {
      {{1.0, 0.0}, DecayRates::lossless(), initial_state(Fock1{}, layout), quarter},
      {{0.0, 1.0}, DecayRates::lossy_defaults(), fock_state(layout, {0, 1, 0}), quarter},
      {{1.0, 1.45}, DecayRates::lossy_defaults(), initial_state(Superposition{}, layout), 2.0},
  };
  double worst = 0.0;
  for (const auto& s : segments) {
    const PulseSchedule schedule(s.coupling);
    const SimResult run = evolve(s.initial, schedule, s.decay, {0.0, s.tau}, options, 3);
    const QState reference = oracle::liouvillian_exponential_evolve(
        s.initial, hamiltonian_at(0.0, schedule, layout), s.decay, s.tau);
    worst = std::max(worst, (run.final_state.rho() - reference.rho()).cwiseAbs().maxCoeff());
  }
  return worst;
}

double moment_discrepancy(const ProtocolSpec& spec, const QState& initial, const SimResult& run) {
  const Eigen::Vector3cd start = mean_amplitudes(initial.rho(), initial.layout());
  const Eigen::Vector3cd expected =
      oracle::classical_mode_amplitudes(spec.schedule, spec.decay, start, spec.window);
  const Eigen::Vector3cd actual =
      mean_amplitudes(run.final_state.rho(), run.final_state.layout());
  return (actual - expected).cwiseAbs().maxCoeff();
}

CheckResult run_invariants(const std::string& label, const SimResult& run, bool lossless) {
  const auto& d = run.diagnostics;
  bool ok = d.max_trace_deviation <= kTraceTolerance &&
            d.max_hermiticity_deviation <= kHermiticityTolerance &&
            d.min_eigenvalue >= kEigenvalueFloor;
  std::ostringstream detail;
  detail << label << ": trace " << format(d.max_trace_deviation) << ", hermiticity "
         << format(d.max_hermiticity_deviation) << ", min eigenvalue "
         << format(d.min_eigenvalue);
  if (lossless) {
    const double total0 = run.n_a1.front() + run.n_b.front() + run.n_a2.front();
    double drift = 0.0;
    for (std::size_t i = 0; i < run.times.size(); ++i) {
      drift = std::max(drift, std::abs(run.n_a1[i] + run.n_b[i] + run.n_a2[i] - total0));
    }
    const double purity_loss = 1.0 - d.min_purity;
    ok = ok && drift <= kConservationTolerance && purity_loss <= kConservationTolerance;
    detail << ", excitation drift " << format(drift) << ", purity loss " << format(purity_loss);
  }
  return {label, ok, detail.str()};
}

double step_halving_change(const ProtocolSpec& spec, const ModeLayout& layout,
                           const IntegratorOptions& options, int sample_count) {
  IntegratorOptions fine = options;
  fine.dt_max *= 0.5;
  fine.dt_min = std::min(fine.dt_min, fine.dt_max);
  fine.rel_tol *= 0.5;
  fine.abs_tol *= 0.5;
  // Sample times are integration nodes too, so the fine run also halves the
  // sample spacing; its peak is taken on the coarse grid.
  const SimResult coarse = run_protocol(spec, layout, options, sample_count);
  const SimResult refined = run_protocol(spec, layout, fine, 2 * sample_count - 1);
  double fine_peak = 0.0;
  for (std::size_t i = 0; i < refined.fidelity.size(); i += 2) {
    fine_peak = std::max(fine_peak, refined.fidelity[i]);
  }
  return std::abs(coarse.peak_fidelity().fidelity - fine_peak);
}

CheckResult check_liouvillian(const IntegratorOptions& options) {
  return guarded("oracle: evolve vs Liouvillian exponential", [&] {
    const double diff = liouvillian_discrepancy(options);
    return CheckResult{"", diff <= kOracleTolerance,
                       "max elementwise difference " + format(diff) + " (limit " +
                           format(kOracleTolerance) + ")"};
  });
}

CheckResult check_classical_moments(const IntegratorOptions& options) {
  return guarded("oracle: coherent first moments", [&] {
    const auto spec = double_swap_spec(Coherent{}, DecayRates::lossy_defaults());
    const ModeLayout layout = default_layout(spec.initial);
    const QState initial = initial_state(spec.initial, layout);
    const SimResult run = run_protocol(spec, layout, options);
    const double diff = moment_discrepancy(spec, initial, run);
    return CheckResult{"", diff <= kMomentTolerance,
                       "double swap, lossy: max amplitude difference " + format(diff) +
                           " (limit " + format(kMomentTolerance) + ")"};
  });
}

CheckResult check_lossless_invariants(const IntegratorOptions& options) {
  return guarded("invariants: lossless double swap", [&] {
    CheckResult all{"", true, ""};
    for (const auto& kind : all_initials()) {
      const auto spec = double_swap_spec(kind, DecayRates::lossless());
      const SimResult run = run_protocol(spec, default_layout(kind), options);
      const CheckResult r = run_invariants(initial_name(kind), run, true);
      all.passed = all.passed && r.passed;
      all.detail += (all.detail.empty() ? "" : "; ") + r.detail;
    }
    return all;
  });
}

CheckResult check_step_halving(const IntegratorOptions& options) {
  return guarded("invariants: step halving", [&] {
    // A sparse sample grid, so the configured step and not the sample spacing
    // limits the integrator.
    constexpr int kSparseSamples = 33;
    double worst = 0.0;
    for (const InitialKind& kind : {InitialKind{Fock1{}}, InitialKind{Superposition{}}}) {
      const auto spec = double_swap_spec(kind, DecayRates::lossy_defaults());
      worst = std::max(worst, step_halving_change(spec, default_layout(kind), options,
                                                  kSparseSamples));
    }
    return CheckResult{"", worst <= kStepHalvingTolerance,
                       "peak fidelity change " + format(worst) + " (limit " +
                           format(kStepHalvingTolerance) + ")"};
  });
}

CheckResult check_effective_couplings() {
  return guarded("microscopic: effective couplings", [] {
    using micro::Rational;
    const Rational g1 = micro::effective_coupling_exact(Rational::make(20, 1),
                                                        Rational::make(10, 1),
                                                        Rational::make(200, 1));
    const Rational g2 = micro::effective_coupling_exact(Rational::make(200, 1),
                                                        Rational::make(500, 1),
                                                        Rational::make(100000, 1));
    const Rational one = Rational::make(1, 1);
    micro::MicroConfig c;
    c.spins = 1;
    c.g1 = 10.0;
    c.omega1 = 20.0;
    c.delta1 = 200.0;
    c.g2 = 500.0;
    c.omega2 = 200.0;
    c.delta2 = 1e5;
    const Couplings g = micro::effective_couplings(c);
    const bool ok = g1 == one && g2 == one && g.g1 == 1.0 && g.g2 == 1.0;
    std::ostringstream detail;
    detail << "G1 = " << g1.num << "/" << g1.den << ", G2 = " << g2.num << "/" << g2.den
           << " in units of 2 pi MHz";
    return CheckResult{"", ok, detail.str()};
  });
}

CheckResult check_elimination_scaling(micro::MicroModel model) {
  const bool four = model == micro::MicroModel::FourLevel;
  return guarded(four ? "microscopic: four-level elimination scaling"
                      : "microscopic: three-level elimination scaling",
                 [&] {
                   micro::MicroConfig c;
                   if (!four) c.g1 = c.omega2 * c.g2 / c.delta2;
                   const auto r =
                       micro::detuning_scaling(c, {0.0, 2.0 * std::numbers::pi}, 2.0, model);
                   const bool ok =
                       std::abs(r.exponent - kScalingExponent) <= kScalingExponentTolerance &&
                       r.scaled.deviation < r.base.deviation &&
                       r.base.excitation_drift <= kConservationTolerance &&
                       r.scaled.excitation_drift <= kConservationTolerance;
                   std::ostringstream detail;
                   detail << "deviation " << format(r.base.deviation) << " -> "
                          << format(r.scaled.deviation) << ", exponent " << format(r.exponent)
                          << ", excitation drift "
                          << format(std::max(r.base.excitation_drift, r.scaled.excitation_drift));
                   return CheckResult{"", ok, detail.str()};
                 });
}

CheckResult check_holstein_primakoff() {
  return guarded("microscopic: Holstein-Primakoff vs Dicke", [] {
    double worst = 0.0;
    bool monotone = true;
    for (int spins = 1; spins <= kDickeMaxSpins; ++spins) {
      double previous = -1.0;
      for (int n = 0; n < spins; ++n) {
        const double exact = micro::dicke_matrix_element(spins, n);
        const double ratio = exact / std::sqrt(static_cast<double>(spins) * (n + 1));
        const double closed = micro::holstein_primakoff_error(spins, n);
        worst = std::max(worst, std::abs((1.0 - ratio) - closed));
        monotone = monotone && closed > previous;
        if (spins > 1 && n < spins - 1) {
          monotone = monotone && closed <= micro::holstein_primakoff_error(spins - 1, n);
        }
        previous = closed;
      }
    }
    return CheckResult{"", worst <= kDickeTolerance && monotone,
                       "max difference " + format(worst) + " for N <= " +
                           std::to_string(kDickeMaxSpins) +
                           (monotone ? ", monotone" : ", not monotone")};
  });
}

std::vector<CheckResult> run_validation(const ValidationOptions& options) {
  std::vector<CheckResult> out;
  out.push_back(check_liouvillian(options.integrator));
  out.push_back(check_classical_moments(options.integrator));
  out.push_back(check_lossless_invariants(options.integrator));
  out.push_back(check_step_halving(options.integrator));
  if (!options.quick) {
    out.push_back(check_effective_couplings());
    out.push_back(check_elimination_scaling(micro::MicroModel::FourLevel));
    out.push_back(check_elimination_scaling(micro::MicroModel::ThreeLevel));
    out.push_back(check_holstein_primakoff());
  }
  return out;
}

}  // namespace spinbridge::validation
