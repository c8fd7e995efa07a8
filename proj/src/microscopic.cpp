#include "spinbridge/microscopic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace spinbridge::micro {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be finite");
}

// Spin (x) a1 (x) a2 space with `levels` states per spin.
class SpinCavitySpace {
 public:
  SpinCavitySpace(int levels, int spins, int d1, int d2)
      : levels_(levels), spins_(spins), d1_(d1), d2_(d2) {
    spin_dim_ = 1;
    for (int j = 0; j < spins; ++j) spin_dim_ *= levels;
  }

  int dim() const { return spin_dim_ * d1_ * d2_; }

  // |to><from| acting on spin j.
  Operator transition(int j, int to, int from) const {
    Operator p = Operator::Zero(levels_, levels_);
    p(to, from) = 1.0;
    int before = 1;
    for (int k = 0; k < j; ++k) before *= levels_;
    const int after = spin_dim_ / (before * levels_);
    const Operator spin = kron(kron(identity_or_one(before), p), identity_or_one(after));
    return kron(spin, identity_or_one(d1_ * d2_));
  }

  // Sum over spins of |to><from|.
  Operator collective(int to, int from) const {
    Operator out = Operator::Zero(dim(), dim());
    for (int j = 0; j < spins_; ++j) out += transition(j, to, from);
    return out;
  }

  Operator a1() const {
    return kron(kron(identity_or_one(spin_dim_), annihilation(d1_)), identity_or_one(d2_));
  }
  Operator a2() const {
    return kron(identity_or_one(spin_dim_ * d1_), annihilation(d2_));
  }

  // Every spin in `level`, n1 photons in a1, none in a2.
  StateVector ground_with_photon(int level, int n1) const {
    int spin_index = 0;
    for (int j = 0; j < spins_; ++j) spin_index = spin_index * levels_ + level;
    StateVector psi = StateVector::Zero(dim());
    psi((spin_index * d1_ + n1) * d2_) = 1.0;
    return psi;
  }

 private:
  static Operator identity_or_one(int n) { return Operator::Identity(n, n); }

  int levels_;
  int spins_;
  int d1_;
  int d2_;
  int spin_dim_;
};

// Level indices inside each model.
struct LevelMap {
  int levels;
  int a;  // -1 when absent
  int b;
  int c;
  int e;
};

constexpr LevelMap kFourLevel{4, LevelA, LevelB, LevelC, LevelE};
constexpr LevelMap kThreeLevel{3, -1, 0, 1, 2};

void check_model_size(const MicroConfig& config, int levels) {
  config.validate();
  if (config.spins > kMaxSpins) {
    throw InvalidDimension("microscopic models support at most " + std::to_string(kMaxSpins) +
                           " spins");
  }
  long dim = static_cast<long>(config.d1) * config.d2;
  for (int j = 0; j < config.spins; ++j) dim *= levels;
  if (dim > kMaxMicroDim) {
    throw InvalidDimension("microscopic dimension " + std::to_string(dim) + " exceeds " +
                           std::to_string(kMaxMicroDim));
  }
}

SpinCavitySpace space_for(const MicroConfig& config, const LevelMap& map) {
  check_model_size(config, map.levels);
  return SpinCavitySpace(map.levels, config.spins, config.d1, config.d2);
}

Operator hermitian_part_of_hopping(const Operator& x) { return x + x.adjoint(); }

}  // namespace

void MicroConfig::validate() const {
  if (spins < 1) throw std::invalid_argument("spin count must be >= 1");
  if (d1 < 2 || d2 < 2) throw InvalidDimension("cavity dimensions must be >= 2");
  require_finite(g1, "g1");
  require_finite(g2, "g2");
  require_finite(omega1, "Omega1");
  require_finite(omega2, "Omega2");
  require_finite(delta1, "Delta1");
  require_finite(delta2, "Delta2");
  if (delta1 == 0.0 || delta2 == 0.0) throw std::invalid_argument("detunings must be nonzero");
  for (const auto* shifts : {&shifts1, &shifts2}) {
    if (!shifts->empty() && static_cast<int>(shifts->size()) != spins) {
      throw std::invalid_argument("inhomogeneous shifts need one entry per spin");
    }
    if (std::any_of(shifts->begin(), shifts->end(), [](double s) { return s != 0.0; })) {
      throw std::invalid_argument("nonzero inhomogeneous shifts are not supported");
    }
  }
}

std::vector<std::string> MicroConfig::warnings() const {
  std::vector<std::string> out;
  auto check = [&](int k, double delta, double omega, double g) {
    const double scale = std::max(std::abs(omega), std::abs(g));
    if (scale == 0.0) return;
    const double ratio = std::abs(delta) / scale;
    if (ratio < kDetuningRatioWarning) {
      std::ostringstream msg;
      msg << "|Delta" << k << "| / max(|Omega" << k << "|, |g" << k << "|) = " << ratio
          << " is below " << kDetuningRatioWarning << "; adiabatic elimination is unreliable";
      out.push_back(msg.str());
    }
  };
  check(1, delta1, omega1, g1);
  check(2, delta2, omega2, g2);
  return out;
}

Operator PhasedHamiltonian::at(double t) const {
  const Operator phased = std::exp(Complex(0.0, delta1 * t)) * x1 +
                          std::exp(Complex(0.0, delta2 * t)) * x2;
  return stationary + phased + phased.adjoint();
}

int four_level_dim(const MicroConfig& config) {
  return space_for(config, kFourLevel).dim();
}

int three_level_dim(const MicroConfig& config) {
  return space_for(config, kThreeLevel).dim();
}

PhasedHamiltonian four_level_model(const MicroConfig& config) {
  const auto m = kFourLevel;
  const SpinCavitySpace s = space_for(config, m);
  PhasedHamiltonian h;
  h.stationary = Operator::Zero(s.dim(), s.dim());
  h.x1 = config.g1 * s.a1() * s.collective(m.c, m.a) + config.omega1 * s.collective(m.b, m.a);
  h.x2 = config.g2 * s.a2() * s.collective(m.e, m.b) + config.omega2 * s.collective(m.e, m.c);
  h.delta1 = config.delta1;
  h.delta2 = config.delta2;
  return h;
}

PhasedHamiltonian three_level_model(const MicroConfig& config) {
  const auto m = kThreeLevel;
  const SpinCavitySpace s = space_for(config, m);
  PhasedHamiltonian h;
  h.stationary = config.g1 * hermitian_part_of_hopping(s.a1() * s.collective(m.c, m.b));
  h.x1 = Operator::Zero(s.dim(), s.dim());
  h.x2 = config.g2 * s.a2() * s.collective(m.e, m.b) + config.omega2 * s.collective(m.e, m.c);
  h.delta1 = 0.0;
  h.delta2 = config.delta2;
  return h;
}

Operator full_hamiltonian_at(double t, const MicroConfig& config) {
  return four_level_model(config).at(t);
}

Operator three_level_hamiltonian_at(double t, const MicroConfig& config) {
  return three_level_model(config).at(t);
}

Couplings effective_couplings(const MicroConfig& config) {
  config.validate();
  const double root_n = std::sqrt(static_cast<double>(config.spins));
  return {config.omega1 * root_n * config.g1 / config.delta1,
          config.omega2 * root_n * config.g2 / config.delta2};
}

Couplings three_level_effective(const MicroConfig& config) {
  config.validate();
  const double root_n = std::sqrt(static_cast<double>(config.spins));
  return {root_n * config.g1, config.omega2 * root_n * config.g2 / config.delta2};
}

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("rational overflow");
  return out;
}

}  // namespace

Rational operator*(Rational a, Rational b) {
  const std::int64_t g1 = std::gcd(a.num, b.den);
  const std::int64_t g2 = std::gcd(b.num, a.den);
  const std::int64_t s1 = g1 == 0 ? 1 : g1;
  const std::int64_t s2 = g2 == 0 ? 1 : g2;
  return Rational::make(checked_mul(a.num / s1, b.num / s2), checked_mul(a.den / s2, b.den / s1));
}

Rational operator/(Rational a, Rational b) {
  if (b.num == 0) throw std::invalid_argument("division by a zero rational");
  return a * Rational::make(b.den, b.num);
}

Rational effective_coupling_exact(Rational omega, Rational collective_g, Rational delta) {
  if (delta.num == 0) throw std::invalid_argument("detuning must be nonzero");
  return omega * collective_g / delta;
}

// Second-order elimination of the far-detuned transitions of the microscopic
// model. Each detuned group h exp(i D t) contributes -(1/D)[h^dagger, h];
// terms needing population in |a> or |e> are dropped.
Operator four_level_effective_hamiltonian(const MicroConfig& config) {
  const auto m = kFourLevel;
  const SpinCavitySpace s = space_for(config, m);
  const Operator a1 = s.a1();
  const Operator a2 = s.a2();
  const double d1 = config.delta1;
  const double d2 = config.delta2;
  Operator h = Operator::Zero(s.dim(), s.dim());
  h += (config.omega1 * config.omega1 / d1) * s.collective(m.b, m.b);
  h += (config.g1 * config.g1 / d1) * a1 * a1.adjoint() * s.collective(m.c, m.c);
  h -= (config.g2 * config.g2 / d2) * a2.adjoint() * a2 * s.collective(m.b, m.b);
  h -= (config.omega2 * config.omega2 / d2) * s.collective(m.c, m.c);
  return h + four_level_beam_splitter(config);
}

Operator four_level_beam_splitter(const MicroConfig& config) {
  const auto m = kFourLevel;
  const SpinCavitySpace s = space_for(config, m);
  const Operator raise = s.collective(m.c, m.b);
  const double g1 = config.omega1 * config.g1 / config.delta1;
  const double g2 = -config.omega2 * config.g2 / config.delta2;
  return g1 * hermitian_part_of_hopping(s.a1() * raise) +
         g2 * hermitian_part_of_hopping(s.a2() * raise);
}

Operator three_level_effective_hamiltonian(const MicroConfig& config) {
  const auto m = kThreeLevel;
  const SpinCavitySpace s = space_for(config, m);
  const Operator a2 = s.a2();
  const double d2 = config.delta2;
  Operator h = Operator::Zero(s.dim(), s.dim());
  h -= (config.g2 * config.g2 / d2) * a2.adjoint() * a2 * s.collective(m.b, m.b);
  h -= (config.omega2 * config.omega2 / d2) * s.collective(m.c, m.c);
  return h + three_level_beam_splitter(config);
}

Operator three_level_beam_splitter(const MicroConfig& config) {
  const auto m = kThreeLevel;
  const SpinCavitySpace s = space_for(config, m);
  const Operator raise = s.collective(m.c, m.b);
  const double g2 = -config.omega2 * config.g2 / config.delta2;
  return config.g1 * hermitian_part_of_hopping(s.a1() * raise) +
         g2 * hermitian_part_of_hopping(s.a2() * raise);
}

Operator excitation_number(const MicroConfig& config, bool four_level) {
  const LevelMap m = four_level ? kFourLevel : kThreeLevel;
  const SpinCavitySpace s = space_for(config, m);
  const Operator a1 = s.a1();
  const Operator a2 = s.a2();
  return a1.adjoint() * a1 + a2.adjoint() * a2 + s.collective(m.c, m.c) + s.collective(m.e, m.e);
}

IntegratorOptions elimination_integrator() {
  IntegratorOptions opt;
  opt.method = IntegratorMethod::DormandPrince45;
  opt.dt_max = 0.05;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-12;
  return opt;
}

namespace {

constexpr int kEliminationSamples = 401;

struct Trace {
  std::vector<Eigen::Vector3d> observables;  // n1, n2, P_c
  double leakage_a = 0.0;
  double leakage_e = 0.0;
  double drift = 0.0;
};

Trace run_trace(const Operator& rho0, const DensityRhs& rhs, TimeSpan span,
                const std::vector<double>& samples, const IntegratorOptions& options,
                const std::vector<Operator>& observed, const Operator* pa, const Operator& pe,
                const Operator& charge) {
  Trace trace;
  trace.observables.resize(samples.size());
  const double q0 = (rho0 * charge).trace().real();
  integrate_density(rho0, rhs, span, samples, {}, options,
                    [&](int k, double, const Operator& rho) {
                      for (int i = 0; i < 3; ++i) {
                        trace.observables[static_cast<std::size_t>(k)][i] =
                            (rho * observed[static_cast<std::size_t>(i)]).trace().real();
                      }
                      if (pa) {
                        trace.leakage_a = std::max(trace.leakage_a, (rho * *pa).trace().real());
                      }
                      trace.leakage_e = std::max(trace.leakage_e, (rho * pe).trace().real());
                      trace.drift =
                          std::max(trace.drift, std::abs((rho * charge).trace().real() - q0));
                    });
  return trace;
}

double max_deviation(const Trace& x, const Trace& y) {
  double out = 0.0;
  for (std::size_t k = 0; k < x.observables.size(); ++k) {
    out = std::max(out, (x.observables[k] - y.observables[k]).cwiseAbs().maxCoeff());
  }
  return out;
}

DensityRhs commutator_rhs(std::function<Operator(double)> hamiltonian) {
  return [hamiltonian = std::move(hamiltonian)](double t, PulseSchedule::Side, const Operator& rho,
                                                Operator& out) {
    const Operator h = hamiltonian(t);
    out.noalias() = Complex(0.0, -1.0) * (h * rho);
    out += out.adjoint().eval();
  };
}

}  // namespace

EliminationReport adiabatic_elimination_check(const MicroConfig& config, TimeSpan span,
                                              MicroModel model, const IntegratorOptions& options) {
  const bool four = model == MicroModel::FourLevel;
  const LevelMap m = four ? kFourLevel : kThreeLevel;
  const SpinCavitySpace s = space_for(config, m);
  const PhasedHamiltonian full = four ? four_level_model(config) : three_level_model(config);
  const Operator effective =
      four ? four_level_effective_hamiltonian(config) : three_level_effective_hamiltonian(config);
  const Operator bare = four ? four_level_beam_splitter(config) : three_level_beam_splitter(config);

  const Couplings g = four ? effective_couplings(config) : three_level_effective(config);
  const double unit = four ? std::abs(g.g1) : std::abs(g.g2);
  if (!(unit > 0.0)) throw std::invalid_argument("effective coupling vanishes; no time unit");
  const TimeSpan physical{span.start / unit, span.end / unit};

  const StateVector psi0 = s.ground_with_photon(m.b, 1);
  const Operator rho0 = psi0 * psi0.adjoint();
  const Operator a1 = s.a1();
  const Operator a2 = s.a2();
  const std::vector<Operator> observed = {a1.adjoint() * a1, a2.adjoint() * a2,
                                          s.collective(m.c, m.c)};
  const Operator pe = s.collective(m.e, m.e);
  const Operator pa = four ? s.collective(m.a, m.a) : Operator();
  const Operator* pa_ptr = four ? &pa : nullptr;
  const Operator charge = excitation_number(config, four);
  const auto samples = uniform_grid(physical, kEliminationSamples);

  const Trace full_trace =
      run_trace(rho0, commutator_rhs([&full](double t) { return full.at(t); }), physical, samples,
                options, observed, pa_ptr, pe, charge);
  const Trace eff_trace = run_trace(rho0, commutator_rhs([&effective](double) { return effective; }),
                                    physical, samples, options, observed, pa_ptr, pe, charge);
  const Trace bare_trace = run_trace(rho0, commutator_rhs([&bare](double) { return bare; }),
                                     physical, samples, options, observed, pa_ptr, pe, charge);

  EliminationReport report;
  report.deviation = max_deviation(full_trace, eff_trace);
  report.beam_splitter_deviation = max_deviation(full_trace, bare_trace);
  report.leakage_a = full_trace.leakage_a;
  report.leakage_e = full_trace.leakage_e;
  report.excitation_drift = full_trace.drift;
  report.duration = physical.end - physical.start;
  return report;
}

ScalingReport detuning_scaling(const MicroConfig& config, TimeSpan span, double factor,
                               MicroModel model) {
  if (!(factor > 1.0) || !std::isfinite(factor)) {
    throw std::invalid_argument("detuning scale factor must be > 1");
  }
  MicroConfig scaled = config;
  scaled.delta1 *= factor;
  scaled.delta2 *= factor;
  if (model == MicroModel::ThreeLevel) scaled.g1 /= factor;

  ScalingReport out;
  out.factor = factor;
  out.base = adiabatic_elimination_check(config, span, model);
  out.scaled = adiabatic_elimination_check(scaled, span, model);
  out.exponent = std::log(out.base.deviation / out.scaled.deviation) / std::log(factor);
  return out;
}

double holstein_primakoff_error(int spins, int n) {
  if (spins < 1) throw std::invalid_argument("spin count must be >= 1");
  if (n < 0 || n >= spins) throw std::invalid_argument("excitation number must satisfy 0 <= n < N");
  return 1.0 - std::sqrt(1.0 - static_cast<double>(n) / spins);
}

double dicke_matrix_element(int spins, int n) {
  if (spins < 1 || spins > kMaxDickeSpins) {
    throw std::invalid_argument("Dicke construction supports 1.." +
                                std::to_string(kMaxDickeSpins) + " spins");
  }
  if (n < 0 || n >= spins) throw std::invalid_argument("excitation number must satisfy 0 <= n < N");
  const std::size_t size = std::size_t{1} << spins;
  // Bit j set means spin j is in |c>.
  auto dicke = [&](int k) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
    for (std::size_t x = 0; x < size; ++x) {
      if (std::popcount(x) == k) v(static_cast<Eigen::Index>(x)) = 1.0;
    }
    return Eigen::VectorXd(v / v.norm());
  };
  const Eigen::VectorXd lower = dicke(n);
  const Eigen::VectorXd upper = dicke(n + 1);
  Eigen::VectorXd raised = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
  for (std::size_t x = 0; x < size; ++x) {
    const double amp = lower(static_cast<Eigen::Index>(x));
    if (amp == 0.0) continue;
    for (int j = 0; j < spins; ++j) {
      const std::size_t bit = std::size_t{1} << j;
      if (!(x & bit)) raised(static_cast<Eigen::Index>(x | bit)) += amp;
    }
  }
  return upper.dot(raised);
}

}  // namespace spinbridge::micro
