#pragma once

#include "spinbridge/fockspace.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace spinbridge {

// All times are in units of 1/G and all rates in units of G.

struct ConstantCoupling {
  double g1;
  double g2;
};

// G1 alone on [t0, t1), G2 alone on [t1, t2), zero elsewhere.
struct PiecewiseSwap {
  double g1;
  double g2;
  double t0;
  double t1;
  double t2;
};

// G_k(tau) = amplitude_k * exp(-(tau - center_k)^2 / width_k).
struct GaussianPair {
  double amplitude1;
  double center1;
  double width1;
  double amplitude2;
  double center2;
  double width2;
};

class InvalidSchedule : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Couplings {
  double g1;
  double g2;
};

class PulseSchedule {
 public:
  using Shape = std::variant<ConstantCoupling, PiecewiseSwap, GaussianPair>;

  // Which one-sided limit to take exactly at a discontinuity.
  enum class Side { Left, Right };

  explicit PulseSchedule(Shape shape);

  const Shape& shape() const { return shape_; }
  Couplings at(double tau, Side side = Side::Right) const;

  // Times where the couplings jump; integration never steps across these.
  std::vector<double> breakpoints() const;

  PulseSchedule scaled(double factor) const;  // amplitudes * s, times / s

 private:
  Shape shape_;
};

struct DecayRates {
  double kappa1 = 0.0;
  double gamma_s = 0.0;
  double kappa2 = 0.0;

  DecayRates() = default;
  DecayRates(double k1, double gs, double k2);

  static DecayRates lossless() { return {}; }
  static DecayRates lossy_defaults() { return {0.003, 0.01, 0.1}; }
  bool is_lossless() const { return kappa1 == 0.0 && gamma_s == 0.0 && kappa2 == 0.0; }
};

enum class IntegratorMethod { RungeKutta4, DormandPrince45 };

struct IntegratorOptions {
  IntegratorMethod method = IntegratorMethod::RungeKutta4;
  double dt_max = 1e-3;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double dt_min = 1e-12;  // adaptive step underflow threshold

  void validate() const;
};

struct TimeSpan {
  double start;
  double end;
};

class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(const std::string& what, double tau)
      : std::runtime_error(what + " at tau = " + std::to_string(tau)), tau_(tau) {}
  double tau() const { return tau_; }

 private:
  double tau_;
};

// Target for the fidelity series: the reduced optical state at each sample
// is compared with `target`. With phase_flip the unitary exp(i pi n) is
// applied to the optical state first.
struct FidelityReference {
  Operator target;
  bool phase_flip = false;
};

struct SimResult {
  std::vector<double> times;
  std::vector<double> n_a1;
  std::vector<double> n_b;
  std::vector<double> n_a2;
  std::vector<double> G1;
  std::vector<double> G2;
  std::vector<double> theta;
  std::vector<double> n_dark;
  std::vector<double> fidelity;
  QState final_state;

  // Worst values seen over all samples; eigenvalues only at checkpoints.
  struct Diagnostics {
    double max_trace_deviation = 0.0;
    double max_hermiticity_deviation = 0.0;
    double min_eigenvalue = 0.0;
    double min_purity = 1.0;
  };
  Diagnostics diagnostics;

  struct Peak {
    double fidelity;
    double tau;
  };
  Peak peak_fidelity() const;
};

// H(tau) = G1 (a1 b^dagger + a1^dagger b) + G2 (a2 b^dagger + a2^dagger b).
Operator hamiltonian_at(double tau, const PulseSchedule& schedule, const ModeLayout& layout);

// Basis states of the truncated space with total excitation n1 + nb + n2 at
// most `max_excitations`. The Hamiltonian conserves total excitation and the
// loss channels only lower it, so this set is invariant under the master
// equation and a state supported on it can be evolved there exactly.
std::vector<int> excitation_basis(const ModeLayout& layout, int max_excitations);

// Largest total excitation among basis states with nonzero population.
int max_excitation(const Operator& rho, const ModeLayout& layout);

// rho restricted to / expanded from the rows and columns listed in `basis`.
Operator restrict_to(const Operator& rho, const std::vector<int>& basis);
Operator expand_from(const Operator& reduced, const std::vector<int>& basis, int full_dim);

// Right-hand side of the master equation with the three loss channels.
// Precomputes the sparse coupling and jump operators once, either on the
// whole layout or on an invariant subset of basis states.
class LindbladGenerator {
 public:
  LindbladGenerator(const ModeLayout& layout, const DecayRates& decay,
                    std::vector<int> basis = {});

  const ModeLayout& layout() const { return layout_; }
  const std::vector<int>& basis() const { return basis_; }
  int dim() const { return static_cast<int>(basis_.size()); }

  // out = -i[H, rho] + sum_k D[L_k] rho, assuming rho is Hermitian. Not
  // thread-safe: scratch buffers are reused between calls.
  void apply(const Operator& rho, const Couplings& g, Operator& out) const;

 private:
  struct Entry {
    int row;
    int col;
    double value;
  };
  using Entries = std::vector<Entry>;

  ModeLayout layout_;
  std::vector<int> basis_;
  Entries hop1_;  // a1 b^dagger + a1^dagger b
  Entries hop2_;  // a2 b^dagger + a2^dagger b
  Eigen::VectorXd damping_;  // diagonal of -(1/2) sum_k rate_k n_k
  std::vector<Entries> jumps_;  // sqrt(rate) * a_k for nonzero rates
  mutable Operator scratch_;
};

Operator lindblad_rhs(const QState& state, double tau, const PulseSchedule& schedule,
                      const DecayRates& decay);

// Generic density-matrix integrator used by both the effective model and the
// microscopic checks. `rhs(tau, rho, out)` is evaluated only strictly inside
// or on the edges of a smooth piece; the side argument tells it which limit
// to take at a piece edge.
using DensityRhs =
    std::function<void(double tau, PulseSchedule::Side side, const Operator& rho, Operator& out)>;

// Integrates from span.start to each entry of `sample_times` (sorted,
// inside span) without stepping across `breakpoints`. `on_sample` sees the
// state at every sample time.
void integrate_density(const Operator& initial, const DensityRhs& rhs, TimeSpan span,
                       const std::vector<double>& sample_times,
                       const std::vector<double>& breakpoints, const IntegratorOptions& options,
                       const std::function<void(int, double, const Operator&)>& on_sample);

std::vector<double> uniform_grid(TimeSpan span, int sample_count);

inline constexpr int kMaxEigenCheckpoints = 16;

SimResult evolve(const QState& initial, const PulseSchedule& schedule, const DecayRates& decay,
                 TimeSpan span, const IntegratorOptions& options, int sample_count,
                 const std::optional<FidelityReference>& reference = std::nullopt);

}  // namespace spinbridge
