#include "spinbridge/dynamics.hpp"

#include "spinbridge/metrics.hpp"
#include "spinbridge/protocols.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spinbridge {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidSchedule(what);
}

bool finite(std::initializer_list<double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

PulseSchedule::PulseSchedule(Shape shape) : shape_(std::move(shape)) {
  std::visit(Overloaded{
                 [](const ConstantCoupling& c) {
                   require(finite({c.g1, c.g2}), "coupling amplitudes must be finite");
                   require(c.g1 >= 0.0 && c.g2 >= 0.0, "coupling amplitudes must be >= 0");
                 },
                 [](const PiecewiseSwap& p) {
                   require(finite({p.g1, p.g2, p.t0, p.t1, p.t2}),
                           "piecewise swap parameters must be finite");
                   require(p.g1 >= 0.0 && p.g2 >= 0.0, "coupling amplitudes must be >= 0");
                   require(p.t0 < p.t1 && p.t1 < p.t2, "piecewise swap needs t0 < t1 < t2");
                 },
                 [](const GaussianPair& g) {
                   require(finite({g.amplitude1, g.center1, g.width1, g.amplitude2, g.center2,
                                   g.width2}),
                           "gaussian parameters must be finite");
                   require(g.amplitude1 >= 0.0 && g.amplitude2 >= 0.0,
                           "coupling amplitudes must be >= 0");
                   require(g.width1 > 0.0 && g.width2 > 0.0, "gaussian widths must be > 0");
                 },
             },
             shape_);
}

Couplings PulseSchedule::at(double tau, Side side) const {
  return std::visit(
      Overloaded{
          [](const ConstantCoupling& c) { return Couplings{c.g1, c.g2}; },
          [&](const PiecewiseSwap& p) {
            const bool left = side == Side::Left;
            auto inside = [&](double a, double b) {
              return left ? (tau > a && tau <= b) : (tau >= a && tau < b);
            };
            if (inside(p.t0, p.t1)) return Couplings{p.g1, 0.0};
            if (inside(p.t1, p.t2)) return Couplings{0.0, p.g2};
            return Couplings{0.0, 0.0};
          },
          [&](const GaussianPair& g) {
            const double d1 = tau - g.center1;
            const double d2 = tau - g.center2;
            return Couplings{g.amplitude1 * std::exp(-d1 * d1 / g.width1),
                             g.amplitude2 * std::exp(-d2 * d2 / g.width2)};
          },
      },
      shape_);
}

std::vector<double> PulseSchedule::breakpoints() const {
  if (const auto* p = std::get_if<PiecewiseSwap>(&shape_)) return {p->t0, p->t1, p->t2};
  return {};
}

PulseSchedule PulseSchedule::scaled(double s) const {
  if (!(s > 0.0)) throw InvalidSchedule("schedule scale factor must be > 0");
  return PulseSchedule(std::visit(
      Overloaded{
          [&](const ConstantCoupling& c) -> Shape { return ConstantCoupling{s * c.g1, s * c.g2}; },
          [&](const PiecewiseSwap& p) -> Shape {
            return PiecewiseSwap{s * p.g1, s * p.g2, p.t0 / s, p.t1 / s, p.t2 / s};
          },
          [&](const GaussianPair& g) -> Shape {
            return GaussianPair{s * g.amplitude1, g.center1 / s, g.width1 / (s * s),
                                s * g.amplitude2, g.center2 / s, g.width2 / (s * s)};
          },
      },
      shape_));
}

DecayRates::DecayRates(double k1, double gs, double k2) : kappa1(k1), gamma_s(gs), kappa2(k2) {
  if (!(k1 >= 0.0 && gs >= 0.0 && k2 >= 0.0) || !finite({k1, gs, k2})) {
    throw std::invalid_argument("decay rates must be finite and >= 0");
  }
}

void IntegratorOptions::validate() const {
  if (!(dt_max > 0.0) || !std::isfinite(dt_max)) {
    throw std::invalid_argument("integrator dt_max must be > 0");
  }
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw std::invalid_argument("integrator tolerances must be > 0");
  }
  if (!(dt_min > 0.0) || dt_min > dt_max) {
    throw std::invalid_argument("integrator dt_min must be in (0, dt_max]");
  }
}

SimResult::Peak SimResult::peak_fidelity() const {
  if (fidelity.empty()) return {0.0, 0.0};
  const auto it = std::max_element(fidelity.begin(), fidelity.end());
  const auto idx = static_cast<std::size_t>(std::distance(fidelity.begin(), it));
  return {*it, times[idx]};
}

namespace {

struct Triplet {
  int row;
  int col;
  double value;
};
using Triplets = std::vector<Triplet>;

// a_c b^dagger + a_c^dagger b on the full layout.
Triplets hopping_triplets(const ModeLayout& layout, Mode cavity) {
  Triplets t;
  const int c = static_cast<int>(cavity);
  const int sc = layout.stride(cavity);
  const int sb = layout.stride(Mode::Spin);
  for (int j = 0; j < layout.total(); ++j) {
    const auto n = layout.occupations(j);
    // a_c b^dagger |n_c, n_b> = sqrt(n_c) sqrt(n_b + 1) |n_c - 1, n_b + 1>
    if (n[c] > 0 && n[1] + 1 < layout.dim(Mode::Spin)) {
      const double amp = std::sqrt(static_cast<double>(n[c]) * (n[1] + 1));
      const int i = j - sc + sb;
      t.push_back({i, j, amp});
      t.push_back({j, i, amp});  // Hermitian conjugate term
    }
  }
  return t;
}

Triplets lowering_triplets(const ModeLayout& layout, Mode mode, double scale) {
  Triplets t;
  const int k = static_cast<int>(mode);
  const int s = layout.stride(mode);
  for (int j = 0; j < layout.total(); ++j) {
    const int nk = layout.occupations(j)[k];
    if (nk > 0) t.push_back({j - s, j, scale * std::sqrt(static_cast<double>(nk))});
  }
  return t;
}

}  // namespace

std::vector<int> excitation_basis(const ModeLayout& layout, int max_excitations) {
  std::vector<int> basis;
  for (int i = 0; i < layout.total(); ++i) {
    const auto n = layout.occupations(i);
    if (n[0] + n[1] + n[2] <= max_excitations) basis.push_back(i);
  }
  return basis;
}

int max_excitation(const Operator& rho, const ModeLayout& layout) {
  int top = 0;
  for (int i = 0; i < layout.total(); ++i) {
    if (rho(i, i) != Complex(0.0, 0.0)) {
      const auto n = layout.occupations(i);
      top = std::max(top, n[0] + n[1] + n[2]);
    }
  }
  return top;
}

Operator restrict_to(const Operator& rho, const std::vector<int>& basis) {
  const auto m = static_cast<Eigen::Index>(basis.size());
  Operator out(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) out(i, j) = rho(basis[i], basis[j]);
  }
  return out;
}

Operator expand_from(const Operator& reduced, const std::vector<int>& basis, int full_dim) {
  Operator out = Operator::Zero(full_dim, full_dim);
  const auto m = static_cast<Eigen::Index>(basis.size());
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) out(basis[i], basis[j]) = reduced(i, j);
  }
  return out;
}

LindbladGenerator::LindbladGenerator(const ModeLayout& layout, const DecayRates& decay,
                                     std::vector<int> basis)
    : layout_(layout), basis_(std::move(basis)) {
  const int full = layout.total();
  if (basis_.empty()) basis_ = excitation_basis(layout, full);
  std::vector<int> lookup(static_cast<std::size_t>(full), -1);
  for (std::size_t r = 0; r < basis_.size(); ++r) {
    const int idx = basis_[r];
    if (idx < 0 || idx >= full || lookup[static_cast<std::size_t>(idx)] >= 0) {
      throw InvalidDimension("basis indices must be distinct and inside the layout");
    }
    lookup[static_cast<std::size_t>(idx)] = static_cast<int>(r);
  }
  const int n = dim();
  auto build = [&](const Triplets& t) {
    Entries kept;
    for (const auto& e : t) {
      const int r = lookup[static_cast<std::size_t>(e.row)];
      const int c = lookup[static_cast<std::size_t>(e.col)];
      if (r >= 0 && c >= 0) {
        kept.push_back({r, c, e.value});
      } else if (c >= 0) {
        throw InvalidDimension("basis is not invariant under the master equation");
      }
    }
    return kept;
  };
  hop1_ = build(hopping_triplets(layout, Mode::Microwave));
  hop2_ = build(hopping_triplets(layout, Mode::Optical));

  const std::array<double, 3> rates = {decay.kappa1, decay.gamma_s, decay.kappa2};
  damping_ = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < n; ++r) {
    const auto occ = layout.occupations(basis_[static_cast<std::size_t>(r)]);
    for (int k = 0; k < 3; ++k) damping_(r) -= 0.5 * rates[k] * occ[k];
  }
  for (int k = 0; k < 3; ++k) {
    if (rates[k] == 0.0) continue;
    jumps_.push_back(build(lowering_triplets(layout, static_cast<Mode>(k), std::sqrt(rates[k]))));
  }
}

void LindbladGenerator::apply(const Operator& rho, const Couplings& g, Operator& out) const {
  // With K = -iH - (1/2) sum L^dagger L the equation reads
  // d rho = K rho + (K rho)^dagger + sum L rho L^dagger for Hermitian rho.
  const Eigen::Index n = rho.rows();
  scratch_.noalias() = damping_.asDiagonal() * rho;
  Complex* m = scratch_.data();
  const Complex* r = rho.data();
  // m += -i c * op * rho with real op entries, written out in real arithmetic.
  auto add_left = [&](const Entries& op, double c) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double* mj = reinterpret_cast<double*>(m + j * n);
      const double* rj = reinterpret_cast<const double*>(r + j * n);
      for (const auto& e : op) {
        const double w = c * e.value;
        mj[2 * e.row] += w * rj[2 * e.col + 1];
        mj[2 * e.row + 1] -= w * rj[2 * e.col];
      }
    }
  };
  if (g.g1 != 0.0) add_left(hop1_, g.g1);
  if (g.g2 != 0.0) add_left(hop2_, g.g2);
  out = scratch_ + scratch_.adjoint();

  for (const auto& jump : jumps_) {
    // out(e.row, f.row) += L(e) L(f) rho(e.col, f.col) for real jump entries.
    for (const auto& f : jump) {
      Complex* oj = out.data() + f.row * n;
      const Complex* rj = r + f.col * n;
      for (const auto& e : jump) oj[e.row] += (e.value * f.value) * rj[e.col];
    }
  }
}

Operator hamiltonian_at(double tau, const PulseSchedule& schedule, const ModeLayout& layout) {
  const auto g = schedule.at(tau);
  const Operator a1 = embed(annihilation(layout.dim(Mode::Microwave)), Mode::Microwave, layout);
  const Operator b = embed(annihilation(layout.dim(Mode::Spin)), Mode::Spin, layout);
  const Operator a2 = embed(annihilation(layout.dim(Mode::Optical)), Mode::Optical, layout);
  const Operator x1 = a1 * b.adjoint();
  const Operator x2 = a2 * b.adjoint();
  return g.g1 * (x1 + x1.adjoint()) + g.g2 * (x2 + x2.adjoint());
}

Operator lindblad_rhs(const QState& state, double tau, const PulseSchedule& schedule,
                      const DecayRates& decay) {
  const LindbladGenerator gen(state.layout(), decay);
  Operator out;
  gen.apply(state.rho(), schedule.at(tau), out);
  return out;
}

std::vector<double> uniform_grid(TimeSpan span, int sample_count) {
  if (sample_count < 2) throw std::invalid_argument("sample_count must be >= 2");
  if (!(span.end > span.start) || !std::isfinite(span.start) || !std::isfinite(span.end)) {
    throw std::invalid_argument("time span must be finite with start < end");
  }
  std::vector<double> grid(static_cast<std::size_t>(sample_count));
  const double h = (span.end - span.start) / (sample_count - 1);
  for (int i = 0; i < sample_count; ++i) grid[static_cast<std::size_t>(i)] = span.start + i * h;
  grid.back() = span.end;
  return grid;
}

namespace {

struct Node {
  double tau;
  int sample = -1;  // index into the sample list, or -1
};

std::vector<Node> merge_nodes(TimeSpan span, const std::vector<double>& samples,
                              const std::vector<double>& breakpoints) {
  const double eps = 1e-12 * std::max(1.0, std::max(std::abs(span.start), std::abs(span.end)));
  std::vector<Node> nodes;
  nodes.push_back({span.start});
  for (double b : breakpoints) {
    if (b > span.start && b < span.end) nodes.push_back({b});
  }
  nodes.push_back({span.end});
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.tau < b.tau; });

  // Breakpoints win over nearby sample times so pieces never straddle a jump.
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t = samples[i];
    auto it = std::lower_bound(nodes.begin(), nodes.end(), t - eps,
                               [](const Node& n, double v) { return n.tau < v; });
    if (it != nodes.end() && std::abs(it->tau - t) <= eps) {
      it->sample = static_cast<int>(i);
    } else {
      nodes.insert(it, Node{t, static_cast<int>(i)});
    }
  }
  return nodes;
}

class Stepper {
 public:
  Stepper(const DensityRhs& rhs, const IntegratorOptions& opt) : rhs_(rhs), opt_(opt) {}

  void advance(Operator& rho, double a, double b) {
    if (opt_.method == IntegratorMethod::RungeKutta4) {
      rk4(rho, a, b);
    } else {
      dopri(rho, a, b);
    }
  }

 private:
  PulseSchedule::Side side(double t, double b) const {
    const double eps = 1e-13 * std::max(1.0, std::abs(b));
    return t >= b - eps ? PulseSchedule::Side::Left : PulseSchedule::Side::Right;
  }

  void eval(double t, double b, const Operator& y, Operator& out) { rhs_(t, side(t, b), y, out); }

  void rk4(Operator& rho, double a, double b) {
    const double len = b - a;
    const auto steps = static_cast<long>(std::ceil(len / opt_.dt_max - 1e-9));
    const long n = std::max(1L, steps);
    const double h = len / static_cast<double>(n);
    for (long s = 0; s < n; ++s) {
      const double t = a + static_cast<double>(s) * h;
      const double t_next = (s + 1 == n) ? b : t + h;
      eval(t, b, rho, k_[0]);
      tmp_ = rho + (0.5 * h) * k_[0];
      eval(t + 0.5 * h, b, tmp_, k_[1]);
      tmp_ = rho + (0.5 * h) * k_[1];
      eval(t + 0.5 * h, b, tmp_, k_[2]);
      tmp_ = rho + h * k_[2];
      eval(t_next, b, tmp_, k_[3]);
      rho += (h / 6.0) * (k_[0] + 2.0 * k_[1] + 2.0 * k_[2] + k_[3]);
      if (!rho.allFinite()) throw IntegrationFailure("non-finite state", t_next);
    }
  }

  // Dormand-Prince 5(4) with FSAL and a max-norm error controller.
  void dopri(Operator& rho, double a, double b) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    double t = a;
    double h = std::min(opt_.dt_max, b - a);
    if (h_hint_ > 0.0) h = std::min(h, h_hint_);
    eval(t, b, rho, k_[0]);
    while (t < b) {
      bool last = false;
      if (t + h >= b) {
        h = b - t;
        last = true;
      }
      tmp_ = rho + (h * a21) * k_[0];
      eval(t + c2 * h, b, tmp_, k_[1]);
      tmp_ = rho + h * (a31 * k_[0] + a32 * k_[1]);
      eval(t + c3 * h, b, tmp_, k_[2]);
      tmp_ = rho + h * (a41 * k_[0] + a42 * k_[1] + a43 * k_[2]);
      eval(t + c4 * h, b, tmp_, k_[3]);
      tmp_ = rho + h * (a51 * k_[0] + a52 * k_[1] + a53 * k_[2] + a54 * k_[3]);
      eval(t + c5 * h, b, tmp_, k_[4]);
      tmp_ = rho + h * (a61 * k_[0] + a62 * k_[1] + a63 * k_[2] + a64 * k_[3] + a65 * k_[4]);
      const double t_new = last ? b : t + h;
      eval(t_new, b, tmp_, k_[5]);
      next_ = rho + h * (b1 * k_[0] + b3 * k_[2] + b4 * k_[3] + b5 * k_[4] + b6 * k_[5]);
      eval(t_new, b, next_, k_[6]);
      err_ = h * (e1 * k_[0] + e3 * k_[2] + e4 * k_[3] + e5 * k_[4] + e6 * k_[5] + e7 * k_[6]);

      const double scale_ref = std::max(rho.cwiseAbs().maxCoeff(), next_.cwiseAbs().maxCoeff());
      const double err = err_.cwiseAbs().maxCoeff() / (opt_.abs_tol + opt_.rel_tol * scale_ref);
      if (!std::isfinite(err)) throw IntegrationFailure("non-finite error estimate", t);

      if (err <= 1.0) {
        t = t_new;
        rho.swap(next_);
        k_[0].swap(k_[6]);
        const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        if (!last) h_hint_ = std::min(opt_.dt_max, h * grow);
        h = std::min(opt_.dt_max, h * grow);
      } else {
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
        if (h < opt_.dt_min) throw IntegrationFailure("step size underflow", t);
      }
    }
  }

  const DensityRhs& rhs_;
  const IntegratorOptions& opt_;
  std::array<Operator, 7> k_;
  Operator tmp_;
  Operator next_;
  Operator err_;
  double h_hint_ = 0.0;
};

}  // namespace

void integrate_density(const Operator& initial, const DensityRhs& rhs, TimeSpan span,
                       const std::vector<double>& sample_times,
                       const std::vector<double>& breakpoints, const IntegratorOptions& options,
                       const std::function<void(int, double, const Operator&)>& on_sample) {
  options.validate();
  if (!(span.end > span.start) || !std::isfinite(span.start) || !std::isfinite(span.end)) {
    throw std::invalid_argument("time span must be finite with start < end");
  }
  for (double t : sample_times) {
    if (t < span.start || t > span.end) {
      throw std::invalid_argument("sample time outside the integration span");
    }
  }
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) {
    throw std::invalid_argument("sample times must be sorted");
  }

  const auto nodes = merge_nodes(span, sample_times, breakpoints);
  Operator rho = initial;
  Stepper stepper(rhs, options);
  if (nodes.front().sample >= 0) on_sample(nodes.front().sample, nodes.front().tau, rho);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double a = nodes[i - 1].tau;
    const double b = nodes[i].tau;
    if (b > a) stepper.advance(rho, a, b);
    if (nodes[i].sample >= 0) on_sample(nodes[i].sample, b, rho);
  }
}

namespace {

// Sample-time observables computed on the restricted matrix, so the full
// layout-sized density matrix is only materialized for the final state.
class BasisObservables {
 public:
  BasisObservables(const ModeLayout& layout, const std::vector<int>& basis) {
    const int m = static_cast<int>(basis.size());
    std::vector<int> lookup(static_cast<std::size_t>(layout.total()), -1);
    for (int r = 0; r < m; ++r) lookup[static_cast<std::size_t>(basis[static_cast<std::size_t>(r)])] = r;
    occ_.resize(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) occ_[static_cast<std::size_t>(r)] = layout.occupations(basis[static_cast<std::size_t>(r)]);

    for (int k = 0; k < 3; ++k) {
      const Mode mode = static_cast<Mode>(k);
      const int s = layout.stride(mode);
      std::vector<Eigen::Triplet<Complex>> t;
      for (int r = 0; r < m; ++r) {
        const int nk = occ_[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
        if (nk == 0) continue;
        const int target = lookup[static_cast<std::size_t>(basis[static_cast<std::size_t>(r)] - s)];
        t.emplace_back(target, r, std::sqrt(static_cast<double>(nk)));
      }
      lowering_[static_cast<std::size_t>(k)].resize(m, m);
      lowering_[static_cast<std::size_t>(k)].setFromTriplets(t.begin(), t.end());
    }
    // Pairs of basis states that agree on the traced-out modes.
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) {
        const auto& a = occ_[static_cast<std::size_t>(r)];
        const auto& b = occ_[static_cast<std::size_t>(c)];
        if (a[0] == b[0] && a[1] == b[1]) optical_pairs_.push_back({r, c, a[2], b[2]});
      }
    }
  }

  double occupation(const Operator& rho, Mode mode) const {
    const auto k = static_cast<std::size_t>(mode);
    double total = 0.0;
    for (Eigen::Index r = 0; r < rho.rows(); ++r) {
      total += occ_[static_cast<std::size_t>(r)][k] * rho(r, r).real();
    }
    return total;
  }

  Operator optical_state(const Operator& rho, int d2) const {
    Operator out = Operator::Zero(d2, d2);
    for (const auto& p : optical_pairs_) out(p.n, p.np) += rho(p.r, p.c);
    return out;
  }

  Eigen::Matrix3cd second_moments(const Operator& rho) const {
    Eigen::Matrix3cd m;
    Operator x;
    for (std::size_t l = 0; l < 3; ++l) {
      x.noalias() = lowering_[l] * rho;
      for (std::size_t k = 0; k < 3; ++k) {
        // Tr(a_k^dagger a_l rho) = Tr(a_l rho a_k^dagger)
        Complex acc = 0.0;
        const auto& ak = lowering_[k];
        for (Eigen::Index col = 0; col < ak.outerSize(); ++col) {
          for (Sparse::InnerIterator it(ak, col); it; ++it) {
            acc += x(it.row(), it.col()) * std::conj(it.value());
          }
        }
        m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = acc;
      }
    }
    return m;
  }

 private:
  using Sparse = Eigen::SparseMatrix<Complex>;
  struct Pair {
    int r, c, n, np;
  };
  std::vector<std::array<int, 3>> occ_;
  std::array<Sparse, 3> lowering_;
  std::vector<Pair> optical_pairs_;
};

}  // namespace

SimResult evolve(const QState& initial, const PulseSchedule& schedule, const DecayRates& decay,
                 TimeSpan span, const IntegratorOptions& options, int sample_count,
                 const std::optional<FidelityReference>& reference) {
  const ModeLayout& layout = initial.layout();
  const auto grid = uniform_grid(span, sample_count);

  FidelityReference ref = reference.value_or(
      FidelityReference{partial_trace(initial, Mode::Microwave), false});
  const int d2 = layout.dim(Mode::Optical);
  const int common = std::max<int>(d2, static_cast<int>(ref.target.rows()));
  Operator target = Operator::Zero(common, common);
  target.topLeftCorner(ref.target.rows(), ref.target.cols()) = ref.target;

  Eigen::VectorXd parity(d2);
  for (int n = 0; n < d2; ++n) parity(n) = (n % 2 == 0) ? 1.0 : -1.0;

  const int full_dim = layout.total();
  const LindbladGenerator generator(layout, decay,
                                    excitation_basis(layout, max_excitation(initial.rho(), layout)));
  const std::vector<int>& basis = generator.basis();
  DensityRhs rhs = [&](double tau, PulseSchedule::Side side, const Operator& rho, Operator& out) {
    generator.apply(rho, schedule.at(tau, side), out);
  };

  const auto n = static_cast<std::size_t>(sample_count);
  SimResult result{{}, {}, {}, {}, {}, {}, {}, {}, {}, initial, {}};
  for (auto* series : {&result.times, &result.n_a1, &result.n_b, &result.n_a2, &result.G1,
                       &result.G2, &result.theta, &result.n_dark, &result.fidelity}) {
    series->resize(n);
  }

  // Evenly spaced positivity checkpoints, always including the last sample.
  const int checks = std::min(kMaxEigenCheckpoints, sample_count);
  std::vector<bool> eigen_check(n, false);
  for (int c = 1; c <= checks; ++c) {
    eigen_check[static_cast<std::size_t>((static_cast<long>(c) * (sample_count - 1)) / checks)] =
        true;
  }

  double theta = 0.0;
  bool theta_set = false;
  Operator final_rho;
  const BasisObservables observe(layout, basis);
  auto on_sample = [&](int idx, double tau, const Operator& rho) {
    const auto i = static_cast<std::size_t>(idx);
    const auto diag = diagnose(rho);
    auto& worst = result.diagnostics;
    worst.max_trace_deviation = std::max(worst.max_trace_deviation, diag.trace_deviation);
    worst.max_hermiticity_deviation =
        std::max(worst.max_hermiticity_deviation, diag.hermiticity_deviation);
    worst.min_purity = std::min(worst.min_purity, rho.squaredNorm());
    if (diag.trace_deviation > 1e-7) {
      throw IntegrationFailure("trace drifted by " + std::to_string(diag.trace_deviation), tau);
    }
    if (diag.hermiticity_deviation > 1e-8) {
      throw IntegrationFailure(
          "Hermiticity deviation " + std::to_string(diag.hermiticity_deviation), tau);
    }
    if (eigen_check[i]) {
      // The full matrix is zero outside the invariant block.
      const double lo = std::min(0.0, min_eigenvalue(rho));
      worst.min_eigenvalue = std::min(worst.min_eigenvalue, lo);
      if (lo < -1e-6) {
        throw IntegrationFailure("negative eigenvalue " + std::to_string(lo), tau);
      }
    }
    const auto g = schedule.at(tau);
    if (!theta_set || g.g1 != 0.0 || g.g2 != 0.0) {
      theta = mixing_angle(g, theta);
      theta_set = true;
    }
    result.times[i] = tau;
    result.n_a1[i] = observe.occupation(rho, Mode::Microwave);
    result.n_b[i] = observe.occupation(rho, Mode::Spin);
    result.n_a2[i] = observe.occupation(rho, Mode::Optical);
    result.G1[i] = g.g1;
    result.G2[i] = g.g2;
    result.theta[i] = theta;
    const Eigen::Vector3cd u = hybrid_modes(theta).dark.cast<Complex>();
    result.n_dark[i] = (u.adjoint() * observe.second_moments(rho) * u)(0, 0).real();

    Operator optical = observe.optical_state(rho, d2);
    if (ref.phase_flip) optical = parity.asDiagonal() * optical * parity.asDiagonal();
    Operator padded = Operator::Zero(common, common);
    padded.topLeftCorner(d2, d2) = optical;
    result.fidelity[i] = uhlmann_fidelity(target, padded);
    if (idx == sample_count - 1) final_rho = expand_from(rho, basis, full_dim);
  };

  integrate_density(restrict_to(initial.rho(), basis), rhs, span, grid, schedule.breakpoints(),
                    options, on_sample);

  result.final_state = QState(layout, std::move(final_rho), {1e-8, 1e-7, -1e-6},
                              QState::Positivity::Skip);
  return result;
}

}  // namespace spinbridge
