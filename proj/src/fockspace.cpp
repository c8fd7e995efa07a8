#include "spinbridge/fockspace.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace spinbridge {

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::Microwave: return "a1";
    case Mode::Spin: return "b";
    case Mode::Optical: return "a2";
  }
  return "?";
}

ModeLayout::ModeLayout(int microwave_dim, int spin_dim, int optical_dim)
    : ModeLayout(std::array<int, 3>{microwave_dim, spin_dim, optical_dim}) {}

ModeLayout::ModeLayout(const std::array<int, 3>& dims) : dims_(dims) {
  for (int k = 0; k < 3; ++k) {
    if (dims_[k] < 2) {
      std::ostringstream msg;
      msg << "mode " << mode_name(static_cast<Mode>(k)) << " dimension " << dims_[k]
          << " is below 2";
      throw InvalidDimension(msg.str());
    }
  }
}

int ModeLayout::stride(Mode mode) const {
  switch (mode) {
    case Mode::Microwave: return dims_[1] * dims_[2];
    case Mode::Spin: return dims_[2];
    case Mode::Optical: return 1;
  }
  return 0;
}

int ModeLayout::index(const std::array<int, 3>& n) const {
  for (int k = 0; k < 3; ++k) {
    if (n[k] < 0 || n[k] >= dims_[k]) {
      std::ostringstream msg;
      msg << "occupation " << n[k] << " of mode " << mode_name(static_cast<Mode>(k))
          << " exceeds truncation dimension " << dims_[k];
      throw TruncationError(msg.str());
    }
  }
  return (n[0] * dims_[1] + n[1]) * dims_[2] + n[2];
}

std::array<int, 3> ModeLayout::occupations(int index) const {
  std::array<int, 3> n{};
  n[2] = index % dims_[2];
  index /= dims_[2];
  n[1] = index % dims_[1];
  n[0] = index / dims_[1];
  return n;
}

StateDiagnostics diagnose(const Operator& rho) {
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  const double tr = std::abs(rho.trace() - Complex(1.0, 0.0));
  return {herm, tr};
}

double min_eigenvalue(const Operator& rho) {
  const Operator herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

QState::QState(ModeLayout layout, Operator rho, const StateTolerances& tol,
               Positivity positivity)
    : layout_(std::move(layout)), rho_(std::move(rho)) {
  const int n = layout_.total();
  if (rho_.rows() != n || rho_.cols() != n) {
    std::ostringstream msg;
    msg << "density matrix is " << rho_.rows() << "x" << rho_.cols() << ", layout needs " << n
        << "x" << n;
    throw InvalidDimension(msg.str());
  }
  const auto diag = diagnose(rho_);
  if (diag.hermiticity_deviation > tol.hermiticity) {
    throw InvalidState("density matrix not Hermitian (deviation " +
                       std::to_string(diag.hermiticity_deviation) + ")");
  }
  if (diag.trace_deviation > tol.trace) {
    throw InvalidState("density matrix trace deviates from 1 by " +
                       std::to_string(diag.trace_deviation));
  }
  if (positivity == Positivity::Check) {
    const double lo = min_eigenvalue(rho_);
    if (lo < tol.min_eigenvalue) {
      throw InvalidState("density matrix has eigenvalue " + std::to_string(lo));
    }
  }
}

QState QState::pure(ModeLayout layout, const StateVector& psi) {
  if (psi.size() != layout.total()) {
    throw InvalidDimension("state vector length does not match layout");
  }
  const double norm = psi.norm();
  if (norm == 0.0) throw InvalidState("zero state vector");
  const StateVector unit = psi / norm;
  Operator rho = unit * unit.adjoint();
  // Rank-1 projectors are PSD by construction; skip the eigensolve.
  return QState(std::move(layout), std::move(rho), {}, Positivity::Skip);
}

Operator identity(int dim) {
  if (dim < 1) throw InvalidDimension("identity dimension must be positive");
  return Operator::Identity(dim, dim);
}

Operator annihilation(int dim) {
  if (dim < 2) {
    throw InvalidDimension("ladder operator dimension " + std::to_string(dim) + " is below 2");
  }
  Operator a = Operator::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Operator creation(int dim) { return annihilation(dim).adjoint(); }

Operator number(int dim) {
  if (dim < 2) {
    throw InvalidDimension("number operator dimension " + std::to_string(dim) + " is below 2");
  }
  Operator n = Operator::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
  return n;
}

Operator kron(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Operator embed(const Operator& op, Mode mode, const ModeLayout& layout) {
  const int k = static_cast<int>(mode);
  if (op.rows() != op.cols() || op.rows() != layout.dims()[k]) {
    std::ostringstream msg;
    msg << "operator of size " << op.rows() << "x" << op.cols() << " cannot act on mode "
        << mode_name(mode) << " of dimension " << layout.dims()[k];
    throw InvalidDimension(msg.str());
  }
  std::array<Operator, 3> factors = {identity(layout.dims()[0]), identity(layout.dims()[1]),
                                     identity(layout.dims()[2])};
  factors[k] = op;
  return kron(kron(factors[0], factors[1]), factors[2]);
}

StateVector basis_ket(int dim, int n) {
  if (n < 0 || n >= dim) {
    throw TruncationError("occupation " + std::to_string(n) + " outside truncation dimension " +
                          std::to_string(dim));
  }
  StateVector v = StateVector::Zero(dim);
  v(n) = 1.0;
  return v;
}

QState fock_state(const ModeLayout& layout, const std::array<int, 3>& occupations) {
  const int idx = layout.index(occupations);
  Operator rho = Operator::Zero(layout.total(), layout.total());
  rho(idx, idx) = 1.0;
  return QState(layout, std::move(rho), {}, QState::Positivity::Skip);
}

QState product_state(const ModeLayout& layout, const StateVector& microwave,
                     const StateVector& spin, const StateVector& optical) {
  const std::array<const StateVector*, 3> kets = {&microwave, &spin, &optical};
  for (int k = 0; k < 3; ++k) {
    if (kets[k]->size() != layout.dims()[k]) {
      throw InvalidDimension(std::string("ket for mode ") + mode_name(static_cast<Mode>(k)) +
                             " has wrong length");
    }
  }
  StateVector psi(layout.total());
  for (int i = 0; i < layout.total(); ++i) {
    const auto n = layout.occupations(i);
    psi(i) = microwave(n[0]) * spin(n[1]) * optical(n[2]);
  }
  return QState::pure(layout, psi);
}

CoherentState coherent_state(Complex alpha, int dim) {
  if (dim < 2) {
    throw InvalidDimension("coherent state dimension " + std::to_string(dim) + " is below 2");
  }
  const double mean = std::norm(alpha);
  StateVector amps(dim);
  Complex term = std::exp(-0.5 * mean);  // c_0
  for (int n = 0; n < dim; ++n) {
    if (n > 0) term *= alpha / std::sqrt(static_cast<double>(n));
    amps(n) = term;
  }
  // Tail summed directly; 1 - sum_{n<d} loses digits when the tail is tiny.
  double tail = 0.0;
  Complex c = term;
  for (int n = dim; n < dim + 2000; ++n) {
    c *= alpha / std::sqrt(static_cast<double>(n));
    const double w = std::norm(c);
    tail += w;
    if (n > mean && w < 1e-300) break;
    if (n > mean && w < tail * 1e-18) break;
  }
  const double norm = amps.norm();
  return {amps / norm, tail, tail > kCoherentTailFlag};
}

StateVector superposition_state(int dim) {
  if (dim < 2) {
    throw InvalidDimension("superposition state dimension " + std::to_string(dim) +
                           " is below 2");
  }
  StateVector v = StateVector::Zero(dim);
  v(0) = v(1) = 1.0 / std::sqrt(2.0);
  return v;
}

}  // namespace spinbridge
