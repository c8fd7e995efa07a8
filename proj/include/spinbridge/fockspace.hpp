#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

namespace spinbridge {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

class InvalidDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TruncationError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class InvalidState : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Tensor order is fixed: microwave cavity a1, collective spin mode b, optical
// cavity a2. The microwave index is the most significant.
enum class Mode : int { Microwave = 0, Spin = 1, Optical = 2 };

inline constexpr std::array<Mode, 3> kAllModes = {Mode::Microwave, Mode::Spin, Mode::Optical};

const char* mode_name(Mode mode);

class ModeLayout {
 public:
  ModeLayout(int microwave_dim, int spin_dim, int optical_dim);
  explicit ModeLayout(const std::array<int, 3>& dims);

  int dim(Mode mode) const { return dims_[static_cast<int>(mode)]; }
  const std::array<int, 3>& dims() const { return dims_; }
  int total() const { return dims_[0] * dims_[1] * dims_[2]; }

  // Distance in the flat index between |..n..> and |..n+1..> for `mode`.
  int stride(Mode mode) const;

  int index(const std::array<int, 3>& occupations) const;
  std::array<int, 3> occupations(int index) const;

  bool operator==(const ModeLayout& other) const = default;

 private:
  std::array<int, 3> dims_;
};

struct StateTolerances {
  double hermiticity = 1e-10;
  double trace = 1e-8;
  double min_eigenvalue = -1e-8;
};

// Density matrix on the joint truncated space. Construction validates the
// shape, Hermiticity, trace and (unless skipped) positivity.
class QState {
 public:
  enum class Positivity { Check, Skip };

  QState(ModeLayout layout, Operator rho, const StateTolerances& tol = {},
         Positivity positivity = Positivity::Check);

  static QState pure(ModeLayout layout, const StateVector& psi);

  const ModeLayout& layout() const { return layout_; }
  const Operator& rho() const { return rho_; }

 private:
  ModeLayout layout_;
  Operator rho_;
};

struct StateDiagnostics {
  double hermiticity_deviation;  // max |rho - rho^dagger| elementwise
  double trace_deviation;        // |Tr rho - 1|
};

StateDiagnostics diagnose(const Operator& rho);
double min_eigenvalue(const Operator& rho);

Operator identity(int dim);
Operator annihilation(int dim);
Operator creation(int dim);
Operator number(int dim);

Operator kron(const Operator& a, const Operator& b);

// I (x) ... (x) op (x) ... (x) I in the fixed (a1, b, a2) order.
Operator embed(const Operator& op, Mode mode, const ModeLayout& layout);

QState fock_state(const ModeLayout& layout, const std::array<int, 3>& occupations);

// Product of three single-mode kets, one per mode in tensor order.
QState product_state(const ModeLayout& layout, const StateVector& microwave,
                     const StateVector& spin, const StateVector& optical);

StateVector basis_ket(int dim, int n);

struct CoherentState {
  StateVector amplitudes;  // renormalized after truncation
  double tail_weight;      // sum_{n >= dim} |c_n|^2 of the untruncated state
  bool truncation_flagged;
};

inline constexpr double kCoherentTailFlag = 1e-6;

CoherentState coherent_state(Complex alpha, int dim);
StateVector superposition_state(int dim);

}  // namespace spinbridge
