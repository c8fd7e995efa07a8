#include "spinbridge/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spinbridge {

Operator partial_trace(const Operator& rho, const ModeLayout& layout, Mode keep) {
  const int n = layout.total();
  if (rho.rows() != n || rho.cols() != n) {
    throw InvalidDimension("density matrix does not match layout");
  }
  const int k = static_cast<int>(keep);
  if (k < 0 || k > 2) throw InvalidDimension("mode index out of range");
  const int dk = layout.dim(keep);
  const int stride = layout.stride(keep);
  Operator reduced = Operator::Zero(dk, dk);
  // Every flat index decomposes as base + m * stride with m the kept occupation.
  for (int base = 0; base < n; ++base) {
    if (layout.occupations(base)[k] != 0) continue;
    for (int m = 0; m < dk; ++m) {
      for (int mp = 0; mp < dk; ++mp) {
        reduced(m, mp) += rho(base + m * stride, base + mp * stride);
      }
    }
  }
  return reduced;
}

Operator partial_trace(const QState& state, Mode keep) {
  return partial_trace(state.rho(), state.layout(), keep);
}

namespace {

constexpr double kSpectrumFloor = 1e-14;

struct ClampedSpectrum {
  Eigen::VectorXd values;
  Operator vectors;
  double clamped = 0.0;
};

ClampedSpectrum clamped_spectrum(const Operator& m) {
  const Operator herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> solver(herm);
  if (solver.info() != Eigen::Success) throw InvalidState("eigendecomposition failed");
  ClampedSpectrum out{solver.eigenvalues(), solver.eigenvectors(), 0.0};
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    const double v = out.values(i);
    if (v < -kClampLimit) {
      std::ostringstream msg;
      msg << "matrix has eigenvalue " << v << " below the clamp limit " << -kClampLimit;
      throw InvalidState(msg.str());
    }
    if (v < 0.0) {
      out.clamped = std::max(out.clamped, -v);
      out.values(i) = 0.0;
    }
  }
  return out;
}

ClampedSpectrum normalized_spectrum(const Operator& rho) {
  if (rho.rows() != rho.cols()) throw InvalidDimension("density matrix must be square");
  if (!rho.allFinite()) throw InvalidState("density matrix has non-finite entries");
  auto spec = clamped_spectrum(rho);
  const double tr = spec.values.sum();
  if (!(tr > 1e-12)) throw InvalidState("density matrix cannot be normalized");
  spec.values /= tr;
  return spec;
}

int numerical_rank(const Eigen::VectorXd& values) {
  int rank = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) > 1e-12) ++rank;
  }
  return rank;
}

}  // namespace

SqrtResult hermitian_sqrt(const Operator& m) {
  if (m.rows() != m.cols()) throw InvalidDimension("square root needs a square matrix");
  const auto spec = clamped_spectrum(m);
  const Eigen::VectorXd roots = spec.values.cwiseSqrt();
  Operator root = spec.vectors * roots.asDiagonal() * spec.vectors.adjoint();
  return {std::move(root), spec.clamped};
}

FidelityReport uhlmann_fidelity_report(const Operator& rho1, const Operator& rho2) {
  if (rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols()) {
    throw InvalidDimension("fidelity arguments have different dimensions");
  }
  const auto s1 = normalized_spectrum(rho1);
  const auto s2 = normalized_spectrum(rho2);
  const double clamped = std::max(s1.clamped, s2.clamped);

  auto rebuild = [](const ClampedSpectrum& s) -> Operator {
    return s.vectors * s.values.asDiagonal() * s.vectors.adjoint();
  };
  auto pure_overlap = [](const ClampedSpectrum& pure, const Operator& other) {
    Eigen::Index top = 0;
    pure.values.maxCoeff(&top);
    const StateVector psi = pure.vectors.col(top);
    return std::clamp((psi.adjoint() * other * psi)(0, 0).real(), 0.0, 1.0);
  };

  if (numerical_rank(s1.values) == 1) {
    return {pure_overlap(s1, rebuild(s2)), clamped, true};
  }
  if (numerical_rank(s2.values) == 1) {
    return {pure_overlap(s2, rebuild(s1)), clamped, true};
  }

  // F = ||sqrt(rho1) sqrt(rho2)||_1^2. Eigenvalues at round-off level are
  // dropped first; their square roots would otherwise leak ~1e-8 into F.
  auto root = [](const ClampedSpectrum& s) -> Operator {
    const Eigen::VectorXd r =
        (s.values.array() > kSpectrumFloor).select(s.values.cwiseSqrt(), 0.0);
    return s.vectors * r.asDiagonal() * s.vectors.adjoint();
  };
  const Operator product = root(s1) * root(s2);
  Eigen::JacobiSVD<Operator> svd(product);
  const double tr = svd.singularValues().sum();
  return {std::clamp(tr * tr, 0.0, 1.0), clamped, false};
}

double uhlmann_fidelity(const Operator& rho1, const Operator& rho2) {
  return uhlmann_fidelity_report(rho1, rho2).value;
}

double occupation(const Operator& rho, const ModeLayout& layout, Mode mode) {
  const int k = static_cast<int>(mode);
  double total = 0.0;
  for (int i = 0; i < layout.total(); ++i) {
    total += layout.occupations(i)[k] * rho(i, i).real();
  }
  return total;
}

double occupation(const QState& state, Mode mode) {
  return occupation(state.rho(), state.layout(), mode);
}

Eigen::Matrix3cd second_moments(const Operator& rho, const ModeLayout& layout) {
  Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
  const int n = layout.total();
  for (int l = 0; l < 3; ++l) {
    const Mode ml = static_cast<Mode>(l);
    const int sl = layout.stride(ml);
    for (int k = 0; k < 3; ++k) {
      const Mode mk = static_cast<Mode>(k);
      const int sk = layout.stride(mk);
      Complex acc = 0.0;
      for (int j = 0; j < n; ++j) {
        const auto nj = layout.occupations(j);
        if (nj[l] == 0) continue;
        const int jp = j - sl;
        auto np = nj;
        np[l] -= 1;
        if (np[k] + 1 >= layout.dims()[k]) continue;
        const int i = jp + sk;
        const double amp = std::sqrt(static_cast<double>(nj[l])) *
                           std::sqrt(static_cast<double>(np[k] + 1));
        // <a_k^dagger a_l> = sum_ij (a_k^dagger a_l)_{ij} rho_{ji}
        acc += amp * rho(j, i);
      }
      m(k, l) = acc;
    }
  }
  return m;
}

Eigen::Vector3cd mean_amplitudes(const Operator& rho, const ModeLayout& layout) {
  Eigen::Vector3cd mean = Eigen::Vector3cd::Zero();
  for (int l = 0; l < 3; ++l) {
    const Mode ml = static_cast<Mode>(l);
    const int sl = layout.stride(ml);
    Complex acc = 0.0;
    for (int j = 0; j < layout.total(); ++j) {
      const int nl = layout.occupations(j)[l];
      if (nl == 0) continue;
      // (a_l)_{j - s, j} = sqrt(n_l(j))
      acc += std::sqrt(static_cast<double>(nl)) * rho(j, j - sl);
    }
    mean(l) = acc;
  }
  return mean;
}

double purity(const Operator& rho) {
  // Tr(rho^2) = sum_ij rho_ij rho_ji = sum |rho_ij|^2 for Hermitian rho
  return (rho.array() * rho.transpose().array()).sum().real();
}

}  // namespace spinbridge
