// Pumped and damped Bose-Hubbard dimer in the truncated Wigner representation.
//
// Time is measured in units of 1/J (dimensionless Jt); every rate in
// DimerParams is relative to the tunneling strength.

#ifndef WDIMER_MODEL_HPP
#define WDIMER_MODEL_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace wdimer {

/// Which well is coupled to the empty atomic bath. The pump always feeds well 1.
enum class Topology { LossAtWell2, LossAtWell1 };

std::string to_string(Topology topology);
Topology topology_from_string(std::string_view text);

struct DimerParams {
  double chi = 0.0;        // collisional nonlinearity
  double tunneling = 1.0;  // J
  double pump_rate = 0.0;  // epsilon, amplitude pump into well 1
  double loss_rate = 0.0;  // gamma, amplitude damping rate
  Topology topology = Topology::LossAtWell2;

  /// 0-based index of the damped mode.
  int damped_mode() const { return topology == Topology::LossAtWell2 ? 1 : 0; }

  void validate() const {
    if (!(tunneling > 0.0)) throw std::invalid_argument("tunneling must be > 0");
    if (!(loss_rate >= 0.0)) throw std::invalid_argument("loss_rate must be >= 0");
    if (!(pump_rate >= 0.0)) throw std::invalid_argument("pump_rate must be >= 0");
    if (!(chi >= 0.0)) throw std::invalid_argument("chi must be >= 0");
  }
};

/// Wigner amplitudes (alpha1, alpha2) of one trajectory.
template <typename Real>
using WignerState = Eigen::Matrix<std::complex<Real>, 2, 1>;

using WignerStated = WignerState<double>;

namespace detail {
template <typename Real>
inline std::complex<Real> times_i(const std::complex<Real>& z) {
  return {-z.imag(), z.real()};
}
}  // namespace detail

/// Deterministic part of the Ito equations:
///   d alpha_1/dt = eps - 2i chi |alpha_1|^2 alpha_1 + iJ alpha_2 [- gamma alpha_1]
///   d alpha_2/dt =     - 2i chi |alpha_2|^2 alpha_2 + iJ alpha_1 [- gamma alpha_2]
/// with the loss term on the well selected by the topology.
///
/// Only real-times-complex and i-times-complex products appear, so the
/// evaluation never goes through the generic complex multiply.
template <typename Real>
WignerState<Real> drift(const WignerState<Real>& state, const DimerParams& params) {
  using C = std::complex<Real>;
  const Real chi2 = Real(2) * Real(params.chi);
  const Real tunnel = Real(params.tunneling);
  const Real gamma = Real(params.loss_rate);

  const C a1 = state(0);
  const C a2 = state(1);
  C d1 = C(Real(params.pump_rate), Real(0)) - chi2 * std::norm(a1) * detail::times_i(a1) +
         tunnel * detail::times_i(a2);
  C d2 = -chi2 * std::norm(a2) * detail::times_i(a2) + tunnel * detail::times_i(a1);
  if (params.topology == Topology::LossAtWell2) {
    d2 -= gamma * a2;
  } else {
    d1 -= gamma * a1;
  }
  return WignerState<Real>(d1, d2);
}

/// Per-well amplitude multiplying the complex white noise: sqrt(gamma) on
/// the damped well, zero elsewhere.
template <typename Real = double>
Eigen::Matrix<Real, 2, 1> noise_vector(const DimerParams& params) {
  Eigen::Matrix<Real, 2, 1> amplitude = Eigen::Matrix<Real, 2, 1>::Zero();
  amplitude(params.damped_mode()) = std::sqrt(Real(params.loss_rate));
  return amplitude;
}

/// Vacuum Wigner sample from four independent standard normals:
/// alpha_k = (n_re + i n_im) / 2, i.e. variance 1/4 per real component.
template <typename Real>
WignerState<Real> vacuum_from_normals(const Eigen::Matrix<Real, 4, 1>& normals) {
  const Real half(0.5);
  return WignerState<Real>(std::complex<Real>(half * normals(0), half * normals(1)),
                           std::complex<Real>(half * normals(2), half * normals(3)));
}

/// Draws a vacuum sample from any generator exposing `normal_pair()`
/// returning two independent standard normals.
template <typename Rng>
WignerStated sample_vacuum(Rng& rng) {
  const auto [n0, n1] = rng.normal_pair();
  const auto [n2, n3] = rng.normal_pair();
  return vacuum_from_normals<double>(Eigen::Vector4d(n0, n1, n2, n3));
}

}  // namespace wdimer

#endif  // WDIMER_MODEL_HPP
