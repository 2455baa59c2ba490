// Exact moment sets for Gaussian phase-space distributions, built with a
// tensor Gauss-Hermite rule (exact for polynomials of degree <= 9 per axis).

#ifndef WDIMER_TESTS_SYNTHETIC_HPP
#define WDIMER_TESTS_SYNTHETIC_HPP

#include <array>
#include <cmath>
#include <functional>

#include "wdimer/moments.hpp"

namespace wdimer::testing {

/// Averages the monomials of map(xi) over four independent standard normals.
inline MixedMoments gaussian_moments(const std::function<WignerStated(const Eigen::Vector4d&)>& map) {
  constexpr std::array<double, 5> nodes{0.0, 1.3556261799742659, -1.3556261799742659, 2.8569700138728056,
                                        -2.8569700138728056};
  constexpr std::array<double, 5> weights{8.0 / 15.0, 0.2220759220056126, 0.2220759220056126,
                                          0.011257411327720689, 0.011257411327720689};
  MomentVector sums = MomentVector::Zero();
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      for (int c = 0; c < 5; ++c)
        for (int d = 0; d < 5; ++d) {
          const double w = weights[a] * weights[b] * weights[c] * weights[d];
          MomentVector point = MomentVector::Zero();
          add_monomials(map(Eigen::Vector4d(nodes[a], nodes[b], nodes[c], nodes[d])), point);
          sums += w * point;
        }
  return MixedMoments(sums);
}

/// Wigner vacuum in both wells.
inline MixedMoments vacuum_moments() {
  return gaussian_moments([](const Eigen::Vector4d& xi) { return vacuum_from_normals<double>(xi); });
}

/// Two-mode squeezed vacuum with squeezing parameter r.
inline MixedMoments two_mode_squeezed_moments(double r) {
  return gaussian_moments([r](const Eigen::Vector4d& xi) {
    const WignerStated v = vacuum_from_normals<double>(xi);
    const double c = std::cosh(r), s = std::sinh(r);
    return WignerStated(c * v(0) + s * std::conj(v(1)), c * v(1) + s * std::conj(v(0)));
  });
}

}  // namespace wdimer::testing

#endif  // WDIMER_TESTS_SYNTHETIC_HPP
