// Basis of mixed complex monomials a1^p a1*^q a2^r a2*^s with p+q+r+s <= 4.

#ifndef WDIMER_MOMENTS_HPP
#define WDIMER_MOMENTS_HPP

#include <array>
#include <complex>
#include <cstddef>

#include <Eigen/Core>

#include "wdimer/model.hpp"

namespace wdimer {

inline constexpr int kMaxMomentOrder = 4;
inline constexpr int kNumMonomials = 70;  // C(8, 4)

struct MonomialExponents {
  int p, q, r, s;  // powers of a1, conj(a1), a2, conj(a2)
  constexpr int order() const { return p + q + r + s; }
};

namespace detail {

constexpr std::array<MonomialExponents, kNumMonomials> make_monomial_table() {
  std::array<MonomialExponents, kNumMonomials> table{};
  std::size_t n = 0;
  for (int order = 0; order <= kMaxMomentOrder; ++order)
    for (int p = 0; p <= order; ++p)
      for (int q = 0; p + q <= order; ++q)
        for (int r = 0; p + q + r <= order; ++r) table[n++] = {p, q, r, order - p - q - r};
  return table;
}

constexpr auto kMonomialTable = make_monomial_table();

constexpr std::array<int, 625> make_index_lookup() {
  std::array<int, 625> lookup{};
  for (auto& v : lookup) v = -1;
  for (int i = 0; i < kNumMonomials; ++i) {
    const auto& m = kMonomialTable[static_cast<std::size_t>(i)];
    lookup[static_cast<std::size_t>(((m.p * 5 + m.q) * 5 + m.r) * 5 + m.s)] = i;
  }
  return lookup;
}

constexpr auto kMonomialLookup = make_index_lookup();

}  // namespace detail

constexpr const MonomialExponents& monomial(int index) {
  return detail::kMonomialTable[static_cast<std::size_t>(index)];
}

/// Position of a1^p a1*^q a2^r a2*^s in the basis; -1 when outside it.
constexpr int monomial_index(int p, int q, int r, int s) {
  if (p < 0 || q < 0 || r < 0 || s < 0 || p + q + r + s > kMaxMomentOrder) return -1;
  return detail::kMonomialLookup[static_cast<std::size_t>(((p * 5 + q) * 5 + r) * 5 + s)];
}

using MomentVector = Eigen::Matrix<std::complex<double>, kNumMonomials, 1>;

/// Ensemble averages of the monomial basis at one time.
class MixedMoments {
 public:
  MixedMoments() : values_(MomentVector::Zero()) {}
  explicit MixedMoments(const MomentVector& values) : values_(values) {}

  std::complex<double> operator()(int p, int q, int r, int s) const {
    return values_(monomial_index(p, q, r, s));
  }
  std::complex<double>& at(int p, int q, int r, int s) { return values_(monomial_index(p, q, r, s)); }

  /// E[a_w^p conj(a_w)^q] for a single well w in {1, 2}.
  std::complex<double> single(int well, int p, int q) const {
    return well == 1 ? (*this)(p, q, 0, 0) : (*this)(0, 0, p, q);
  }

  const MomentVector& values() const { return values_; }
  MomentVector& values() { return values_; }

 private:
  MomentVector values_;
};

/// Adds the monomial values of one sample to `sums`.
template <typename Derived>
void add_monomials(const WignerStated& state, Eigen::MatrixBase<Derived>& sums) {
  using C = std::complex<double>;
  std::array<C, 5> a1{}, c1{}, a2{}, c2{};
  a1[0] = c1[0] = a2[0] = c2[0] = C(1.0, 0.0);
  for (int k = 1; k <= kMaxMomentOrder; ++k) {
    a1[k] = a1[k - 1] * state(0);
    c1[k] = c1[k - 1] * std::conj(state(0));
    a2[k] = a2[k - 1] * state(1);
    c2[k] = c2[k - 1] * std::conj(state(1));
  }
  for (int i = 0; i < kNumMonomials; ++i) {
    const auto& m = monomial(i);
    sums(i) += (a1[m.p] * c1[m.q]) * (a2[m.r] * c2[m.s]);
  }
}

}  // namespace wdimer

#endif  // WDIMER_MOMENTS_HPP
