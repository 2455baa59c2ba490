// Ziggurat standard-normal sampler (Marsaglia-Tsang layout with Doornik's
// 128-block tables) driven by an arbitrary source of 64-bit words.

#ifndef WDIMER_GAUSSIAN_HPP
#define WDIMER_GAUSSIAN_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace wdimer {

class Ziggurat {
 public:
  static constexpr int kBlocks = 128;
  static constexpr double kTailStart = 3.442619855899;
  static constexpr double kBlockArea = 9.91256303526217e-3;

  static const Ziggurat& tables() {
    static const Ziggurat instance;
    return instance;
  }

  /// `next_word()` must return independent uniformly distributed 64-bit words.
  /// The first word is always consumed; further words only on rejection.
  template <typename WordSource>
  double sample(WordSource&& next_word) const {
    const std::uint64_t w = next_word();
    double value;
    if (try_rectangle(w, value)) return value;
    return after_rejection(w, next_word);
  }

  /// Accepts the sample when the first word lands inside a rectangle, which
  /// happens for about 99% of words.
  bool try_rectangle(std::uint64_t w, double& value) const {
    const auto layer = static_cast<int>(w & 0x7F);
    const double u = 2.0 * unit(w) - 1.0;
    value = u * x_[layer];
    return std::abs(u) < ratio_[layer];
  }

  /// Continues sample() after `w` failed try_rectangle.
  template <typename WordSource>
  double after_rejection(std::uint64_t w, WordSource&& next_word) const {
    for (;;) {
      const auto layer = static_cast<int>(w & 0x7F);
      const double u = 2.0 * unit(w) - 1.0;
      if (layer == 0) return tail(u < 0.0, next_word);
      const double x = u * x_[layer];
      const double f0 = std::exp(-0.5 * (x_[layer] * x_[layer] - x * x));
      const double f1 = std::exp(-0.5 * (x_[layer + 1] * x_[layer + 1] - x * x));
      if (f1 + unit(next_word()) * (f0 - f1) < 1.0) return x;
      w = next_word();
      double value;
      if (try_rectangle(w, value)) return value;
    }
  }

  /// Uniform in (0, 1) from the top 53 bits of a word.
  static double unit(std::uint64_t w) { return (static_cast<double>(w >> 12) + 0.5) * 0x1.0p-52; }

 private:
  Ziggurat() {
    double f = std::exp(-0.5 * kTailStart * kTailStart);
    x_[0] = kBlockArea / f;
    x_[1] = kTailStart;
    x_[kBlocks] = 0.0;
    for (int i = 2; i < kBlocks; ++i) {
      x_[i] = std::sqrt(-2.0 * std::log(kBlockArea / x_[i - 1] + f));
      f = std::exp(-0.5 * x_[i] * x_[i]);
    }
    for (int i = 0; i < kBlocks; ++i) ratio_[i] = x_[i + 1] / x_[i];
  }

  template <typename WordSource>
  static double tail(bool negative, WordSource& next_word) {
    double x = 0.0;
    double y = 0.0;
    do {
      x = std::log(unit(next_word())) / kTailStart;
      y = std::log(unit(next_word()));
    } while (-2.0 * y < x * x);
    return negative ? x - kTailStart : kTailStart - x;
  }

  std::array<double, kBlocks + 1> x_{};
  std::array<double, kBlocks> ratio_{};
};

}  // namespace wdimer

#endif  // WDIMER_GAUSSIAN_HPP
