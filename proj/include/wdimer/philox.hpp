// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Every random number is a pure function of (key, counter), so a trajectory
// can draw its noise from any worker thread without stream coordination.

#ifndef WDIMER_PHILOX_HPP
#define WDIMER_PHILOX_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace wdimer {

struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  static constexpr Key key_from_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }
};

/// Uniform double in the open interval (0, 1) from 64 random bits.
inline double open_unit_interval(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Two independent standard normals from one Philox block (Box-Muller).
inline std::pair<double, double> normal_pair_from_block(const Philox4x32::Counter& block) {
  const double u1 = open_unit_interval(block[0], block[1]);
  const double u2 = open_unit_interval(block[2], block[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Sequential view over a Philox key and a fixed counter prefix; block i of
/// the stream uses counter (i, tag, lo, hi).
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint32_t tag, std::uint64_t stream_id)
      : key_(Philox4x32::key_from_seed(seed)),
        tag_(tag),
        lo_(static_cast<std::uint32_t>(stream_id)),
        hi_(static_cast<std::uint32_t>(stream_id >> 32)) {}

  Philox4x32::Counter next_block() { return Philox4x32::generate({index_++, tag_, lo_, hi_}, key_); }

  std::pair<double, double> normal_pair() { return normal_pair_from_block(next_block()); }

  std::uint32_t position() const { return index_; }

 private:
  Philox4x32::Key key_;
  std::uint32_t tag_;
  std::uint32_t lo_;
  std::uint32_t hi_;
  std::uint32_t index_ = 0;
};

}  // namespace wdimer

#endif  // WDIMER_PHILOX_HPP
