#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "wdimer/gaussian.hpp"
#include "wdimer/model.hpp"
#include "wdimer/philox.hpp"

namespace wdimer {
namespace {

using C = std::complex<double>;

TEST(Philox, KnownAnswerVectors) {
  using Ctr = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}), (Ctr{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (Ctr{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Ctr{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
  PhiloxStream a(42, 1, 7), b(42, 1, 7), c(42, 1, 8), d(43, 1, 7);
  const auto block = a.next_block();
  EXPECT_EQ(block, b.next_block());
  EXPECT_NE(block, c.next_block());
  EXPECT_NE(block, d.next_block());
  EXPECT_EQ(a.position(), 1u);
}

TEST(Philox, OpenUnitIntervalExcludesEndpoints) {
  EXPECT_GT(open_unit_interval(0, 0), 0.0);
  EXPECT_LT(open_unit_interval(0xffffffff, 0xffffffff), 1.0);
}

double sample_moment(const std::vector<double>& x, int k) {
  double s = 0.0;
  for (double v : x) s += std::pow(v, k);
  return s / static_cast<double>(x.size());
}

TEST(Gaussian, BoxMullerMoments) {
  PhiloxStream rng(5, 0, 0);
  std::vector<double> x;
  for (int i = 0; i < 500000; ++i) {
    const auto [u, v] = rng.normal_pair();
    x.push_back(u);
    x.push_back(v);
  }
  const double n = static_cast<double>(x.size());
  EXPECT_NEAR(sample_moment(x, 1), 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sample_moment(x, 2), 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(sample_moment(x, 4), 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(Gaussian, ZigguratMoments) {
  std::mt19937_64 words(11);
  const auto& zig = Ziggurat::tables();
  std::vector<double> x;
  for (int i = 0; i < 2000000; ++i) x.push_back(zig.sample([&] { return words(); }));
  const double n = static_cast<double>(x.size());
  EXPECT_NEAR(sample_moment(x, 1), 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sample_moment(x, 2), 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(sample_moment(x, 3), 0.0, 4.0 * std::sqrt(15.0 / n));
  EXPECT_NEAR(sample_moment(x, 4), 3.0, 4.0 * std::sqrt(96.0 / n));
  // Tail mass beyond the base strip start.
  double tail = 0.0;
  for (double v : x) tail += std::abs(v) > Ziggurat::kTailStart;
  const double expected = std::erfc(Ziggurat::kTailStart / std::sqrt(2.0));
  EXPECT_NEAR(tail / n, expected, 5.0 * std::sqrt(expected / n));
}

TEST(Drift, EmptyWellsGivePumpOnly) {
  const DimerParams p{0.3, 1.0, 2.5, 0.7, Topology::LossAtWell2};
  const WignerStated d = drift<double>(WignerStated::Zero(), p);
  EXPECT_EQ(d(0), C(2.5, 0.0));
  EXPECT_EQ(d(1), C(0.0, 0.0));
}

TEST(Drift, LinearFixedPoint) {
  const DimerParams p{0.0, 1.0, 10.0, 1.0, Topology::LossAtWell2};
  const WignerStated d = drift<double>(WignerStated(C(10, 0), C(0, 10)), p);
  EXPECT_LT(std::abs(d(0)), 1e-12);
  EXPECT_LT(std::abs(d(1)), 1e-12);
}

TEST(Drift, NonlinearTermByTerm) {
  const DimerParams p{1e-3, 1.0, 10.0, 1.0, Topology::LossAtWell2};
  const WignerStated d = drift<double>(WignerStated(C(1, 0), C(0, 0)), p);
  EXPECT_NEAR(d(0).real(), 10.0, 1e-15);
  EXPECT_NEAR(d(0).imag(), -2e-3, 1e-15);
  EXPECT_NEAR(d(1).real(), 0.0, 1e-15);
  EXPECT_NEAR(d(1).imag(), 1.0, 1e-15);
}

TEST(Drift, LossFollowsTopology) {
  const WignerStated s(C(1, 0.5), C(-0.3, 2));
  DimerParams p{0.0, 1.0, 0.0, 0.0, Topology::LossAtWell2};
  const WignerStated undamped = drift<double>(s, p);
  p.loss_rate = 0.8;
  const WignerStated at2 = drift<double>(s, p);
  p.topology = Topology::LossAtWell1;
  const WignerStated at1 = drift<double>(s, p);
  EXPECT_LT(std::abs(at2(0) - undamped(0)), 1e-15);
  EXPECT_LT(std::abs(at2(1) - (undamped(1) - 0.8 * s(1))), 1e-15);
  EXPECT_LT(std::abs(at1(0) - (undamped(0) - 0.8 * s(0))), 1e-15);
  EXPECT_LT(std::abs(at1(1) - undamped(1)), 1e-15);
}

TEST(Noise, AmplitudeOnDampedWell) {
  EXPECT_EQ(noise_vector(DimerParams{0, 1, 0, 1, Topology::LossAtWell2}), Eigen::Vector2d(0, 1));
  EXPECT_EQ(noise_vector(DimerParams{0, 1, 0, 0, Topology::LossAtWell2}), Eigen::Vector2d(0, 0));
  EXPECT_EQ(noise_vector(DimerParams{0, 1, 0, 4, Topology::LossAtWell1}), Eigen::Vector2d(2, 0));
}

TEST(Vacuum, SampleStatistics) {
  PhiloxStream rng(3, 2, 0);
  const int n = 1000000;
  C mean1 = 0, mean2 = 0;
  double n1 = 0, n2 = 0;
  for (int i = 0; i < n; ++i) {
    const WignerStated s = sample_vacuum(rng);
    mean1 += s(0);
    mean2 += s(1);
    n1 += std::norm(s(0));
    n2 += std::norm(s(1));
  }
  mean1 /= n;
  mean2 /= n;
  n1 /= n;
  n2 /= n;
  // Each real component has variance 1/4, |alpha|^2 has variance 1/4.
  const double se_mean = 0.5 / std::sqrt(double(n));
  EXPECT_LT(std::abs(mean1.real()), 3 * se_mean);
  EXPECT_LT(std::abs(mean1.imag()), 3 * se_mean);
  EXPECT_LT(std::abs(mean2.real()), 3 * se_mean);
  EXPECT_LT(std::abs(mean2.imag()), 3 * se_mean);
  EXPECT_NEAR(n1, 0.5, 0.002);
  EXPECT_NEAR(n2, 0.5, 0.002);
  EXPECT_NEAR(n1 - 0.5, 0.0, 0.002);
}

TEST(Topology, StringRoundTrip) {
  for (auto t : {Topology::LossAtWell1, Topology::LossAtWell2}) EXPECT_EQ(topology_from_string(to_string(t)), t);
  EXPECT_ANY_THROW(topology_from_string("loss_at_well3"));
}

TEST(Params, ValidateRejectsUnphysicalValues) {
  EXPECT_NO_THROW((DimerParams{0, 1, 10, 1, Topology::LossAtWell2}).validate());
  EXPECT_ANY_THROW((DimerParams{-1, 1, 10, 1, Topology::LossAtWell2}).validate());
  EXPECT_ANY_THROW((DimerParams{0, 0, 10, 1, Topology::LossAtWell2}).validate());
  EXPECT_ANY_THROW((DimerParams{0, 1, 10, -1, Topology::LossAtWell2}).validate());
}

}  // namespace
}  // namespace wdimer
