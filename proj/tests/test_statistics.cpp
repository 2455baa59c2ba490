#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "synthetic.hpp"
#include "wdimer/engine.hpp"
#include "wdimer/statistics.hpp"

namespace wdimer {
namespace {

using testing::gaussian_moments;
using testing::two_mode_squeezed_moments;
using testing::vacuum_moments;
using C = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Displaced, squeezed and correlated Gaussian state.
MixedMoments generic_gaussian() {
  return gaussian_moments([](const Eigen::Vector4d& xi) {
    const C z1(0.9 * xi(0) + 0.2 * xi(2), 0.4 * xi(1));
    const C z2(0.3 * xi(0) + 0.5 * xi(2), 0.7 * xi(3) - 0.1 * xi(1));
    return WignerStated(C(1.5, -0.7) + z1, C(-0.4, 2.0) + z2);
  });
}

MomentAccumulator accumulator_of(const std::vector<MixedMoments>& batches, std::uint64_t per_batch) {
  MomentAccumulator acc({0.0});
  for (std::size_t b = 0; b < batches.size(); ++b) {
    BatchMoments batch;
    batch.first_traj = b * per_batch;
    batch.n_traj = batch.n_used = per_batch;
    batch.sums = MomentSums(kNumMonomials, 1);
    batch.sums.col(0) = batches[b].values() * double(per_batch);
    acc.add_batch(std::move(batch));
  }
  return acc;
}

TEST(Quadrature, VacuumMoments) {
  const MixedMoments m = vacuum_moments();
  for (double theta : {0.0, 0.4, 1.3, 2.9}) {
    for (int well : {1, 2}) {
      const auto spec = QuadratureSpec::make(well, theta);
      EXPECT_NEAR(quadrature_moment(m, spec, 1), 0.0, 1e-14);
      EXPECT_NEAR(quadrature_moment(m, spec, 2), 1.0, 1e-13);
      EXPECT_NEAR(quad_variance(m, spec), 1.0, 1e-13);
      EXPECT_NEAR(population(m, well), 0.0, 1e-13);
    }
    EXPECT_NEAR(quad_covariance(m, QuadratureSpec::make(1, theta), QuadratureSpec::make(2, 0.3)), 0.0, 1e-14);
  }
}

TEST(Quadrature, CoherentValue) {
  MixedMoments m;
  for (int i = 0; i < kNumMonomials; ++i) {
    const auto e = monomial(i);
    m.values()(i) = std::pow(C(2.0), e.p + e.q);  // alpha == 2 deterministically
    if (e.r + e.s > 0) m.values()(i) = 0.0;
  }
  EXPECT_NEAR(quadrature_moment(m, QuadratureSpec::make(1, 0.0), 1), 4.0, 1e-14);
  EXPECT_NEAR(population(m, 1), 3.5, 1e-14);
}

TEST(Quadrature, HalfTurnFlipsOddMoments) {
  const MixedMoments m = generic_gaussian();
  for (int well : {1, 2}) {
    const auto a = QuadratureSpec::make(well, 0.7), b = QuadratureSpec::make(well, 0.7 + kPi);
    for (int k = 1; k <= 4; ++k) {
      const double sign = (k % 2) ? -1.0 : 1.0;
      EXPECT_NEAR(quadrature_moment(m, b, k), sign * quadrature_moment(m, a, k), 1e-11);
    }
  }
}

TEST(Quadrature, SpecReducesAngle) {
  EXPECT_NEAR(QuadratureSpec::make(1, -0.5).theta, 2 * kPi - 0.5, 1e-15);
  EXPECT_NEAR(QuadratureSpec::make(2, 7.0).theta, 7.0 - 2 * kPi, 1e-15);
  EXPECT_ANY_THROW(QuadratureSpec::make(3, 0.0));
}

TEST(Cumulants, GaussianSetsVanish) {
  const MixedMoments m = generic_gaussian();
  for (int well : {1, 2})
    for (double theta : {0.0, 0.5, 1.1, 2.0}) {
      const auto q = quadrature_moments(m, QuadratureSpec::make(well, theta));
      EXPECT_NEAR(kappa3(q), 0.0, 1e-10);
      EXPECT_NEAR(kappa4(q, Kappa4Convention::Standard), 0.0, 1e-9);
    }
}

TEST(Cumulants, ZeroMeanReduction) {
  const QuadratureMoments q{0.0, 1.7, 0.0, 11.0};
  EXPECT_DOUBLE_EQ(kappa4(q, Kappa4Convention::MeanWeighted), 11.0 - 3 * 1.7 * 1.7);
  EXPECT_DOUBLE_EQ(kappa4(q, Kappa4Convention::Standard), 11.0 - 3 * 1.7 * 1.7);
}

TEST(Cumulants, ShiftedExponentialBothConventions) {
  // X = shift + Exp(1): all cumulants of order >= 2 are (k-1)!, so kappa3 = 2, kappa4 = 6.
  const double shift = 0.7;
  std::mt19937_64 gen(2024);
  std::exponential_distribution<double> exp(1.0);
  const int n = 10000000;
  std::vector<double> x(n);
  for (auto& v : x) v = shift + exp(gen);
  QuadratureMoments q;
  for (double v : x) {
    q.m1 += v;
    q.m2 += v * v;
    q.m3 += v * v * v;
    q.m4 += v * v * v * v;
  }
  q.m1 /= n;
  q.m2 /= n;
  q.m3 /= n;
  q.m4 /= n;
  // Brute-force central moments from the samples.
  double c2 = 0, c3 = 0, c4 = 0;
  for (double v : x) {
    const double d = v - q.m1;
    c2 += d * d;
    c3 += d * d * d;
    c4 += d * d * d * d;
  }
  c2 /= n;
  c3 /= n;
  c4 /= n;
  EXPECT_NEAR(kappa3(q), c3, 1e-8 * std::abs(c3) + 1e-9);
  EXPECT_NEAR(kappa4(q, Kappa4Convention::Standard), c4 - 3 * c2 * c2, 1e-7);
  EXPECT_NEAR(kappa4(q, Kappa4Convention::Standard), 6.0, 0.5);
  const double difference = 3 * q.m1 * q.m3 - 9 * q.m1 * q.m1 * q.m2 + 6 * std::pow(q.m1, 4);
  EXPECT_NEAR(kappa4(q, Kappa4Convention::MeanWeighted) - kappa4(q, Kappa4Convention::Standard), difference, 1e-7);
  // Exact raw moments of the shifted exponential give the population value of the mean-weighted convention.
  const double s = shift;
  const double r1 = s + 1, r2 = s * s + 2 * s + 2, r3 = s * s * s + 3 * s * s + 6 * s + 6,
               r4 = std::pow(s, 4) + 4 * std::pow(s, 3) + 12 * s * s + 24 * s + 24;
  const double weighted_exact = r4 + 2 * std::pow(r1, 4) - 3 * r2 * r2 - r1 * (r3 + 2 * std::pow(r1, 3) - 3 * r1 * r2);
  EXPECT_NEAR(kappa4(q, Kappa4Convention::MeanWeighted), weighted_exact, 0.5);
}

TEST(Cumulants, ConventionStrings) {
  EXPECT_EQ(kappa4_convention_from_string(to_string(Kappa4Convention::MeanWeighted)), Kappa4Convention::MeanWeighted);
  EXPECT_EQ(kappa4_convention_from_string("standard"), Kappa4Convention::Standard);
  EXPECT_ANY_THROW(kappa4_convention_from_string("other"));
}

TEST(Covariance, PerfectlyCorrelatedPair) {
  const MixedMoments m = gaussian_moments([](const Eigen::Vector4d& xi) {
    const C z(0.8 * xi(0), 0.3 * xi(1));
    return WignerStated(C(1, 0) + z, C(1, 0) + z);
  });
  const auto x1 = QuadratureSpec::make(1, 0.2), x2 = QuadratureSpec::make(2, 0.2);
  EXPECT_NEAR(quad_covariance(m, x1, x2), quad_variance(m, x1), 1e-12);
  EXPECT_THROW(quad_covariance(m, x1, QuadratureSpec::make(1, 0.5)), SameWellCovariance);
}

TEST(Covariance, MatrixMatchesScalarFunctions) {
  const MixedMoments m = generic_gaussian();
  const Eigen::Matrix4d cov = quadrature_covariance(m);
  const std::array<QuadratureSpec, 4> specs{QuadratureSpec::make(1, 0), QuadratureSpec::make(1, kPi / 2),
                                            QuadratureSpec::make(2, 0), QuadratureSpec::make(2, kPi / 2)};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(cov(i, i), quad_variance(m, specs[i]), 1e-12);
  EXPECT_NEAR(cov(0, 2), quad_covariance(m, specs[0], specs[2]), 1e-12);
  EXPECT_NEAR(cov(1, 3), quad_covariance(m, specs[1], specs[3]), 1e-12);
  EXPECT_NEAR(cov(0, 3), quad_covariance(m, specs[0], specs[3]), 1e-12);
}

TEST(Epr, VacuumProductIsOne) {
  const MixedMoments m = vacuum_moments();
  EXPECT_NEAR(epr_product(m, 1, 0.3, 1.2), 1.0, 1e-12);
  EXPECT_NEAR(epr_product(m, 2, 0.0, 0.0), 1.0, 1e-12);
  const EprOptimum opt = optimize_epr(m, 1, 12);
  EXPECT_NEAR(opt.value, 1.0, 1e-12);
  EXPECT_EQ(opt.theta_i, 0.0);
  EXPECT_EQ(opt.theta_j, 0.0);
}

TEST(Epr, TwoModeSqueezedInference) {
  // Inferred variances of a pure two-mode squeezed state: 1 / cosh(2r) each.
  const double r = 0.5;
  const MixedMoments m = two_mode_squeezed_moments(r);
  const EprOptimum opt = optimize_epr(m, 1, 90);
  EXPECT_NEAR(opt.value, 1.0 / std::pow(std::cosh(2 * r), 2), 1e-9);
  EXPECT_LE(opt.value, epr_product(m, 1, 0.3, 0.1) + 1e-15);
}

TEST(Epr, HalfTurnInvariance) {
  const MixedMoments m = generic_gaussian();
  for (int well : {1, 2})
    EXPECT_NEAR(epr_product(m, well, 0.4 + kPi, 1.1), epr_product(m, well, 0.4, 1.1), 1e-12);
}

TEST(Epr, OptimumBelowEveryGridValue) {
  const MixedMoments m = generic_gaussian();
  const int grid = 36;
  const EprOptimum opt = optimize_epr(m, 2, grid);
  for (int a = 0; a < grid; ++a)
    for (int b = 0; b < grid; ++b) EXPECT_LE(opt.value, epr_product(m, 2, a * kPi / grid, b * kPi / grid) + 1e-15);
  EXPECT_GE(opt.theta_i, 0.0);
  EXPECT_LT(opt.theta_i, kPi);
  EXPECT_GE(opt.theta_j, 0.0);
  EXPECT_LT(opt.theta_j, kPi);
}

TEST(DuanSimonTest, VacuumAtBound) {
  const MixedMoments m = vacuum_moments();
  EXPECT_NEAR(duan_simon(m, 0.6).value, 4.0, 1e-12);
  EXPECT_EQ(duan_simon(m, 0.6).bound, 4.0);
}

TEST(DuanSimonTest, TwoModeSqueezedAnalytic) {
  for (double r : {0.1, 0.4, 0.8}) {
    const MixedMoments m = two_mode_squeezed_moments(r);
    EXPECT_NEAR(duan_simon(m, kPi / 2).value, 4 * std::exp(-2 * r), 1e-10);
    EXPECT_NEAR(optimize_duan_simon(m, 180).value, 4 * std::exp(-2 * r), 1e-9);
    EXPECT_NEAR(optimize_duan_simon(m, 60, DuanSimonAngles::Independent).value, 4 * std::exp(-2 * r), 1e-9);
  }
}

TEST(DuanSimonTest, CovarianceOverloadAgrees) {
  const MixedMoments m = generic_gaussian();
  const Eigen::Matrix4d cov = quadrature_covariance(m);
  EXPECT_NEAR(duan_simon(cov, 0.3, 1.9).value, duan_simon(m, 0.3, 1.9).value, 1e-12);
  EXPECT_NEAR(epr_product(cov, 1, 0.3, 1.9), epr_product(m, 1, 0.3, 1.9), 1e-12);
}

TEST(Estimates, StandardErrorOverBatches) {
  // Batch means of a population: 0.5 + {-0.1, 0.1, -0.1, 0.1} in |alpha1|^2.
  std::vector<MixedMoments> batches;
  for (int b = 0; b < 4; ++b) {
    MixedMoments m = vacuum_moments();
    m.at(1, 1, 0, 0) += (b % 2 ? 0.1 : -0.1);
    batches.push_back(m);
  }
  const MomentAccumulator acc = accumulator_of(batches, 10);
  const Estimate e = population(acc, 0, 1);
  EXPECT_NEAR(e.value, 0.0, 1e-13);
  EXPECT_NEAR(e.error, std::sqrt(4 * 0.01 / 3) / 2, 1e-13);
  const Estimate v = quad_variance(acc, 0, QuadratureSpec::make(2, 0.0));
  EXPECT_NEAR(v.value, 1.0, 1e-13);
  EXPECT_NEAR(v.error, 0.0, 1e-13);
}

TEST(Estimates, SteadyWindowTrailingFraction) {
  MomentAccumulator acc(uniform_save_times(20.0, 0.5));
  BatchMoments batch;
  batch.n_traj = batch.n_used = 1;
  batch.sums = MomentSums::Zero(kNumMonomials, 41);
  acc.add_batch(batch);
  const auto window = steady_window(acc, 0.25);
  ASSERT_FALSE(window.empty());
  EXPECT_EQ(window.back(), 40u);
  EXPECT_NEAR(acc.save_times()[window.front()], 15.0, 1e-12);
}

TEST(Estimates, SteadyDriftOnLinearRamp) {
  const std::vector<double> times = uniform_save_times(4.0, 1.0);
  MomentAccumulator acc(times);
  for (int b = 0; b < 3; ++b) {
    BatchMoments batch;
    batch.first_traj = b;
    batch.n_traj = batch.n_used = 1;
    batch.sums = MomentSums::Zero(kNumMonomials, Eigen::Index(times.size()));
    for (std::size_t t = 0; t < times.size(); ++t) {
      batch.sums.col(Eigen::Index(t)) = vacuum_moments().values();
      batch.sums(monomial_index(1, 1, 0, 0), Eigen::Index(t)) += times[t] + 0.01 * b;
    }
    acc.add_batch(batch);
  }
  const SteadyEstimate s = steady_state(acc, {2, 3, 4}, [](const MixedMoments& m) { return population(m, 1); });
  EXPECT_NEAR(s.estimate.value, 3.01, 1e-12);
  EXPECT_NEAR(s.drift, 2.0, 1e-12);
  EXPECT_FALSE(s.stationary);
}

}  // namespace
}  // namespace wdimer
