#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "wdimer/engine.hpp"
#include "wdimer/errors.hpp"
#include "wdimer/statistics.hpp"

namespace wdimer {
namespace {

using C = std::complex<double>;

SimGrid small_grid(std::uint64_t n_traj, std::uint32_t n_batches, double t_final = 1.0) {
  SimGrid g;
  g.dt = 1e-3;
  g.t_final = t_final;
  g.save_times = uniform_save_times(t_final, 0.25);
  g.n_traj = n_traj;
  g.n_batches = n_batches;
  g.master_seed = 77;
  return g;
}

bool identical(const MomentAccumulator& a, const MomentAccumulator& b) {
  if (a.num_batches() != b.num_batches() || a.save_times() != b.save_times()) return false;
  for (std::size_t k = 0; k < a.num_batches(); ++k) {
    const auto &x = a.batch(k), &y = b.batch(k);
    if (x.first_traj != y.first_traj || x.n_used != y.n_used || x.n_diverged != y.n_diverged) return false;
    if ((x.sums.array() != y.sums.array()).any()) return false;
  }
  return true;
}

TEST(Grid, SaveStepsAndBatchRanges) {
  SimGrid g = small_grid(103, 10, 2.0);
  EXPECT_EQ(g.n_steps(), 2000u);
  EXPECT_EQ(g.save_steps().back(), 2000u);
  std::uint64_t covered = 0;
  for (std::uint32_t b = 0; b < g.n_batches; ++b) {
    const auto [first, count] = g.batch_range(b);
    EXPECT_EQ(first, covered);
    covered += count;
  }
  EXPECT_EQ(covered, 103u);
  g.save_times = {0.0, 0.0005};
  EXPECT_ANY_THROW(g.validate());
}

TEST(Integrator, LinearSolutionWithoutNoise) {
  // d(alpha)/dt = M alpha + (eps, 0): alpha(t) = alpha* - exp(M t) alpha* from rest.
  const DimerParams p{0.0, 1.0, 10.0, 1.0, Topology::LossAtWell2};
  SimGrid g = small_grid(2, 2, 40.0);
  g.save_times = {20.0, 40.0};
  EngineOptions o;
  o.noise = false;
  o.vacuum_initial = false;
  const TrajectoryOutcome out = integrate_trajectory(p, g, 0, o);
  ASSERT_FALSE(out.diverged);
  Eigen::Matrix2cd m;
  m << C(0, 0), C(0, 1), C(0, 1), C(-1, 0);
  const Eigen::ComplexEigenSolver<Eigen::Matrix2cd> eig(m);
  const Eigen::Vector2cd fixed(C(10, 0), C(0, 10));
  for (std::size_t k = 0; k < 2; ++k) {
    const double t = g.save_times[k];
    const Eigen::Matrix2cd flow = eig.eigenvectors() * (eig.eigenvalues() * t).array().exp().matrix().asDiagonal() *
                                  eig.eigenvectors().inverse();
    const Eigen::Vector2cd exact = fixed - flow * fixed;
    EXPECT_LT((out.samples[k] - exact).norm(), 1e-6);
  }
  EXPECT_LT(std::abs(out.samples[1](0) - C(10, 0)), 1e-6);
  EXPECT_LT(std::abs(out.samples[1](1) - C(0, 10)), 1e-6);
}

TEST(Integrator, NumberConservedWithoutPumpOrLoss) {
  const DimerParams p{1e-3, 1.0, 0.0, 0.0, Topology::LossAtWell2};
  SimGrid g = small_grid(1, 1, 10.0);
  g.save_times = {10.0};
  EngineOptions o;
  o.noise = false;
  o.vacuum_initial = false;
  o.initial_displacement = WignerStated(C(1, 0), C(0, 0));
  const WignerStated s = integrate_trajectory(p, g, 0, o).samples.back();
  EXPECT_NEAR(std::norm(s(0)) + std::norm(s(1)), 1.0, 1e-8);
}

TEST(Integrator, RefinementConvergesWithoutNoise) {
  const DimerParams p{0.05, 1.0, 3.0, 1.0, Topology::LossAtWell1};
  SimGrid g = small_grid(8, 2, 3.0);
  EngineOptions o;
  o.noise = false;
  const WignerStated coarse = integrate_trajectory(p, g, 5, o).samples.back();
  o.refinement = 1;
  const WignerStated fine = integrate_trajectory(p, g, 5, o).samples.back();
  EXPECT_LT((coarse - fine).norm(), 1e-9);
}

TEST(Integrator, TrajectoryIsPureFunctionOfIndex) {
  const DimerParams p{1e-2, 1.0, 10.0, 1.0, Topology::LossAtWell2};
  const SimGrid g = small_grid(64, 4);
  const auto a = integrate_trajectory(p, g, 17);
  const auto b = integrate_trajectory(p, g, 17);
  const auto c = integrate_trajectory(p, g, 18);
  ASSERT_EQ(a.samples.size(), g.save_times.size());
  for (std::size_t t = 0; t < a.samples.size(); ++t) EXPECT_EQ(a.samples[t], b.samples[t]);
  EXPECT_NE(a.samples.back(), c.samples.back());
}

TEST(Ensemble, DeterministicAcrossThreadCounts) {
  const DimerParams p{1e-2, 1.0, 10.0, 1.0, Topology::LossAtWell1};
  const SimGrid g = small_grid(203, 7);
  EngineOptions one, many;
  one.threads = 1;
  many.threads = 16;
  EXPECT_TRUE(identical(run_ensemble(p, g, one), run_ensemble(p, g, many)));
}

TEST(Ensemble, BatchesMatchDirectTrajectories) {
  const DimerParams p{1e-2, 1.0, 10.0, 1.0, Topology::LossAtWell2};
  const SimGrid g = small_grid(40, 2);
  const MomentAccumulator acc = run_ensemble(p, g);
  const std::size_t t = g.save_times.size() - 1;
  MomentVector sums = MomentVector::Zero();
  for (std::uint64_t k = 0; k < g.n_traj; ++k) add_monomials(integrate_trajectory(p, g, k).samples[t], sums);
  const MixedMoments direct(sums / double(g.n_traj));
  EXPECT_LT((acc.pooled(t).values() - direct.values()).norm(), 1e-10 * direct.values().norm());
  EXPECT_NEAR(epr_product(acc.pooled(t), 1, 0.3, 1.2), epr_product(direct, 1, 0.3, 1.2), 1e-10);
}

TEST(Ensemble, VacuumMeansAtTimeZero) {
  const DimerParams p{1e-3, 1.0, 10.0, 1.0, Topology::LossAtWell2};
  const SimGrid g = small_grid(20000, 20, 0.25);
  const MomentAccumulator acc = run_ensemble(p, g);
  for (int well : {1, 2}) {
    for (double theta : {0.0, 1.5707963267948966}) {
      const Estimate e = quadrature_moment(acc, 0, QuadratureSpec::make(well, theta), 1);
      EXPECT_LT(std::abs(e.value), 4 * e.error);
      EXPECT_NEAR(quad_variance(acc, 0, QuadratureSpec::make(well, theta)).value, 1.0, 0.05);
    }
  }
}

TEST(Ensemble, MergeOfPartitionsEqualsFullRun) {
  const DimerParams p{1e-2, 1.0, 10.0, 1.0, Topology::LossAtWell2};
  const SimGrid g = small_grid(120, 6);
  const MomentAccumulator full = run_ensemble(p, g);
  const std::vector<std::uint32_t> first{0, 2, 4}, second{1, 3, 5};
  const MomentAccumulator a = run_batches(p, g, {}, first), b = run_batches(p, g, {}, second);
  EXPECT_TRUE(identical(merge(a, b), full));
  EXPECT_TRUE(identical(merge(b, a), full));
  EXPECT_EQ(merge(a, b).n_traj(), a.n_traj() + b.n_traj());
  EXPECT_TRUE(identical(merge(full, MomentAccumulator(g.save_times)), full));
  EXPECT_THROW(merge(full, MomentAccumulator({0.0})), ShapeMismatch);
}

TEST(Ensemble, TrajectoryOffsetExtendsEnsemble) {
  const DimerParams p{1e-2, 1.0, 10.0, 1.0, Topology::LossAtWell2};
  const SimGrid whole = small_grid(80, 4);
  SimGrid head = small_grid(40, 2), tail = small_grid(40, 2);
  tail.traj_offset = 40;
  EXPECT_TRUE(identical(merge(run_ensemble(p, head), run_ensemble(p, tail)), run_ensemble(p, whole)));
}

TEST(Ensemble, DivergenceGuard) {
  const DimerParams p{0.0, 1.0, 10.0, 0.0, Topology::LossAtWell2};
  const SimGrid g = small_grid(32, 2, 1.0);
  EngineOptions o;
  o.divergence_guard = 5.0;
  const std::vector<std::uint32_t> ids{0, 1};
  const MomentAccumulator acc = run_batches(p, g, o, ids);
  EXPECT_THROW(run_ensemble(p, g, o), TooManyDivergences);
  EXPECT_EQ(acc.n_diverged() + acc.n_used(), 32u);
  EXPECT_GT(acc.n_diverged(), 0u);
  EXPECT_THROW(check_divergences(acc, o), TooManyDivergences);
}

}  // namespace
}  // namespace wdimer
