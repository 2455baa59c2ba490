// Ensemble integration of the truncated Wigner equations.

#ifndef WDIMER_ENGINE_HPP
#define WDIMER_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "wdimer/accumulator.hpp"
#include "wdimer/model.hpp"

namespace wdimer {

struct SimGrid {
  double dt = 1e-3;
  double t_final = 20.0;
  std::vector<double> save_times;
  std::uint64_t n_traj = 1000;
  std::uint32_t n_batches = 100;
  std::uint64_t master_seed = 0;
  /// Global index of the first trajectory; lets disjoint runs be merged.
  std::uint64_t traj_offset = 0;

  void validate() const;
  std::uint64_t n_steps() const;
  /// Save times expressed as step counts (multiples of dt).
  std::vector<std::uint64_t> save_steps() const;
  /// Trajectory range [first, first + count) of batch b.
  std::pair<std::uint64_t, std::uint64_t> batch_range(std::uint32_t b) const;
};

/// Evenly spaced save times 0, interval, 2*interval, ... <= t_final.
std::vector<double> uniform_save_times(double t_final, double interval);

struct EngineOptions {
  /// Threads used by run_batches; 0 selects the hardware concurrency.
  unsigned threads = 0;
  /// Test hook: drop the stochastic term entirely.
  bool noise = true;
  /// Add vacuum Wigner fluctuations to the initial amplitudes.
  bool vacuum_initial = true;
  /// Coherent displacement of the initial state (vacuum when zero).
  WignerStated initial_displacement = WignerStated::Zero();
  /// Each dt step is split into 2^refinement substeps. The substep noise
  /// is a Brownian bridge of the dt-level increment, so runs at different
  /// refinement sample the same noise path.
  int refinement = 0;
  double divergence_guard = 1e6;
  /// Largest tolerated fraction of diverged trajectories.
  double max_divergence_fraction = 1e-3;
};

struct TrajectoryOutcome {
  std::vector<WignerStated> samples;  // one per save time, up to divergence
  bool diverged = false;
};

/// One fourth-order Runge-Kutta step of the drift.
WignerStated rk4_step(const WignerStated& state, const DimerParams& params, double h);

TrajectoryOutcome integrate_trajectory(const DimerParams& params, const SimGrid& grid, std::uint64_t traj_index,
                                       const EngineOptions& options = {});

/// Integrates the listed batches (global batch ids in [0, n_batches)).
/// The result does not depend on the thread count.
MomentAccumulator run_batches(const DimerParams& params, const SimGrid& grid, const EngineOptions& options,
                              std::span<const std::uint32_t> batch_ids);

/// Throws TooManyDivergences when the diverged fraction exceeds the limit.
void check_divergences(const MomentAccumulator& acc, const EngineOptions& options);

MomentAccumulator run_ensemble(const DimerParams& params, const SimGrid& grid, const EngineOptions& options = {});

}  // namespace wdimer

#endif  // WDIMER_ENGINE_HPP
