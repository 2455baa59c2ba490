// Mergeable per-batch sums of the monomial basis at every save time.

#ifndef WDIMER_ACCUMULATOR_HPP
#define WDIMER_ACCUMULATOR_HPP

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "wdimer/moments.hpp"

namespace wdimer {

using MomentSums = Eigen::Matrix<std::complex<double>, kNumMonomials, Eigen::Dynamic>;

/// One sub-ensemble: trajectories [first_traj, first_traj + n_traj).
/// Column t of `sums` holds the monomial sums over the n_used surviving
/// trajectories at save time t.
struct BatchMoments {
  std::uint64_t first_traj = 0;
  std::uint64_t n_traj = 0;
  std::uint64_t n_used = 0;
  std::uint64_t n_diverged = 0;
  MomentSums sums;

  MixedMoments mean(Eigen::Index time_index) const;
};

class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  explicit MomentAccumulator(std::vector<double> save_times) : save_times_(std::move(save_times)) {}

  const std::vector<double>& save_times() const { return save_times_; }
  std::size_t num_times() const { return save_times_.size(); }
  std::size_t num_batches() const { return batches_.size(); }
  bool empty() const { return batches_.empty(); }
  const std::vector<BatchMoments>& batches() const { return batches_; }
  const BatchMoments& batch(std::size_t b) const { return batches_[b]; }

  /// Inserts keeping batches ordered by first trajectory.
  void add_batch(BatchMoments batch);

  std::uint64_t n_traj() const;
  std::uint64_t n_used() const;
  std::uint64_t n_diverged() const;

  /// Ensemble means over all surviving trajectories of all batches.
  MixedMoments pooled(std::size_t time_index) const;
  MixedMoments batch_mean(std::size_t batch_index, std::size_t time_index) const {
    return batches_[batch_index].mean(static_cast<Eigen::Index>(time_index));
  }

  /// Index of the save time closest to t.
  std::size_t nearest_time_index(double t) const;

 private:
  std::vector<double> save_times_;
  std::vector<BatchMoments> batches_;
};

/// Weighted combination of raw sums; batch lists are concatenated (kept in
/// first-trajectory order). Throws ShapeMismatch on differing save times.
MomentAccumulator merge(const MomentAccumulator& a, const MomentAccumulator& b);

}  // namespace wdimer

#endif  // WDIMER_ACCUMULATOR_HPP
