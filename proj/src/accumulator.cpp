#include "wdimer/accumulator.hpp"

#include <algorithm>
#include <cmath>

#include "wdimer/errors.hpp"

namespace wdimer {

MixedMoments BatchMoments::mean(Eigen::Index time_index) const {
  if (n_used == 0) return MixedMoments();
  return MixedMoments(sums.col(time_index) / static_cast<double>(n_used));
}

void MomentAccumulator::add_batch(BatchMoments batch) {
  if (batch.sums.cols() != static_cast<Eigen::Index>(save_times_.size()))
    throw ShapeMismatch("batch has " + std::to_string(batch.sums.cols()) + " save times, accumulator has " +
                        std::to_string(save_times_.size()));
  auto pos = std::upper_bound(batches_.begin(), batches_.end(), batch.first_traj,
                              [](std::uint64_t first, const BatchMoments& b) { return first < b.first_traj; });
  batches_.insert(pos, std::move(batch));
}

std::uint64_t MomentAccumulator::n_traj() const {
  std::uint64_t n = 0;
  for (const auto& b : batches_) n += b.n_traj;
  return n;
}

std::uint64_t MomentAccumulator::n_used() const {
  std::uint64_t n = 0;
  for (const auto& b : batches_) n += b.n_used;
  return n;
}

std::uint64_t MomentAccumulator::n_diverged() const {
  std::uint64_t n = 0;
  for (const auto& b : batches_) n += b.n_diverged;
  return n;
}

MixedMoments MomentAccumulator::pooled(std::size_t time_index) const {
  MomentVector total = MomentVector::Zero();
  std::uint64_t n = 0;
  for (const auto& b : batches_) {
    total += b.sums.col(static_cast<Eigen::Index>(time_index));
    n += b.n_used;
  }
  if (n == 0) return MixedMoments();
  return MixedMoments(total / static_cast<double>(n));
}

std::size_t MomentAccumulator::nearest_time_index(double t) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < save_times_.size(); ++i)
    if (std::abs(save_times_[i] - t) < std::abs(save_times_[best] - t)) best = i;
  return best;
}

MomentAccumulator merge(const MomentAccumulator& a, const MomentAccumulator& b) {
  if (a.empty() && a.save_times().empty()) return b;
  if (b.empty() && b.save_times().empty()) return a;
  if (a.save_times() != b.save_times()) throw ShapeMismatch("cannot merge accumulators with different save times");
  MomentAccumulator out = a;
  for (const auto& batch : b.batches()) out.add_batch(batch);
  return out;
}

}  // namespace wdimer
