// Binary checkpoint of a partially completed ensemble.
//
// Layout (all integers little-endian, doubles as IEEE-754 bit patterns):
//   "TWDC" | u32 version | u64 physics hash | u32 text length | config text
//   u32 total batches | u64 save-time count | f64 save times...
//   u32 stored batches | per batch: u32 id, u64 first, n_traj, n_used,
//   n_diverged, then (re, im) for every monomial at every save time
//   u64 FNV-1a checksum of everything before it
//
// The generator is counter based, so the set of completed batch ids is the
// complete RNG progress: a resumed run recomputes exactly the missing ones.

#ifndef WDIMER_CHECKPOINT_HPP
#define WDIMER_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wdimer/accumulator.hpp"

namespace wdimer {

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t physics_hash = 0;
  std::string config_text;
  std::uint32_t total_batches = 0;
  /// Ascending; parallel to accumulator.batches() (ordered by first trajectory).
  std::vector<std::uint32_t> batch_ids;
  MomentAccumulator accumulator;

  bool complete() const { return batch_ids.size() == total_batches; }
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
/// Throws CheckpointMismatch on a bad magic, version, size or checksum.
Checkpoint decode_checkpoint(const std::string& bytes);

/// Writes through a temporary file and renames it into place.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace wdimer

#endif  // WDIMER_CHECKPOINT_HPP
