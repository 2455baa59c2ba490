// Experiment pipelines behind the command-line subcommands.

#ifndef WDIMER_RUNNER_HPP
#define WDIMER_RUNNER_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wdimer/accumulator.hpp"
#include "wdimer/config.hpp"
#include "wdimer/report.hpp"

namespace wdimer {

inline constexpr const char* kObservablesFile = "observables.csv";
inline constexpr const char* kSteadyFile = "steady.csv";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kConfigEchoFile = "config.cfg";

struct RunControl {
  unsigned threads = 0;
  /// Continue from <out>/checkpoint.bin when present.
  bool resume = false;
  /// Stop (with a checkpoint written) once this many batches are stored; 0 runs to completion.
  std::uint32_t stop_after_batches = 0;
  std::ostream* log = nullptr;
};

struct EngineRun {
  bool completed = false;
  std::uint32_t batches_done = 0;
  MomentAccumulator accumulator;
};

/// Integrates the ensemble with periodic checkpoints, then writes
/// observables.csv, steady.csv and the final checkpoint into `out_dir`.
EngineRun run_engine(const RunConfig& config, const std::filesystem::path& out_dir, const RunControl& control = {});

struct OracleRun {
  OracleSeries series;
  MomentAccumulator accumulator;  // exact moments, one batch
};

/// Master-equation run from the vacuum on the config's save times; writes
/// observables.csv and steady.csv tagged source = oracle.
OracleRun run_oracle(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

/// Observable table of an oracle run without touching the file system.
ObservableTable oracle_table(const RunConfig& config, const OracleRun& run);

/// Maps a sweep parameter name to its config key; throws ConfigError for
/// anything but chi, epsilon, gamma or topology.
std::string sweep_key(const std::string& parameter);

struct SweepOutcome {
  std::string value;
  bool ok = false;
  std::string message;
};

/// One engine run per value in <out>/<parameter>=<value>/ and a summary.csv
/// of steady-state rows. Failed values are reported and the sweep goes on.
std::vector<SweepOutcome> run_sweep(const RunConfig& base, const std::string& parameter,
                                    const std::vector<std::string>& values, const std::filesystem::path& out_dir,
                                    const RunControl& control = {});

}  // namespace wdimer

#endif  // WDIMER_RUNNER_HPP
