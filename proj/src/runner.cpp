#include "wdimer/runner.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <sstream>

#include "wdimer/checkpoint.hpp"
#include "wdimer/engine.hpp"
#include "wdimer/errors.hpp"
#include "wdimer/oracle.hpp"

namespace wdimer {

namespace {

void note(std::ostream* log, const std::string& message) {
  if (log) *log << message << std::endl;
}

std::string csv_safe(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

Checkpoint resume_point(const RunConfig& config, const std::filesystem::path& path, std::ostream* log) {
  Checkpoint cp = read_checkpoint(path);
  if (cp.physics_hash != physics_hash(config))
    throw CheckpointMismatch("checkpoint " + path.string() + " was written by a different configuration");
  if (cp.total_batches != config.n_batches || cp.accumulator.save_times() != config.grid().save_times)
    throw CheckpointMismatch("checkpoint " + path.string() + " does not match the batch layout");
  const SimGrid grid = config.grid();
  for (std::size_t b = 0; b < cp.batch_ids.size(); ++b) {
    const auto [first, count] = grid.batch_range(cp.batch_ids[b]);
    const BatchMoments& batch = cp.accumulator.batch(b);
    if (batch.first_traj != grid.traj_offset + first || batch.n_traj != count)
      throw CheckpointMismatch("checkpoint batch " + std::to_string(cp.batch_ids[b]) + " has the wrong range");
  }
  note(log, "resuming with " + std::to_string(cp.batch_ids.size()) + " of " + std::to_string(cp.total_batches) +
                " batches done");
  return cp;
}

}  // namespace

EngineRun run_engine(const RunConfig& config, const std::filesystem::path& out_dir, const RunControl& control) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const auto checkpoint_path = out_dir / kCheckpointFile;
  const SimGrid grid = config.grid();
  const EngineOptions options = config.engine_options(control.threads);

  Checkpoint cp;
  if (control.resume && std::filesystem::exists(checkpoint_path)) {
    cp = resume_point(config, checkpoint_path, control.log);
  } else {
    cp.physics_hash = physics_hash(config);
    cp.config_text = serialize(config);
    cp.total_batches = config.n_batches;
    cp.accumulator = MomentAccumulator(grid.save_times);
  }
  write_text_file(out_dir / kConfigEchoFile, serialize(config));

  std::vector<std::uint32_t> pending;
  for (std::uint32_t b = 0; b < config.n_batches; ++b)
    if (!std::binary_search(cp.batch_ids.begin(), cp.batch_ids.end(), b)) pending.push_back(b);

  EngineRun result;
  std::size_t cursor = 0;
  while (cursor < pending.size()) {
    std::size_t chunk = std::min<std::size_t>(config.checkpoint_interval, pending.size() - cursor);
    if (control.stop_after_batches > 0) {
      if (cp.batch_ids.size() >= control.stop_after_batches) break;
      chunk = std::min<std::size_t>(chunk, control.stop_after_batches - cp.batch_ids.size());
    }
    const std::span<const std::uint32_t> ids(pending.data() + cursor, chunk);
    const MomentAccumulator part = run_batches(config.params, grid, options, ids);
    for (std::size_t k = 0; k < part.num_batches(); ++k) cp.accumulator.add_batch(part.batch(k));
    cp.batch_ids.insert(cp.batch_ids.end(), ids.begin(), ids.end());
    std::sort(cp.batch_ids.begin(), cp.batch_ids.end());
    cursor += chunk;
    write_checkpoint(checkpoint_path, cp);
    note(control.log, std::to_string(cp.batch_ids.size()) + "/" + std::to_string(cp.total_batches) + " batches");
  }

  result.batches_done = static_cast<std::uint32_t>(cp.batch_ids.size());
  result.completed = cp.complete();
  if (!result.completed) {
    result.accumulator = std::move(cp.accumulator);
    note(control.log, "stopped early; rerun with --resume to continue");
    return result;
  }
  if (pending.empty()) write_checkpoint(checkpoint_path, cp);
  check_divergences(cp.accumulator, options);

  ObservableTable table = make_table(config, "engine", observable_rows(cp.accumulator, config.observables));
  table.metadata["n_traj_used"] = std::to_string(cp.accumulator.n_used());
  table.metadata["n_traj_diverged"] = std::to_string(cp.accumulator.n_diverged());
  write_text_file(out_dir / kObservablesFile, format_csv(table));
  write_text_file(out_dir / kSteadyFile, format_steady_csv(steady_rows(cp.accumulator, config.observables)));
  result.accumulator = std::move(cp.accumulator);
  return result;
}

ObservableTable oracle_table(const RunConfig& config, const OracleRun& run) {
  std::vector<ObservableRow> rows = observable_rows(run.accumulator, config.observables);
  for (auto& r : rows) r.n_used = 0;
  ObservableTable table = make_table(config, "oracle", std::move(rows));
  table.metadata["oracle_max_boundary_population"] = format_double(run.series.max_boundary_population);
  table.metadata["oracle_renormalizations"] = std::to_string(run.series.renormalized_steps.size());
  table.metadata["oracle_max_trace_correction"] = format_double(run.series.max_trace_correction);
  table.metadata["oracle_max_hermiticity_error"] = format_double(run.series.max_hermiticity_error);
  return table;
}

OracleRun run_oracle(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream* log) {
  config.validate();
  const FockSpace space{config.oracle.cutoff1, config.oracle.cutoff2};
  const OracleOptions options{config.oracle.hamiltonian, config.oracle.loss_scale};
  const Liouvillian generator(space, config.params, options);
  const std::vector<double> times = config.grid().save_times;
  note(log, "oracle: Fock space " + std::to_string(space.dimension()) + " states, " +
                std::to_string(std::llround(times.back() / config.oracle.dt)) + " steps");

  OracleRun run;
  run.series = evolve(FockDensityMatrixd::vacuum(space), generator, config.oracle.dt, times);
  std::vector<MixedMoments> moments;
  for (const auto& state : run.series.states) moments.push_back(symmetric_moments(state));
  run.accumulator = exact_accumulator(run.series.times, moments);
  if (!run.series.renormalized_steps.empty())
    note(log, "oracle: trace renormalized at " + std::to_string(run.series.renormalized_steps.size()) +
                  " steps (largest correction " + format_double(run.series.max_trace_correction) + ")");

  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir / kConfigEchoFile, serialize(config));
  write_text_file(out_dir / kObservablesFile, format_csv(oracle_table(config, run)));
  write_text_file(out_dir / kSteadyFile, format_steady_csv(steady_rows(run.accumulator, config.observables)));
  return run;
}

std::string sweep_key(const std::string& parameter) {
  if (parameter == "chi") return "chi";
  if (parameter == "epsilon") return "pump_rate";
  if (parameter == "gamma") return "loss_rate";
  if (parameter == "topology") return "topology";
  throw ConfigError("sweep parameter must be chi, epsilon, gamma or topology (got '" + parameter + "')");
}

std::vector<SweepOutcome> run_sweep(const RunConfig& base, const std::string& parameter,
                                    const std::vector<std::string>& values, const std::filesystem::path& out_dir,
                                    const RunControl& control) {
  const std::string key = sweep_key(parameter);
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::filesystem::create_directories(out_dir);

  std::ostringstream summary;
  summary << "parameter,value,status,observable_id,wells,thetas,steady_value,stderr,drift,stationary\n";
  std::vector<SweepOutcome> outcomes;
  for (const auto& value : values) {
    SweepOutcome outcome{value, false, ""};
    try {
      RunConfig config = base;
      set_config_value(config, key, value);
      config.validate();
      const auto dir = out_dir / (parameter + "=" + value);
      note(control.log, "sweep: " + parameter + " = " + value);
      const EngineRun run = run_engine(config, dir, control);
      if (!run.completed) throw NumericalError("run stopped before completion");
      for (const auto& r : steady_rows(run.accumulator, config.observables))
        summary << parameter << ',' << value << ",ok," << r.id << ',' << r.wells << ',' << r.thetas << ','
                << format_double(r.value) << ',' << format_double(r.error) << ',' << format_double(r.drift) << ','
                << (r.stationary ? "true" : "false") << "\n";
      outcome.ok = true;
    } catch (const std::exception& e) {
      outcome.message = e.what();
      summary << parameter << ',' << value << ",failed: " << csv_safe(e.what()) << ",,,,,,,\n";
      note(control.log, "sweep: " + parameter + " = " + value + " failed: " + e.what());
    }
    outcomes.push_back(std::move(outcome));
  }
  write_text_file(out_dir / "summary.csv", summary.str());
  return outcomes;
}

}  // namespace wdimer
