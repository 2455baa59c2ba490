// Command-line front end: run, sweep, oracle, compare, angles.
//
// Exit codes: 0 ok, 2 configuration or input error, 3 numerical failure,
// 4 comparison outside tolerance, 1 anything else (I/O).

#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "wdimer/checkpoint.hpp"
#include "wdimer/config.hpp"
#include "wdimer/errors.hpp"
#include "wdimer/report.hpp"
#include "wdimer/runner.hpp"
#include "wdimer/statistics.hpp"

namespace {

using namespace wdimer;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitTolerance = 4;

struct CommonFlags {
  std::string config_path;
  std::string out;
  unsigned threads = 0;
  bool resume = false;
  std::optional<std::uint64_t> seed_override;
};

RunConfig load_with_overrides(const CommonFlags& flags) {
  RunConfig config = load_config(flags.config_path);
  if (flags.seed_override) config.master_seed = *flags.seed_override;
  if (!flags.out.empty()) config.output_dir = flags.out;
  config.validate();
  return config;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Run configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out, "Output directory (overrides output_dir)");
  cmd->add_option("--threads", flags.threads, "Worker threads, 0 = all cores");
  cmd->add_option("--seed-override", flags.seed_override, "Replace master_seed");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    const auto first = item.find_first_not_of(' ');
    const auto last = item.find_last_not_of(' ');
    if (first != std::string::npos) out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

int cmd_angles(const std::string& checkpoint_path, int well, std::optional<double> time, int grid,
               const std::string& out) {
  const Checkpoint cp = read_checkpoint(checkpoint_path);
  const MomentAccumulator& acc = cp.accumulator;
  if (acc.empty()) throw ConfigError("checkpoint holds no batches");
  if (well != 1 && well != 2) throw ConfigError("--well must be 1 or 2");
  if (grid < 4) throw ConfigError("--grid must be >= 4");

  std::vector<std::size_t> window;
  if (time) {
    window.push_back(acc.nearest_time_index(*time));
  } else {
    const RunConfig config = parse_config(cp.config_text, checkpoint_path);
    window = steady_window(acc, config.observables.steady_fraction);
  }
  std::vector<Eigen::Matrix4d> covs;
  for (auto t : window) covs.push_back(quadrature_covariance(acc.pooled(t)));

  std::ostringstream csv;
  csv << "# wdimer angle landscape\n# inferred_well = " << well << "\n# window = "
      << format_double(acc.save_times()[window.front()]) << ".." << format_double(acc.save_times()[window.back()])
      << "\ntheta_i,theta_j,epr_product\n";
  const double step = std::numbers::pi / grid;
  for (int a = 0; a < grid; ++a)
    for (int b = 0; b < grid; ++b) {
      double value = 0.0;
      for (const auto& cov : covs) value += epr_product(cov, well, a * step, b * step);
      value /= static_cast<double>(covs.size());
      csv << format_double(a * step) << ',' << format_double(b * step) << ',' << format_double(value) << "\n";
    }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    write_text_file(out, csv.str());
  }
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Truncated-Wigner simulator for the pumped and damped Bose-Hubbard dimer"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::uint32_t stop_after = 0;
  auto* run = app.add_subcommand("run", "Integrate an ensemble and write observables");
  add_common(run, run_flags);
  run->add_flag("--resume", run_flags.resume, "Continue from the checkpoint in the output directory");
  run->add_option("--stop-after-batches", stop_after, "Stop once this many batches are checkpointed");

  CommonFlags sweep_flags;
  std::string sweep_param, sweep_values;
  auto* sweep = app.add_subcommand("sweep", "Run one ensemble per parameter value");
  add_common(sweep, sweep_flags);
  sweep->add_option("--param", sweep_param, "chi, epsilon, gamma or topology")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();

  CommonFlags oracle_flags;
  auto* oracle = app.add_subcommand("oracle", "Solve the master equation in a truncated Fock space");
  add_common(oracle, oracle_flags);

  std::string candidate, reference, report_out;
  double tolerance = 0.05;
  double t_max = 1e300;
  std::vector<std::string> tolerance_for;
  auto* compare = app.add_subcommand("compare", "Relative deviations of an engine CSV from an oracle CSV");
  compare->add_option("engine_csv", candidate)->required()->check(CLI::ExistingFile);
  compare->add_option("oracle_csv", reference)->required()->check(CLI::ExistingFile);
  compare->add_option("--tolerance", tolerance, "Default tolerance on max |d|/max(|oracle|, 0.1)");
  compare->add_option("--tolerance-for", tolerance_for, "Per-observable tolerance, id=value");
  compare->add_option("--t-max", t_max, "Ignore rows after this time");
  compare->add_option("--out", report_out, "Write the report here as well");

  std::string angles_checkpoint, angles_out;
  int angles_well = 1, angles_grid = 180;
  std::optional<double> angles_time;
  auto* angles = app.add_subcommand("angles", "Dump the Reid product over the angle grid of a saved run");
  angles->add_option("--checkpoint", angles_checkpoint, "checkpoint.bin of a run")->required()->check(
      CLI::ExistingFile);
  angles->add_option("--well", angles_well, "Inferred well");
  angles->add_option("--time", angles_time, "Save time (default: steady-state window)");
  angles->add_option("--grid", angles_grid, "Grid points per angle over [0, pi)");
  angles->add_option("--out", angles_out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*run) {
    const RunConfig config = load_with_overrides(run_flags);
    RunControl control{run_flags.threads, run_flags.resume, stop_after, &std::cerr};
    const EngineRun result = run_engine(config, config.output_dir, control);
    std::cerr << (result.completed ? "completed " : "checkpointed ") << result.batches_done << " batches in "
              << config.output_dir << "\n";
    return 0;
  }
  if (*sweep) {
    const RunConfig config = load_with_overrides(sweep_flags);
    RunControl control{sweep_flags.threads, false, 0, &std::cerr};
    const auto outcomes = run_sweep(config, sweep_param, split_list(sweep_values), config.output_dir, control);
    const bool ok = std::all_of(outcomes.begin(), outcomes.end(), [](const SweepOutcome& o) { return o.ok; });
    return ok ? 0 : kExitNumerical;
  }
  if (*oracle) {
    const RunConfig config = load_with_overrides(oracle_flags);
    run_oracle(config, config.output_dir, &std::cerr);
    return 0;
  }
  if (*compare) {
    CompareOptions options;
    options.default_tolerance = tolerance;
    options.t_max = t_max;
    for (const auto& item : tolerance_for) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("--tolerance-for expects id=value, got '" + item + "'");
      options.tolerances[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
    const auto report =
        compare_tables(parse_csv(read_text_file(candidate)), parse_csv(read_text_file(reference)), options);
    const std::string text = format_report(report);
    std::cout << text;
    if (!report_out.empty()) write_text_file(report_out, text);
    return report.pass() ? 0 : kExitTolerance;
  }
  if (*angles) return cmd_angles(angles_checkpoint, angles_well, angles_time, angles_grid, angles_out);
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CheckpointMismatch& e) {
    std::cerr << "checkpoint mismatch: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SchemaMismatch& e) {
    std::cerr << "schema mismatch: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
