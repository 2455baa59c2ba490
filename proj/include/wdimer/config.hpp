// Plain-text run configuration: one `key = value` per line, `#` starts a
// comment. Serialization is canonical (fixed key order, shortest
// round-trip numbers), so parse(serialize(c)) == c.

#ifndef WDIMER_CONFIG_HPP
#define WDIMER_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wdimer/engine.hpp"
#include "wdimer/model.hpp"
#include "wdimer/oracle.hpp"
#include "wdimer/statistics.hpp"

namespace wdimer {

struct CovarianceRequest {
  QuadratureSpec first;
  QuadratureSpec second;
  bool operator==(const CovarianceRequest&) const = default;
};

struct ObservableRequests {
  bool populations = true;
  /// Mean and variance rows for each listed quadrature.
  std::vector<QuadratureSpec> quadratures;
  /// kappa3 and kappa4 rows for each listed quadrature.
  std::vector<QuadratureSpec> cumulants;
  Kappa4Convention kappa4_convention = Kappa4Convention::MeanWeighted;
  std::vector<CovarianceRequest> covariances;
  /// Inferred wells for angle-optimized Reid products.
  std::vector<int> epr_inferred;
  int angle_grid = 180;
  bool duan_simon = false;
  /// Trailing fraction of the save times used for steady-state averages.
  double steady_fraction = 0.25;
};

struct OracleConfig {
  int cutoff1 = 14;
  int cutoff2 = 14;
  double dt = 5e-3;
  OracleHamiltonian hamiltonian = OracleHamiltonian::WignerMatched;
  double loss_scale = 1.0;
};

struct RunConfig {
  DimerParams params{0.0, 1.0, 10.0, 1.0, Topology::LossAtWell2};
  double dt = 1e-3;
  double t_final = 20.0;
  double save_interval = 0.5;
  std::uint64_t n_traj = 1000;
  std::uint32_t n_batches = 100;
  std::uint64_t master_seed = 1;
  std::uint64_t traj_offset = 0;
  int refinement = 0;
  double divergence_guard = 1e6;
  double max_divergence_fraction = 1e-3;
  ObservableRequests observables;
  OracleConfig oracle;
  std::string output_dir = "results";
  /// Batches completed between checkpoint writes.
  std::uint32_t checkpoint_interval = 10;

  SimGrid grid() const;
  EngineOptions engine_options(unsigned threads) const;
  /// Throws ConfigError on any invalid field.
  void validate() const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Throws ConfigError with "origin:line: message" diagnostics.
RunConfig parse_config(std::string_view text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text form.
std::string serialize(const RunConfig& config);
/// Canonical text of the fields that determine the simulated numbers
/// (output location and checkpoint cadence excluded).
std::string physics_text(const RunConfig& config);
std::uint64_t physics_hash(const RunConfig& config);

/// Applies one `key = value` assignment (used by sweeps).
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// FNV-1a, used for config fingerprints and checkpoint checksums.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace wdimer

#endif  // WDIMER_CONFIG_HPP
