// Observable tables shared by the engine and the oracle: CSV rows, the
// steady-state summary and engine-versus-oracle comparison.
//
// CSV columns: time, observable_id, wells, thetas, value, stderr, n_traj_used.
// Multi-well and multi-angle fields are joined with '|'. Header lines start
// with '#'; lines starting with "#> " carry the full configuration text.

#ifndef WDIMER_REPORT_HPP
#define WDIMER_REPORT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wdimer/accumulator.hpp"
#include "wdimer/config.hpp"

namespace wdimer {

inline constexpr const char* kCodeVersion = "1.0.0";

struct ObservableRow {
  double time = 0.0;
  std::string id;
  std::string wells;
  std::string thetas;
  double value = 0.0;
  double error = 0.0;
  std::uint64_t n_used = 0;
};

struct ObservableTable {
  std::map<std::string, std::string> metadata;  // source, code_version, master_seed, ...
  std::string config_text;
  std::vector<ObservableRow> rows;
};

/// Per-save-time rows for every requested observable.
std::vector<ObservableRow> observable_rows(const MomentAccumulator& acc, const ObservableRequests& requests);

/// Wraps exact moments (one set per time) as a single-batch accumulator so
/// that oracle states go through the same observable code; errors are zero.
MomentAccumulator exact_accumulator(const std::vector<double>& times, const std::vector<MixedMoments>& moments);

struct SteadyRow {
  std::string id;
  std::string wells;
  std::string thetas;
  double value = 0.0;
  double error = 0.0;
  double drift = 0.0;
  bool stationary = true;
  double window_start = 0.0;
  double window_end = 0.0;
};

/// Window averages over the trailing steady_fraction of the save times;
/// angle-optimized quantities use one angle set for the whole window.
std::vector<SteadyRow> steady_rows(const MomentAccumulator& acc, const ObservableRequests& requests);

ObservableTable make_table(const RunConfig& config, const std::string& source, std::vector<ObservableRow> rows);

std::string format_csv(const ObservableTable& table);
/// Throws SchemaMismatch when the column header or a row is malformed.
ObservableTable parse_csv(const std::string& text);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

std::string format_steady_csv(const std::vector<SteadyRow>& rows);

struct CompareOptions {
  double default_tolerance = 0.05;
  std::map<std::string, double> tolerances;  // per observable_id
  double t_max = 1e300;                      // ignore later times
};

struct CompareEntry {
  std::string id;
  std::string wells;
  std::size_t matched = 0;
  double max_deviation = 0.0;  // max |a - b| / max(|b|, 0.1)
  double time_of_max = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

struct CompareReport {
  std::vector<CompareEntry> entries;
  bool pass() const;
};

/// `reference` plays the oracle role in the relative deviation. Rows are
/// matched on time, id, wells and, for fixed-angle observables, thetas.
/// Throws SchemaMismatch when nothing matches.
CompareReport compare_tables(const ObservableTable& candidate, const ObservableTable& reference,
                             const CompareOptions& options = {});

std::string format_report(const CompareReport& report);

}  // namespace wdimer

#endif  // WDIMER_REPORT_HPP
