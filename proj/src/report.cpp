#include "wdimer/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "wdimer/errors.hpp"
#include "wdimer/statistics.hpp"

namespace wdimer {

namespace {

constexpr const char* kColumns = "time,observable_id,wells,thetas,value,stderr,n_traj_used";

std::string well_text(int well) { return std::to_string(well); }
std::string pair_text(const std::string& a, const std::string& b) { return a + "|" + b; }

bool angle_optimized(const std::string& id) { return id == "epr_product_opt" || id == "duan_simon_opt"; }

std::string kappa4_id(Kappa4Convention c) { return c == Kappa4Convention::MeanWeighted ? "kappa4" : "kappa4_standard"; }

// One observable evaluated on moments, with the CSV descriptor it reports.
struct FixedObservable {
  std::string id;
  std::string wells;
  std::string thetas;
  MomentObservable f;
};

std::vector<FixedObservable> fixed_observables(const ObservableRequests& req) {
  std::vector<FixedObservable> out;
  if (req.populations)
    for (int w = 1; w <= 2; ++w)
      out.push_back({"population", well_text(w), "", [w](const MixedMoments& m) { return population(m, w); }});
  for (const auto& q : req.quadratures) {
    const std::string wells = well_text(q.well), thetas = format_double(q.theta);
    out.push_back({"quad_mean", wells, thetas, [q](const MixedMoments& m) { return quadrature_moment(m, q, 1); }});
    out.push_back({"quad_variance", wells, thetas, [q](const MixedMoments& m) { return quad_variance(m, q); }});
  }
  for (const auto& q : req.cumulants) {
    const std::string wells = well_text(q.well), thetas = format_double(q.theta);
    const auto conv = req.kappa4_convention;
    out.push_back({"kappa3", wells, thetas, [q](const MixedMoments& m) { return kappa3(quadrature_moments(m, q)); }});
    out.push_back({kappa4_id(conv), wells, thetas,
                   [q, conv](const MixedMoments& m) { return kappa4(quadrature_moments(m, q), conv); }});
  }
  for (const auto& c : req.covariances) {
    out.push_back({"quad_covariance", pair_text(well_text(c.first.well), well_text(c.second.well)),
                   pair_text(format_double(c.first.theta), format_double(c.second.theta)),
                   [c](const MixedMoments& m) { return quad_covariance(m, c.first, c.second); }});
  }
  return out;
}

std::string epr_wells(int inferred) { return pair_text(well_text(inferred), well_text(3 - inferred)); }

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    fields.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

double field_double(const std::string& text, int line_no) {
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size())
    throw SchemaMismatch("line " + std::to_string(line_no) + ": bad number '" + text + "'");
  return value;
}

}  // namespace

std::vector<ObservableRow> observable_rows(const MomentAccumulator& acc, const ObservableRequests& req) {
  const auto fixed = fixed_observables(req);
  const std::uint64_t n_used = acc.n_used();
  std::vector<ObservableRow> rows;
  for (std::size_t t = 0; t < acc.num_times(); ++t) {
    const double time = acc.save_times()[t];
    for (const auto& obs : fixed) {
      const Estimate e = estimate(acc, t, obs.f);
      rows.push_back({time, obs.id, obs.wells, obs.thetas, e.value, e.error, n_used});
    }
    for (int inferred : req.epr_inferred) {
      const EprEstimate e = optimize_epr(acc, t, inferred, req.angle_grid);
      rows.push_back({time, "epr_product_opt", epr_wells(inferred),
                      pair_text(format_double(e.optimum.theta_i), format_double(e.optimum.theta_j)), e.estimate.value,
                      e.estimate.error, n_used});
    }
    if (req.duan_simon) {
      const DuanSimonOptimum opt = optimize_duan_simon(acc.pooled(t), req.angle_grid);
      const Estimate e = duan_simon(acc, t, opt.theta1, opt.theta2);
      rows.push_back({time, "duan_simon_opt", "1|2", pair_text(format_double(opt.theta1), format_double(opt.theta2)),
                      e.value, e.error, n_used});
    }
  }
  return rows;
}

MomentAccumulator exact_accumulator(const std::vector<double>& times, const std::vector<MixedMoments>& moments) {
  if (times.size() != moments.size()) throw ShapeMismatch("one moment set per time required");
  MomentAccumulator acc(times);
  BatchMoments batch;
  batch.first_traj = 0;
  batch.n_traj = 1;
  batch.n_used = 1;
  batch.sums = MomentSums(kNumMonomials, static_cast<Eigen::Index>(times.size()));
  for (std::size_t t = 0; t < times.size(); ++t) batch.sums.col(static_cast<Eigen::Index>(t)) = moments[t].values();
  acc.add_batch(std::move(batch));
  return acc;
}

std::vector<SteadyRow> steady_rows(const MomentAccumulator& acc, const ObservableRequests& req) {
  const auto window = steady_window(acc, req.steady_fraction);
  const double start = acc.save_times()[window.front()];
  const double end = acc.save_times()[window.back()];
  std::vector<SteadyRow> rows;
  const auto push = [&](const std::string& id, const std::string& wells, const std::string& thetas,
                        const SteadyEstimate& s) {
    rows.push_back({id, wells, thetas, s.estimate.value, s.estimate.error, s.drift, s.stationary, start, end});
  };
  for (const auto& obs : fixed_observables(req)) push(obs.id, obs.wells, obs.thetas, steady_state(acc, window, obs.f));
  for (int inferred : req.epr_inferred) {
    const SteadyEpr e = optimize_epr_steady(acc, window, inferred, req.angle_grid);
    push("epr_product_opt", epr_wells(inferred),
         pair_text(format_double(e.optimum.theta_i), format_double(e.optimum.theta_j)), e.steady);
  }
  if (req.duan_simon) {
    const SteadyDuanSimon d = optimize_duan_simon_steady(acc, window, req.angle_grid);
    push("duan_simon_opt", "1|2", pair_text(format_double(d.optimum.theta1), format_double(d.optimum.theta2)),
         d.steady);
  }
  return rows;
}

ObservableTable make_table(const RunConfig& config, const std::string& source, std::vector<ObservableRow> rows) {
  ObservableTable table;
  table.metadata["format"] = "1";
  table.metadata["code_version"] = kCodeVersion;
  table.metadata["source"] = source;
  table.metadata["master_seed"] = std::to_string(config.master_seed);
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(physics_hash(config)));
  table.metadata["physics_hash"] = hash;
  table.config_text = serialize(config);
  table.rows = std::move(rows);
  return table;
}

std::string format_csv(const ObservableTable& table) {
  std::ostringstream out;
  out << "# wdimer observables\n";
  for (const auto& [key, value] : table.metadata) out << "# " << key << " = " << value << "\n";
  std::istringstream config(table.config_text);
  for (std::string line; std::getline(config, line);) out << "#> " << line << "\n";
  out << kColumns << "\n";
  for (const auto& r : table.rows)
    out << format_double(r.time) << ',' << r.id << ',' << r.wells << ',' << r.thetas << ','
        << format_double(r.value) << ',' << format_double(r.error) << ',' << r.n_used << "\n";
  return out.str();
}

ObservableTable parse_csv(const std::string& text) {
  ObservableTable table;
  std::istringstream in(text);
  bool columns_seen = false;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#> ", 0) == 0) {
      table.config_text += line.substr(3) + "\n";
      continue;
    }
    if (line[0] == '#') {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos && line.size() > 2) table.metadata[line.substr(2, eq - 2)] = line.substr(eq + 3);
      continue;
    }
    if (!columns_seen) {
      if (line != kColumns) throw SchemaMismatch("unexpected CSV columns '" + line + "'");
      columns_seen = true;
      continue;
    }
    const auto f = split_fields(line);
    if (f.size() != 7) throw SchemaMismatch("line " + std::to_string(line_no) + ": expected 7 fields");
    ObservableRow row;
    row.time = field_double(f[0], line_no);
    row.id = f[1];
    row.wells = f[2];
    row.thetas = f[3];
    row.value = field_double(f[4], line_no);
    row.error = field_double(f[5], line_no);
    row.n_used = static_cast<std::uint64_t>(field_double(f[6], line_no));
    table.rows.push_back(std::move(row));
  }
  if (!columns_seen) throw SchemaMismatch("CSV has no column header");
  return table;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string format_steady_csv(const std::vector<SteadyRow>& rows) {
  std::ostringstream out;
  out << "observable_id,wells,thetas,value,stderr,drift,stationary,window_start,window_end\n";
  for (const auto& r : rows)
    out << r.id << ',' << r.wells << ',' << r.thetas << ',' << format_double(r.value) << ','
        << format_double(r.error) << ',' << format_double(r.drift) << ',' << (r.stationary ? "true" : "false")
        << ',' << format_double(r.window_start) << ',' << format_double(r.window_end) << "\n";
  return out.str();
}

bool CompareReport::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const CompareEntry& e) { return e.pass; });
}

CompareReport compare_tables(const ObservableTable& candidate, const ObservableTable& reference,
                             const CompareOptions& options) {
  using Key = std::tuple<long long, std::string, std::string, std::string>;
  const auto key_of = [](const ObservableRow& r) {
    // Times are matched on a 1e-9 lattice.
    return Key{std::llround(r.time * 1e9), r.id, r.wells, angle_optimized(r.id) ? std::string() : r.thetas};
  };
  std::map<Key, const ObservableRow*> ref;
  for (const auto& r : reference.rows) ref[key_of(r)] = &r;

  std::map<std::pair<std::string, std::string>, CompareEntry> entries;
  for (const auto& r : candidate.rows) {
    if (r.time > options.t_max + 1e-12) continue;
    const auto it = ref.find(key_of(r));
    if (it == ref.end()) continue;
    const ObservableRow& o = *it->second;
    auto& e = entries[{r.id, r.wells}];
    if (e.matched == 0) {
      e.id = r.id;
      e.wells = r.wells;
      const auto tol = options.tolerances.find(r.id);
      e.tolerance = tol == options.tolerances.end() ? options.default_tolerance : tol->second;
    }
    ++e.matched;
    const double deviation = std::abs(r.value - o.value) / std::max(std::abs(o.value), 0.1);
    if (deviation > e.max_deviation || e.matched == 1) {
      e.max_deviation = deviation;
      e.time_of_max = r.time;
    }
  }
  if (entries.empty()) throw SchemaMismatch("no matching rows between the two tables");
  CompareReport report;
  for (auto& [key, e] : entries) {
    e.pass = e.max_deviation <= e.tolerance;
    report.entries.push_back(e);
  }
  return report;
}

std::string format_report(const CompareReport& report) {
  std::ostringstream out;
  out << "observable_id,wells,rows,max_rel_deviation,time_of_max,tolerance,result\n";
  for (const auto& e : report.entries)
    out << e.id << ',' << e.wells << ',' << e.matched << ',' << format_double(e.max_deviation) << ','
        << format_double(e.time_of_max) << ',' << format_double(e.tolerance) << ',' << (e.pass ? "pass" : "fail")
        << "\n";
  return out.str();
}

}  // namespace wdimer
