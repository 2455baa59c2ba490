#include "wdimer/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "wdimer/errors.hpp"

namespace wdimer {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  if (trim(s).empty()) return parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value))
    throw ConfigError("expected a finite number, got '" + std::string(text) + "'");
  return value;
}

template <typename Int>
Int parse_integer(std::string_view text) {
  Int value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size())
    throw ConfigError("expected an integer, got '" + std::string(text) + "'");
  return value;
}

bool parse_bool(std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("expected true or false, got '" + std::string(text) + "'");
}

int parse_well(std::string_view text) {
  const int well = parse_integer<int>(text);
  if (well != 1 && well != 2) throw ConfigError("well must be 1 or 2, got '" + std::string(text) + "'");
  return well;
}

// "well:theta"
QuadratureSpec parse_quadrature(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw ConfigError("expected well:theta, got '" + std::string(text) + "'");
  return QuadratureSpec::make(parse_well(parts[0]), parse_double(parts[1]));
}

std::string format_quadrature(const QuadratureSpec& q) {
  return std::to_string(q.well) + ":" + format_double(q.theta);
}

template <typename T, typename Format>
std::string join(const std::vector<T>& items, Format format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += format(items[i]);
  }
  return out;
}

std::string to_string(OracleHamiltonian h) {
  return h == OracleHamiltonian::Collisional ? "collisional" : "wigner_matched";
}

OracleHamiltonian oracle_hamiltonian_from_string(std::string_view text) {
  if (text == "collisional") return OracleHamiltonian::Collisional;
  if (text == "wigner_matched") return OracleHamiltonian::WignerMatched;
  throw ConfigError("unknown oracle_hamiltonian '" + std::string(text) + "' (expected collisional or wigner_matched)");
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

// Keys written by physics_text(); the remaining keys only affect where and
// how often results are written.
const std::set<std::string>& output_keys() {
  static const std::set<std::string> keys{"output_dir", "checkpoint_interval"};
  return keys;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

SimGrid RunConfig::grid() const {
  SimGrid g;
  g.dt = dt;
  g.t_final = t_final;
  g.save_times = uniform_save_times(t_final, save_interval);
  g.n_traj = n_traj;
  g.n_batches = n_batches;
  g.master_seed = master_seed;
  g.traj_offset = traj_offset;
  return g;
}

EngineOptions RunConfig::engine_options(unsigned threads) const {
  EngineOptions o;
  o.threads = threads;
  o.refinement = refinement;
  o.divergence_guard = divergence_guard;
  o.max_divergence_fraction = max_divergence_fraction;
  return o;
}

void RunConfig::validate() const {
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(t_final > 0.0)) throw ConfigError("t_final must be > 0");
  const double per_save = save_interval / dt;
  if (!(save_interval > 0.0) || std::abs(per_save - std::round(per_save)) > 1e-9 * per_save)
    throw ConfigError("save_interval must be a positive multiple of dt");
  grid().validate();
  if (refinement < 0 || refinement > 8) throw ConfigError("refinement must be in 0..8");
  if (!(divergence_guard > 0.0)) throw ConfigError("divergence_guard must be > 0");
  if (!(max_divergence_fraction >= 0.0 && max_divergence_fraction <= 1.0))
    throw ConfigError("max_divergence_fraction must be in [0, 1]");
  if (observables.angle_grid < 4) throw ConfigError("angle_grid must be >= 4");
  if (!(observables.steady_fraction > 0.0 && observables.steady_fraction <= 1.0))
    throw ConfigError("steady_fraction must be in (0, 1]");
  for (const auto& c : observables.covariances)
    if (c.first.well == c.second.well) throw ConfigError("covariances must pair quadratures of different wells");
  FockSpace{oracle.cutoff1, oracle.cutoff2}.validate();
  if (!(oracle.dt > 0.0)) throw ConfigError("oracle_dt must be > 0");
  if (!(oracle.loss_scale >= 0.0)) throw ConfigError("oracle_loss_scale must be >= 0");
  if (checkpoint_interval < 1) throw ConfigError("checkpoint_interval must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

void set_config_value(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string_view v = trim(raw);
  auto& obs = c.observables;
  if (key == "chi") c.params.chi = parse_double(v);
  else if (key == "tunneling") c.params.tunneling = parse_double(v);
  else if (key == "pump_rate") c.params.pump_rate = parse_double(v);
  else if (key == "loss_rate") c.params.loss_rate = parse_double(v);
  else if (key == "topology") c.params.topology = topology_from_string(v);
  else if (key == "dt") c.dt = parse_double(v);
  else if (key == "t_final") c.t_final = parse_double(v);
  else if (key == "save_interval") c.save_interval = parse_double(v);
  else if (key == "n_traj") c.n_traj = parse_integer<std::uint64_t>(v);
  else if (key == "n_batches") c.n_batches = parse_integer<std::uint32_t>(v);
  else if (key == "master_seed") c.master_seed = parse_integer<std::uint64_t>(v);
  else if (key == "traj_offset") c.traj_offset = parse_integer<std::uint64_t>(v);
  else if (key == "refinement") c.refinement = parse_integer<int>(v);
  else if (key == "divergence_guard") c.divergence_guard = parse_double(v);
  else if (key == "max_divergence_fraction") c.max_divergence_fraction = parse_double(v);
  else if (key == "populations") obs.populations = parse_bool(v);
  else if (key == "quadratures") {
    obs.quadratures.clear();
    for (auto part : split(v, ',')) obs.quadratures.push_back(parse_quadrature(part));
  } else if (key == "cumulants") {
    obs.cumulants.clear();
    for (auto part : split(v, ',')) obs.cumulants.push_back(parse_quadrature(part));
  } else if (key == "kappa4_convention") obs.kappa4_convention = kappa4_convention_from_string(std::string(v));
  else if (key == "covariances") {
    obs.covariances.clear();
    for (auto part : split(v, ',')) {
      const auto pair = split(part, '|');
      if (pair.size() != 2) throw ConfigError("expected well:theta|well:theta, got '" + std::string(part) + "'");
      obs.covariances.push_back({parse_quadrature(pair[0]), parse_quadrature(pair[1])});
    }
  } else if (key == "epr") {
    obs.epr_inferred.clear();
    for (auto part : split(v, ',')) obs.epr_inferred.push_back(parse_well(part));
  } else if (key == "angle_grid") obs.angle_grid = parse_integer<int>(v);
  else if (key == "duan_simon") obs.duan_simon = parse_bool(v);
  else if (key == "steady_fraction") obs.steady_fraction = parse_double(v);
  else if (key == "cutoff1") c.oracle.cutoff1 = parse_integer<int>(v);
  else if (key == "cutoff2") c.oracle.cutoff2 = parse_integer<int>(v);
  else if (key == "oracle_dt") c.oracle.dt = parse_double(v);
  else if (key == "oracle_hamiltonian") c.oracle.hamiltonian = oracle_hamiltonian_from_string(v);
  else if (key == "oracle_loss_scale") c.oracle.loss_scale = parse_double(v);
  else if (key == "output_dir") c.output_dir = std::string(v);
  else if (key == "checkpoint_interval") c.checkpoint_interval = parse_integer<std::uint32_t>(v);
  else throw ConfigError("unknown key '" + key + "'");
}

RunConfig parse_config(std::string_view text, const std::string& origin) {
  RunConfig config;
  std::map<std::string, int> seen;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (const auto it = seen.find(key); it != seen.end())
      throw ConfigError(where + "duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")");
    seen[key] = line_no;
    try {
      set_config_value(config, key, std::string(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

std::string serialize(const RunConfig& c) {
  const auto& o = c.observables;
  std::ostringstream out;
  out << "# physical parameters, rates in units of the tunneling J\n"
      << "chi = " << format_double(c.params.chi) << "\n"
      << "tunneling = " << format_double(c.params.tunneling) << "\n"
      << "pump_rate = " << format_double(c.params.pump_rate) << "\n"
      << "loss_rate = " << format_double(c.params.loss_rate) << "\n"
      << "topology = " << to_string(c.params.topology) << "\n"
      << "# integration grid, times in units of 1/J\n"
      << "dt = " << format_double(c.dt) << "\n"
      << "t_final = " << format_double(c.t_final) << "\n"
      << "save_interval = " << format_double(c.save_interval) << "\n"
      << "n_traj = " << c.n_traj << "\n"
      << "n_batches = " << c.n_batches << "\n"
      << "master_seed = " << c.master_seed << "\n"
      << "traj_offset = " << c.traj_offset << "\n"
      << "refinement = " << c.refinement << "\n"
      << "divergence_guard = " << format_double(c.divergence_guard) << "\n"
      << "max_divergence_fraction = " << format_double(c.max_divergence_fraction) << "\n"
      << "# observables, angles in radians\n"
      << "populations = " << bool_text(o.populations) << "\n"
      << "quadratures = " << join(o.quadratures, format_quadrature) << "\n"
      << "cumulants = " << join(o.cumulants, format_quadrature) << "\n"
      << "kappa4_convention = " << to_string(o.kappa4_convention) << "\n"
      << "covariances = "
      << join(o.covariances,
              [](const CovarianceRequest& r) { return format_quadrature(r.first) + "|" + format_quadrature(r.second); })
      << "\n"
      << "epr = " << join(o.epr_inferred, [](int w) { return std::to_string(w); }) << "\n"
      << "angle_grid = " << o.angle_grid << "\n"
      << "duan_simon = " << bool_text(o.duan_simon) << "\n"
      << "steady_fraction = " << format_double(o.steady_fraction) << "\n"
      << "# master-equation oracle\n"
      << "cutoff1 = " << c.oracle.cutoff1 << "\n"
      << "cutoff2 = " << c.oracle.cutoff2 << "\n"
      << "oracle_dt = " << format_double(c.oracle.dt) << "\n"
      << "oracle_hamiltonian = " << to_string(c.oracle.hamiltonian) << "\n"
      << "oracle_loss_scale = " << format_double(c.oracle.loss_scale) << "\n"
      << "# output\n"
      << "output_dir = " << c.output_dir << "\n"
      << "checkpoint_interval = " << c.checkpoint_interval << "\n";
  return out.str();
}

std::string physics_text(const RunConfig& config) {
  std::istringstream in(serialize(config));
  std::string out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    const std::string key(trim(std::string_view(line).substr(0, line.find('='))));
    if (output_keys().count(key) == 0) out += line + "\n";
  }
  return out;
}

std::uint64_t physics_hash(const RunConfig& config) { return fnv1a(physics_text(config)); }

bool operator==(const RunConfig& a, const RunConfig& b) { return serialize(a) == serialize(b); }

}  // namespace wdimer
