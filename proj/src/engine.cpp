#include "wdimer/engine.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <thread>

#include "wdimer/errors.hpp"
#include "wdimer/gaussian.hpp"
#include "wdimer/philox.hpp"

namespace wdimer {

namespace {

// Counter word 1 tags the purpose of a Philox block.
constexpr std::uint32_t kTagVacuum = 0u;
constexpr std::uint32_t kTagStep = 1u << 28;
constexpr std::uint32_t kTagBridge = 2u << 28;
constexpr std::uint32_t kTagRetry = 3u << 28;
constexpr int kMaxRefinement = 12;

// Trajectories integrated in lockstep; each lane only ever touches its own
// data, so a trajectory's result does not depend on its neighbours.
constexpr int kLanes = 16;

struct NoiseSource {
  Philox4x32::Key key;
  std::uint32_t traj_lo;
  std::uint32_t traj_hi;

  Philox4x32::Counter block(std::uint32_t word0, std::uint32_t word1) const {
    return Philox4x32::generate({word0, word1, traj_lo, traj_hi}, key);
  }
  std::pair<double, double> box_muller(std::uint32_t word0, std::uint32_t word1) const {
    return normal_pair_from_block(block(word0, word1));
  }

  // Ziggurat continuation for part m of the coarse-step-k normal after its
  // first word was rejected; further words come from a per-part retry stream.
  double step_normal_slow(std::uint32_t k, std::uint32_t m, std::uint64_t first_word) const {
    std::uint32_t retry = 0;
    Philox4x32::Counter extra{};
    int used = 2;
    return Ziggurat::tables().after_rejection(first_word, [&]() -> std::uint64_t {
      if (used == 2) {
        extra = block(k, kTagRetry | (m << 20) | retry++);
        used = 0;
      }
      const std::uint64_t w = (std::uint64_t{extra[2 * used]} << 32) | extra[2 * used + 1];
      ++used;
      return w;
    });
  }

  /// Complex standard normal (independent unit-variance parts) for coarse step k.
  std::complex<double> step_normal(std::uint32_t k) const {
    const auto primary = block(k, kTagStep);
    double parts[2];
    for (std::uint32_t m = 0; m < 2; ++m) {
      const std::uint64_t w = (std::uint64_t{primary[2 * m]} << 32) | primary[2 * m + 1];
      if (!Ziggurat::tables().try_rectangle(w, parts[m])) parts[m] = step_normal_slow(k, m, w);
    }
    return {parts[0], parts[1]};
  }
};

NoiseSource noise_source(const SimGrid& grid, std::uint64_t global_traj) {
  return {Philox4x32::key_from_seed(grid.master_seed), static_cast<std::uint32_t>(global_traj),
          static_cast<std::uint32_t>(global_traj >> 32)};
}

// Writes the 2^refinement complex Wiener increments of coarse step k to
// out[0..), each real component of the whole-step increment having
// variance dt/2.
void wiener_increments(const NoiseSource& src, std::uint32_t k, double dt, int refinement,
                       std::complex<double>* out) {
  double variance = 0.5 * dt;
  out[0] = std::sqrt(variance) * src.step_normal(k);
  std::size_t width = 1;
  for (int level = 1; level <= refinement; ++level) {
    // Brownian-bridge midpoint of an interval of variance v: mean half the
    // increment, conditional variance v/4.
    const double spread = 0.5 * std::sqrt(variance);
    for (std::size_t j = width; j-- > 0;) {
      const auto [z0, z1] =
          src.box_muller(k, kTagBridge | (static_cast<std::uint32_t>(level) << 20) | static_cast<std::uint32_t>(j));
      const std::complex<double> whole = out[j];
      const std::complex<double> left = 0.5 * whole + spread * std::complex<double>(z0, z1);
      out[2 * j] = left;
      out[2 * j + 1] = whole - left;
    }
    width *= 2;
    variance *= 0.5;
  }
}

struct Lanes {
  alignas(64) double x1[kLanes];
  alignas(64) double y1[kLanes];
  alignas(64) double x2[kLanes];
  alignas(64) double y2[kLanes];
};

struct DriftCoefficients {
  double pump, chi2, tunnel, loss1, loss2;

  explicit DriftCoefficients(const DimerParams& p)
      : pump(p.pump_rate),
        chi2(2.0 * p.chi),
        tunnel(p.tunneling),
        loss1(p.topology == Topology::LossAtWell1 ? p.loss_rate : 0.0),
        loss2(p.topology == Topology::LossAtWell2 ? p.loss_rate : 0.0) {}
};

// Real-component form of the drift in `drift()`.
inline void drift_lanes(const Lanes& s, const DriftCoefficients& c, Lanes& d) {
  for (int l = 0; l < kLanes; ++l) {
    const double n1 = s.x1[l] * s.x1[l] + s.y1[l] * s.y1[l];
    const double n2 = s.x2[l] * s.x2[l] + s.y2[l] * s.y2[l];
    d.x1[l] = c.pump + c.chi2 * n1 * s.y1[l] - c.tunnel * s.y2[l] - c.loss1 * s.x1[l];
    d.y1[l] = -c.chi2 * n1 * s.x1[l] + c.tunnel * s.x2[l] - c.loss1 * s.y1[l];
    d.x2[l] = c.chi2 * n2 * s.y2[l] - c.tunnel * s.y1[l] - c.loss2 * s.x2[l];
    d.y2[l] = -c.chi2 * n2 * s.x2[l] + c.tunnel * s.x1[l] - c.loss2 * s.y2[l];
  }
}

inline void axpy_lanes(const Lanes& s, double a, const Lanes& k, Lanes& out) {
  for (int l = 0; l < kLanes; ++l) {
    out.x1[l] = s.x1[l] + a * k.x1[l];
    out.y1[l] = s.y1[l] + a * k.y1[l];
    out.x2[l] = s.x2[l] + a * k.x2[l];
    out.y2[l] = s.y2[l] + a * k.y2[l];
  }
}

inline void rk4_lanes(Lanes& s, const DriftCoefficients& c, double h) {
  Lanes k1, k2, k3, k4, tmp;
  drift_lanes(s, c, k1);
  axpy_lanes(s, 0.5 * h, k1, tmp);
  drift_lanes(tmp, c, k2);
  axpy_lanes(s, 0.5 * h, k2, tmp);
  drift_lanes(tmp, c, k3);
  axpy_lanes(s, h, k3, tmp);
  drift_lanes(tmp, c, k4);
  const double w = h / 6.0;
  for (int l = 0; l < kLanes; ++l) {
    s.x1[l] += w * (k1.x1[l] + 2.0 * k2.x1[l] + 2.0 * k3.x1[l] + k4.x1[l]);
    s.y1[l] += w * (k1.y1[l] + 2.0 * k2.y1[l] + 2.0 * k3.y1[l] + k4.y1[l]);
    s.x2[l] += w * (k1.x2[l] + 2.0 * k2.x2[l] + 2.0 * k3.x2[l] + k4.x2[l]);
    s.y2[l] += w * (k1.y2[l] + 2.0 * k2.y2[l] + 2.0 * k3.y2[l] + k4.y2[l]);
  }
}

inline WignerStated lane_state(const Lanes& s, int l) {
  return WignerStated(std::complex<double>(s.x1[l], s.y1[l]), std::complex<double>(s.x2[l], s.y2[l]));
}

// Integrates up to kLanes trajectories (global ids first, first+1, ...,
// first+count-1) and calls visit(lane, save_index, state) at each save
// time. Sets diverged[lane] for trajectories that escaped the guard.
template <typename Visitor>
void integrate_lanes(const DimerParams& params, const SimGrid& grid, const EngineOptions& options,
                     const std::vector<std::uint64_t>& save_steps, std::uint64_t first, int count,
                     bool* diverged, Visitor&& visit) {
  std::array<NoiseSource, kLanes> sources;
  sources.fill(noise_source(grid, first));
  Lanes s{};
  for (int l = 0; l < count; ++l) {
    sources[static_cast<std::size_t>(l)] = noise_source(grid, first + static_cast<std::uint64_t>(l));
    WignerStated init = options.initial_displacement;
    if (options.vacuum_initial) {
      const auto& src = sources[static_cast<std::size_t>(l)];
      const auto [n0, n1] = src.box_muller(0u, kTagVacuum);
      const auto [n2, n3] = src.box_muller(1u, kTagVacuum);
      init += vacuum_from_normals<double>(Eigen::Vector4d(n0, n1, n2, n3));
    }
    s.x1[l] = init(0).real();
    s.y1[l] = init(0).imag();
    s.x2[l] = init(1).real();
    s.y2[l] = init(1).imag();
    diverged[l] = false;
  }

  const DriftCoefficients coeffs(params);
  const bool loss_at_1 = params.topology == Topology::LossAtWell1;
  const double amplitude = std::sqrt(params.loss_rate);
  const bool noisy = options.noise && amplitude > 0.0;
  const std::size_t substeps = std::size_t{1} << options.refinement;
  const double h = grid.dt / static_cast<double>(substeps);
  const double limit = options.divergence_guard * options.divergence_guard;
  std::vector<std::complex<double>> increments(static_cast<std::size_t>(kLanes) * substeps);

  auto emit = [&](std::size_t save_index) {
    for (int l = 0; l < count; ++l)
      if (!diverged[l]) visit(l, save_index, lane_state(s, l));
  };

  std::size_t next_save = 0;
  while (next_save < save_steps.size() && save_steps[next_save] == 0) emit(next_save++);

  const std::uint64_t n_steps = grid.n_steps();
  for (std::uint64_t k = 0; k < n_steps && next_save < save_steps.size(); ++k) {
    if (noisy && options.refinement == 0) {
      Philox4x32::Counter blocks[kLanes];
      for (int l = 0; l < kLanes; ++l)
        blocks[l] = sources[static_cast<std::size_t>(l)].block(static_cast<std::uint32_t>(k), kTagStep);
      const Ziggurat& zig = Ziggurat::tables();
      double parts[2][kLanes];
      bool accepted[2][kLanes];
      for (int m = 0; m < 2; ++m)
        for (int l = 0; l < kLanes; ++l)
          accepted[m][l] = zig.try_rectangle((std::uint64_t{blocks[l][2 * m]} << 32) | blocks[l][2 * m + 1],
                                             parts[m][l]);
      const double scale = std::sqrt(0.5 * grid.dt);
      for (int l = 0; l < count; ++l) {
        for (std::uint32_t m = 0; m < 2; ++m)
          if (!accepted[m][l])
            parts[m][l] = sources[static_cast<std::size_t>(l)].step_normal_slow(
                static_cast<std::uint32_t>(k), m, (std::uint64_t{blocks[l][2 * m]} << 32) | blocks[l][2 * m + 1]);
        increments[static_cast<std::size_t>(l)] = scale * std::complex<double>(parts[0][l], parts[1][l]);
      }
    } else if (noisy) {
      for (int l = 0; l < count; ++l)
        wiener_increments(sources[static_cast<std::size_t>(l)], static_cast<std::uint32_t>(k), grid.dt,
                          options.refinement, &increments[static_cast<std::size_t>(l) * substeps]);
    }
    for (std::size_t sub = 0; sub < substeps; ++sub) {
      rk4_lanes(s, coeffs, h);
      if (noisy) {
        double* nx = loss_at_1 ? s.x1 : s.x2;
        double* ny = loss_at_1 ? s.y1 : s.y2;
        for (int l = 0; l < count; ++l) {
          const auto& dw = increments[static_cast<std::size_t>(l) * substeps + sub];
          nx[l] += amplitude * dw.real();
          ny[l] += amplitude * dw.imag();
        }
      }
    }
    for (int l = 0; l < count; ++l) {
      const double n1 = s.x1[l] * s.x1[l] + s.y1[l] * s.y1[l];
      const double n2 = s.x2[l] * s.x2[l] + s.y2[l] * s.y2[l];
      // Negated comparison also catches NaN.
      if (!diverged[l] && !(n1 <= limit && n2 <= limit)) {
        diverged[l] = true;
        s.x1[l] = s.y1[l] = s.x2[l] = s.y2[l] = 0.0;
      }
    }
    while (next_save < save_steps.size() && save_steps[next_save] == k + 1) emit(next_save++);
  }
}

BatchMoments run_batch(const DimerParams& params, const SimGrid& grid, const EngineOptions& options,
                       const std::vector<std::uint64_t>& save_steps, std::uint32_t batch_id) {
  const auto [first, count] = grid.batch_range(batch_id);
  const auto n_save = static_cast<Eigen::Index>(save_steps.size());
  BatchMoments batch;
  batch.first_traj = grid.traj_offset + first;
  batch.n_traj = count;
  batch.sums = MomentSums::Zero(kNumMonomials, n_save);
  std::vector<MomentSums> scratch(kLanes, MomentSums(kNumMonomials, n_save));
  bool diverged[kLanes];
  for (std::uint64_t i = 0; i < count; i += kLanes) {
    const int width = static_cast<int>(std::min<std::uint64_t>(kLanes, count - i));
    for (int l = 0; l < width; ++l) scratch[static_cast<std::size_t>(l)].setZero();
    integrate_lanes(params, grid, options, save_steps, batch.first_traj + i, width, diverged,
                    [&](int lane, std::size_t t, const WignerStated& state) {
                      auto column = scratch[static_cast<std::size_t>(lane)].col(static_cast<Eigen::Index>(t));
                      add_monomials(state, column);
                    });
    for (int l = 0; l < width; ++l) {
      if (diverged[l]) {
        ++batch.n_diverged;
      } else {
        ++batch.n_used;
        batch.sums += scratch[static_cast<std::size_t>(l)];
      }
    }
  }
  return batch;
}

}  // namespace

void SimGrid::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (save_times.empty()) throw ConfigError("save_times must not be empty");
  for (std::size_t i = 1; i < save_times.size(); ++i)
    if (!(save_times[i] > save_times[i - 1])) throw ConfigError("save_times must be strictly increasing");
  if (save_times.front() < 0.0) throw ConfigError("save_times must be >= 0");
  if (t_final < save_times.back()) throw ConfigError("t_final must be >= the last save time");
  if (n_batches < 2) throw ConfigError("n_batches must be >= 2");
  if (n_traj < n_batches) throw ConfigError("n_traj must be >= n_batches");
  for (double t : save_times) {
    const double steps = t / dt;
    if (std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, steps))
      throw ConfigError("save time not on the dt grid");
  }
}

std::uint64_t SimGrid::n_steps() const { return static_cast<std::uint64_t>(std::llround(t_final / dt)); }

std::vector<std::uint64_t> SimGrid::save_steps() const {
  std::vector<std::uint64_t> steps;
  steps.reserve(save_times.size());
  for (double t : save_times) steps.push_back(static_cast<std::uint64_t>(std::llround(t / dt)));
  return steps;
}

std::pair<std::uint64_t, std::uint64_t> SimGrid::batch_range(std::uint32_t b) const {
  const auto lo = n_traj * b / n_batches;
  const auto hi = n_traj * (std::uint64_t{b} + 1) / n_batches;
  return {lo, hi - lo};
}

std::vector<double> uniform_save_times(double t_final, double interval) {
  if (!(interval > 0.0)) throw ConfigError("save interval must be > 0");
  std::vector<double> times;
  const auto n = static_cast<std::uint64_t>(std::floor(t_final / interval + 1e-9));
  for (std::uint64_t i = 0; i <= n; ++i) times.push_back(static_cast<double>(i) * interval);
  return times;
}

WignerStated rk4_step(const WignerStated& state, const DimerParams& params, double h) {
  const WignerStated k1 = drift(state, params);
  const WignerStated k2 = drift<double>(state + (0.5 * h) * k1, params);
  const WignerStated k3 = drift<double>(state + (0.5 * h) * k2, params);
  const WignerStated k4 = drift<double>(state + h * k3, params);
  return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

TrajectoryOutcome integrate_trajectory(const DimerParams& params, const SimGrid& grid, std::uint64_t traj_index,
                                       const EngineOptions& options) {
  if (traj_index >= grid.n_traj) throw std::out_of_range("trajectory index outside the ensemble");
  TrajectoryOutcome outcome;
  const auto steps = grid.save_steps();
  outcome.samples.reserve(steps.size());
  bool diverged[kLanes];
  integrate_lanes(params, grid, options, steps, grid.traj_offset + traj_index, 1, diverged,
                  [&](int, std::size_t, const WignerStated& s) { outcome.samples.push_back(s); });
  outcome.diverged = diverged[0];
  return outcome;
}

MomentAccumulator run_batches(const DimerParams& params, const SimGrid& grid, const EngineOptions& options,
                              std::span<const std::uint32_t> batch_ids) {
  params.validate();
  grid.validate();
  if (options.refinement < 0 || options.refinement > kMaxRefinement)
    throw ConfigError("refinement must be in [0, 12]");
  for (auto b : batch_ids)
    if (b >= grid.n_batches) throw std::out_of_range("batch id outside [0, n_batches)");

  const auto save_steps = grid.save_steps();
  std::vector<BatchMoments> results(batch_ids.size());
  unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, batch_ids.size())));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < batch_ids.size(); i = next++)
      results[i] = run_batch(params, grid, options, save_steps, batch_ids[i]);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  MomentAccumulator acc(grid.save_times);
  for (auto& batch : results) acc.add_batch(std::move(batch));
  return acc;
}

void check_divergences(const MomentAccumulator& acc, const EngineOptions& options) {
  const auto total = acc.n_traj();
  if (total == 0) return;
  const double fraction = static_cast<double>(acc.n_diverged()) / static_cast<double>(total);
  if (fraction > options.max_divergence_fraction)
    throw TooManyDivergences(std::to_string(acc.n_diverged()) + " of " + std::to_string(total) +
                             " trajectories diverged; reduce dt or chi");
}

MomentAccumulator run_ensemble(const DimerParams& params, const SimGrid& grid, const EngineOptions& options) {
  std::vector<std::uint32_t> ids(grid.n_batches);
  for (std::uint32_t b = 0; b < grid.n_batches; ++b) ids[b] = b;
  auto acc = run_batches(params, grid, options, ids);
  check_divergences(acc, options);
  return acc;
}

}  // namespace wdimer
