#include "wdimer/oracle.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <string>

#include "wdimer/errors.hpp"

namespace wdimer {

namespace {

using Complex = std::complex<double>;
using Sparse = Eigen::SparseMatrix<Complex>;
using Dense = DenseOperator<double>;

// Single-mode annihilator on occupations 0..cutoff.
Eigen::MatrixXcd single_mode_annihilator(int cutoff) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
  for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

// Weyl-symmetrized a^p a^dag^q: the mean over all distinct orderings.
// Built with headroom above the cutoff so that the projected matrix
// elements are exact.
Eigen::MatrixXcd symmetrized_monomial(int p, int q, int cutoff) {
  const int extended = cutoff + p + q;
  const Eigen::MatrixXcd a = single_mode_annihilator(extended);
  const Eigen::MatrixXcd ad = a.adjoint();
  const int n = p + q;
  Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(extended + 1, extended + 1);
  int count = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != p) continue;
    Eigen::MatrixXcd product = Eigen::MatrixXcd::Identity(extended + 1, extended + 1);
    for (int k = 0; k < n; ++k) product = product * ((mask >> k) & 1u ? a : ad);
    total += product;
    ++count;
  }
  total /= double(count);
  return total.topLeftCorner(cutoff + 1, cutoff + 1);
}

// sum_{n2, m2} rho((n1, n2), (m1, m2)) op2(m2, n2) for all n1, m1.
Eigen::MatrixXcd trace_out_well2(const FockDensityMatrixd& state, const Eigen::MatrixXcd& op2) {
  const FockSpace& s = state.space;
  const int d2 = s.cutoff2 + 1;
  Eigen::MatrixXcd reduced(s.cutoff1 + 1, s.cutoff1 + 1);
  for (int n1 = 0; n1 <= s.cutoff1; ++n1)
    for (int m1 = 0; m1 <= s.cutoff1; ++m1)
      reduced(n1, m1) = (state.rho.block(s.index(n1, 0), s.index(m1, 0), d2, d2) * op2).trace();
  return reduced;
}

Sparse sparse_identity(Eigen::Index n) {
  Sparse id(n, n);
  id.setIdentity();
  return id;
}

}  // namespace

void FockSpace::validate() const {
  if (cutoff1 < 1 || cutoff2 < 1) throw ConfigError("Fock cutoffs must be >= 1");
  if (dimension() > kMaxDimension)
    throw ConfigError("Fock space dimension " + std::to_string(dimension()) + " exceeds " +
                      std::to_string(kMaxDimension));
}

Sparse annihilator(const FockSpace& space, int well) {
  if (well != 1 && well != 2) throw std::invalid_argument("well must be 1 or 2");
  Sparse a(space.dimension(), space.dimension());
  std::vector<Eigen::Triplet<Complex>> entries;
  for (int n1 = 0; n1 <= space.cutoff1; ++n1)
    for (int n2 = 0; n2 <= space.cutoff2; ++n2) {
      const int n = well == 1 ? n1 : n2;
      if (n == 0) continue;
      const Eigen::Index to = well == 1 ? space.index(n1 - 1, n2) : space.index(n1, n2 - 1);
      entries.emplace_back(to, space.index(n1, n2), std::sqrt(double(n)));
    }
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

Liouvillian::Liouvillian(const FockSpace& space, const DimerParams& params, const OracleOptions& options)
    : space_(space), params_(params), rate_(params.loss_rate * options.loss_scale) {
  space.validate();
  params.validate();
  const Sparse a1 = annihilator(space, 1);
  const Sparse a2 = annihilator(space, 2);
  const Sparse a1d = a1.adjoint();
  const Sparse a2d = a2.adjoint();
  const Sparse n1 = a1d * a1;
  const Sparse n2 = a2d * a2;
  const Sparse id = sparse_identity(space.dimension());

  // a^dag2 a^2 = n (n - 1)
  Sparse collisional = Sparse(n1 * (n1 - id)) + Sparse(n2 * (n2 - id));
  if (options.hamiltonian == OracleHamiltonian::WignerMatched) collisional += 2.0 * Sparse(n1 + n2);
  hamiltonian_ = params.chi * collisional - params.tunneling * Sparse(a1d * a2 + a2d * a1) +
                 Complex(0.0, params.pump_rate) * Sparse(a1d - a1);
  hamiltonian_.makeCompressed();

  jump_ = params.damped_mode() == 0 ? a1 : a2;
  jump_adjoint_ = jump_.adjoint();
  effective_ = Complex(0.0, -1.0) * hamiltonian_ - rate_ * Sparse(jump_adjoint_ * jump_);
  effective_.makeCompressed();
  effective_adjoint_ = effective_.adjoint();
  effective_adjoint_.makeCompressed();
}

void Liouvillian::apply(const Dense& rho, Dense& out, Dense& scratch) const {
  out.noalias() = effective_ * rho;
  out.noalias() += rho * effective_adjoint_;
  if (rate_ != 0.0) {
    scratch.noalias() = jump_ * rho;
    scratch *= 2.0 * rate_;
    out.noalias() += scratch * jump_adjoint_;
  }
}

Dense Liouvillian::apply(const Dense& rho) const {
  Dense out(rho.rows(), rho.cols());
  Dense scratch(rho.rows(), rho.cols());
  apply(rho, out, scratch);
  return out;
}

Dense liouvillian_apply(const FockDensityMatrixd& rho, const DimerParams& params, const OracleOptions& options) {
  return Liouvillian(rho.space, params, options).apply(rho.rho);
}

double truncation_check(const FockDensityMatrixd& rho) {
  const FockSpace& s = rho.space;
  double total = 0.0;
  for (int n1 = 0; n1 <= s.cutoff1; ++n1)
    for (int n2 = 0; n2 <= s.cutoff2; ++n2)
      if (n1 == s.cutoff1 || n2 == s.cutoff2) total += rho.rho(s.index(n1, n2), s.index(n1, n2)).real();
  return total;
}

OracleSeries evolve(const FockDensityMatrixd& rho0, const Liouvillian& generator, double dt,
                    const std::vector<double>& save_times, const EvolveOptions& options) {
  if (!(dt > 0.0)) throw ConfigError("oracle dt must be > 0");
  if (save_times.empty()) throw ConfigError("oracle needs at least one save time");
  std::vector<std::uint64_t> save_steps;
  for (std::size_t k = 0; k < save_times.size(); ++k) {
    const double steps = save_times[k] / dt;
    if (save_times[k] < 0.0 || std::abs(steps - std::round(steps)) > 1e-6 ||
        (k > 0 && !(save_times[k] > save_times[k - 1])))
      throw ConfigError("oracle save times must be increasing non-negative multiples of dt");
    save_steps.push_back(static_cast<std::uint64_t>(std::llround(steps)));
  }

  OracleSeries out;
  FockDensityMatrixd state = rho0;
  std::size_t next = 0;
  const auto record = [&](std::uint64_t step) {
    while (next < save_steps.size() && save_steps[next] == step) {
      const double leak = truncation_check(state);
      out.max_boundary_population = std::max(out.max_boundary_population, leak);
      if (leak > options.leak_tolerance)
        throw CutoffLeak("boundary population " + std::to_string(leak) + " at t = " +
                         std::to_string(save_times[next]) + " exceeds " + std::to_string(options.leak_tolerance));
      out.times.push_back(save_times[next]);
      out.states.push_back(state);
      ++next;
    }
  };

  const Eigen::Index dim = state.rho.rows();
  Dense k(dim, dim), increment(dim, dim), stage(dim, dim), scratch(dim, dim);
  record(0);
  const std::uint64_t n_steps = save_steps.back();
  for (std::uint64_t step = 1; step <= n_steps; ++step) {
    generator.apply(state.rho, k, scratch);
    increment = k;
    stage = state.rho + (0.5 * dt) * k;
    generator.apply(stage, k, scratch);
    increment += 2.0 * k;
    stage = state.rho + (0.5 * dt) * k;
    generator.apply(stage, k, scratch);
    increment += 2.0 * k;
    stage = state.rho + dt * k;
    generator.apply(stage, k, scratch);
    increment += k;
    state.rho += (dt / 6.0) * increment;

    const Complex trace = state.trace();
    const double deviation = std::abs(trace - 1.0);
    const double hermiticity = state.hermiticity_error();
    out.max_hermiticity_error = std::max(out.max_hermiticity_error, hermiticity);
    if (!std::isfinite(deviation) || deviation > options.instability_threshold ||
        hermiticity > options.instability_threshold)
      throw Instability("density matrix unstable at step " + std::to_string(step) +
                        " (trace deviation " + std::to_string(deviation) + ", Hermiticity error " +
                        std::to_string(hermiticity) + "); reduce dt");
    if (deviation > options.trace_tolerance) {
      state.rho /= trace.real();
      out.renormalized_steps.push_back(step);
      out.max_trace_correction = std::max(out.max_trace_correction, deviation);
    }
    record(step);
  }
  return out;
}

MixedMoments symmetric_moments(const FockDensityMatrixd& rho) {
  const FockSpace& s = rho.space;
  // Per-mode symmetrized operators indexed by (p, q), p + q <= 4.
  std::array<std::array<Eigen::MatrixXcd, kMaxMomentOrder + 1>, kMaxMomentOrder + 1> op1, op2;
  for (int p = 0; p <= kMaxMomentOrder; ++p)
    for (int q = 0; p + q <= kMaxMomentOrder; ++q) {
      op1[p][q] = symmetrized_monomial(p, q, s.cutoff1);
      op2[p][q] = symmetrized_monomial(p, q, s.cutoff2);
    }

  MomentVector values = MomentVector::Zero();
  for (int r = 0; r <= kMaxMomentOrder; ++r)
    for (int t = 0; r + t <= kMaxMomentOrder; ++t) {
      const Eigen::MatrixXcd reduced = trace_out_well2(rho, op2[r][t]);
      for (int p = 0; p + r + t <= kMaxMomentOrder; ++p)
        for (int q = 0; p + q + r + t <= kMaxMomentOrder; ++q)
          values(monomial_index(p, q, r, t)) = (reduced * op1[p][q]).trace();
    }
  return MixedMoments(values);
}

double quadrature_expectation(const FockDensityMatrixd& rho, int well, double theta, int order) {
  if (well != 1 && well != 2) throw std::invalid_argument("well must be 1 or 2");
  if (order < 0) throw std::invalid_argument("quadrature order must be >= 0");
  const FockSpace& s = rho.space;
  const int cutoff = s.cutoff(well);
  const int extended = cutoff + order;
  const Eigen::MatrixXcd a = single_mode_annihilator(extended);
  const Complex phase(std::cos(theta), -std::sin(theta));
  const Eigen::MatrixXcd x = phase * a + std::conj(phase) * a.adjoint();
  Eigen::MatrixXcd power = Eigen::MatrixXcd::Identity(extended + 1, extended + 1);
  for (int k = 0; k < order; ++k) power = power * x;
  const Eigen::MatrixXcd local = power.topLeftCorner(cutoff + 1, cutoff + 1);

  if (well == 2) return trace_out_well2(rho, local).trace().real();
  const Eigen::MatrixXcd id2 = Eigen::MatrixXcd::Identity(s.cutoff2 + 1, s.cutoff2 + 1);
  return (trace_out_well2(rho, id2) * local).trace().real();
}

FockExpectations fock_expectations(const FockDensityMatrixd& rho) {
  FockExpectations out;
  out.moments = symmetric_moments(rho);
  out.population1 = out.moments(1, 1, 0, 0).real() - 0.5;
  out.population2 = out.moments(0, 0, 1, 1).real() - 0.5;
  out.mean1 = out.moments(1, 0, 0, 0);
  out.mean2 = out.moments(0, 0, 1, 0);
  return out;
}

}  // namespace wdimer
