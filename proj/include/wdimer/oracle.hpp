// Exact Lindblad evolution of the pumped and damped dimer in a truncated
// two-mode Fock space, used as ground truth for the stochastic engine.
//
//   d rho/dt = -i [H, rho] + gamma (2 a rho a^dag - a^dag a rho - rho a^dag a)
//   H = chi sum_i a_i^dag2 a_i^2 - J (a_1^dag a_2 + a_2^dag a_1) + i eps (a_1^dag - a_1)
//
// with a the damped mode and hbar = 1.

#ifndef WDIMER_ORACLE_HPP
#define WDIMER_ORACLE_HPP

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "wdimer/model.hpp"
#include "wdimer/moments.hpp"

namespace wdimer {

struct FockSpace {
  static constexpr Eigen::Index kMaxDimension = 4096;

  int cutoff1 = 1;  // maximum occupation of well 1
  int cutoff2 = 1;

  /// Throws ConfigError unless cutoffs >= 1 and the dimension is within kMaxDimension.
  void validate() const;
  Eigen::Index dimension() const { return Eigen::Index(cutoff1 + 1) * (cutoff2 + 1); }
  /// Basis index of |n1, n2>; well 2 varies fastest.
  Eigen::Index index(int n1, int n2) const { return Eigen::Index(n1) * (cutoff2 + 1) + n2; }
  int cutoff(int well) const { return well == 1 ? cutoff1 : cutoff2; }
};

template <typename Real>
using DenseOperator = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
struct FockDensityMatrix {
  FockSpace space;
  DenseOperator<Real> rho;

  static FockDensityMatrix vacuum(const FockSpace& space) { return fock(space, 0, 0); }

  static FockDensityMatrix fock(const FockSpace& space, int n1, int n2) {
    space.validate();
    FockDensityMatrix out{space, DenseOperator<Real>::Zero(space.dimension(), space.dimension())};
    out.rho(space.index(n1, n2), space.index(n1, n2)) = Real(1);
    return out;
  }

  /// Product of coherent states projected on the truncated space and renormalized.
  static FockDensityMatrix coherent(const FockSpace& space, std::complex<double> alpha1,
                                    std::complex<double> alpha2) {
    space.validate();
    const auto amplitudes = [](std::complex<double> alpha, int cutoff) {
      std::vector<std::complex<double>> c(cutoff + 1);
      c[0] = 1.0;
      for (int n = 1; n <= cutoff; ++n) c[n] = c[n - 1] * alpha / std::sqrt(double(n));
      return c;
    };
    const auto c1 = amplitudes(alpha1, space.cutoff1);
    const auto c2 = amplitudes(alpha2, space.cutoff2);
    Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1> psi(space.dimension());
    for (int n1 = 0; n1 <= space.cutoff1; ++n1)
      for (int n2 = 0; n2 <= space.cutoff2; ++n2) {
        const std::complex<double> c = c1[n1] * c2[n2];
        psi(space.index(n1, n2)) = std::complex<Real>(Real(c.real()), Real(c.imag()));
      }
    psi.normalize();
    return {space, psi * psi.adjoint()};
  }

  std::complex<Real> trace() const { return rho.trace(); }
  /// max |rho - rho^dag| over all entries.
  Real hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }
};

using FockDensityMatrixd = FockDensityMatrix<double>;

enum class OracleHamiltonian {
  /// chi a^dag2 a^2 per well, the collisional term as written.
  Collisional,
  /// chi (a^dag2 a^2 + 2 a^dag a): the operator whose truncated-Wigner drift
  /// is exactly -2i chi |alpha|^2 alpha.
  WignerMatched,
};

struct OracleOptions {
  OracleHamiltonian hamiltonian = OracleHamiltonian::Collisional;
  /// Multiplies the Lindblad rate; 1 is the amplitude-decay convention of the
  /// stochastic equations. Other values exist for convention-lock tests.
  double loss_scale = 1.0;
};

/// Precomputed operators of the generator for one space and parameter set.
class Liouvillian {
 public:
  Liouvillian(const FockSpace& space, const DimerParams& params, const OracleOptions& options = {});

  const FockSpace& space() const { return space_; }
  const DimerParams& params() const { return params_; }
  const Eigen::SparseMatrix<std::complex<double>>& hamiltonian() const { return hamiltonian_; }

  /// d rho / dt. Does not assume rho is Hermitian.
  DenseOperator<double> apply(const DenseOperator<double>& rho) const;
  /// Allocation-free form; `scratch` is resized on first use.
  void apply(const DenseOperator<double>& rho, DenseOperator<double>& out, DenseOperator<double>& scratch) const;

 private:
  FockSpace space_;
  DimerParams params_;
  double rate_;
  Eigen::SparseMatrix<std::complex<double>> hamiltonian_;
  // d rho/dt = K rho + rho K^dag + 2 rate a rho a^dag with K = -iH - rate a^dag a.
  Eigen::SparseMatrix<std::complex<double>> effective_;
  Eigen::SparseMatrix<std::complex<double>> effective_adjoint_;
  Eigen::SparseMatrix<std::complex<double>> jump_;  // damped-mode annihilator
  Eigen::SparseMatrix<std::complex<double>> jump_adjoint_;
};

/// One-shot convenience; builds the operators on every call.
DenseOperator<double> liouvillian_apply(const FockDensityMatrixd& rho, const DimerParams& params,
                                        const OracleOptions& options = {});

/// Annihilation operator of `well` on the two-mode space.
Eigen::SparseMatrix<std::complex<double>> annihilator(const FockSpace& space, int well);

/// Total probability of basis states with n1 = cutoff1 or n2 = cutoff2.
double truncation_check(const FockDensityMatrixd& rho);

struct EvolveOptions {
  /// Largest tolerated boundary population at any save time (CutoffLeak above).
  double leak_tolerance = 1e-6;
  /// Trace deviation that triggers renormalization.
  double trace_tolerance = 1e-8;
  /// Trace deviation or Hermiticity error treated as Instability.
  double instability_threshold = 1e-4;
};

struct OracleSeries {
  std::vector<double> times;
  std::vector<FockDensityMatrixd> states;
  /// Steps at which the trace was renormalized.
  std::vector<std::uint64_t> renormalized_steps;
  double max_trace_correction = 0.0;
  double max_boundary_population = 0.0;
  double max_hermiticity_error = 0.0;
};

/// Fixed-step RK4 from t = 0 to the last save time; save times must be
/// multiples of dt. Throws CutoffLeak or Instability.
OracleSeries evolve(const FockDensityMatrixd& rho0, const Liouvillian& generator, double dt,
                    const std::vector<double>& save_times, const EvolveOptions& options = {});

/// Symmetrically ordered moments E[{a1^p a1^dag q}{a2^r a2^dag s}] in the
/// same basis the engine accumulates, so every statistics routine applies
/// to oracle states unchanged.
MixedMoments symmetric_moments(const FockDensityMatrixd& rho);

/// <X_well(theta)^order> from the operator X = a e^{-i theta} + a^dag e^{i theta}.
double quadrature_expectation(const FockDensityMatrixd& rho, int well, double theta, int order);

struct FockExpectations {
  double population1 = 0.0;
  double population2 = 0.0;
  std::complex<double> mean1;
  std::complex<double> mean2;
  MixedMoments moments;
};

FockExpectations fock_expectations(const FockDensityMatrixd& rho);

}  // namespace wdimer

#endif  // WDIMER_ORACLE_HPP
