// Quadrature statistics, cumulants and EPR-steering / inseparability
// measures computed from the stored mixed moments.
//
// Quadratures are X(theta) = a e^{-i theta} + a^dag e^{i theta}, so the
// vacuum has V(X) = 1, the Reid bound is 1 and the Duan-Simon bound is 4.
// Wigner averages are symmetrically ordered, which makes every power of a
// single quadrature (and every product of quadratures of different wells)
// equal to its quantum expectation value.

#ifndef WDIMER_STATISTICS_HPP
#define WDIMER_STATISTICS_HPP

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wdimer/accumulator.hpp"
#include "wdimer/moments.hpp"

namespace wdimer {

struct QuadratureSpec {
  int well = 1;        // 1 or 2
  double theta = 0.0;  // radians, reduced to [0, 2 pi)

  static QuadratureSpec make(int well, double theta);
  /// The conjugate quadrature Y = X(theta + pi/2).
  QuadratureSpec conjugate() const { return make(well, theta + 1.5707963267948966); }
  bool operator==(const QuadratureSpec&) const = default;
};

/// theta mod 2 pi in [0, 2 pi).
double reduce_angle(double theta);

/// Raw quadrature moments <X>, <X^2>, <X^3>, <X^4>.
struct QuadratureMoments {
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

enum class Kappa4Convention {
  MeanWeighted,  // <X^4> + 2<X>^4 - 3<X^2>^2 - <X> kappa3
  Standard,      // textbook fourth cumulant
};

std::string to_string(Kappa4Convention c);
Kappa4Convention kappa4_convention_from_string(const std::string& text);

class SameWellCovariance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---- point values on one set of moments -----------------------------------

/// <X^order>, order in 1..4.
double quadrature_moment(const MixedMoments& m, const QuadratureSpec& spec, int order);
QuadratureMoments quadrature_moments(const MixedMoments& m, const QuadratureSpec& spec);

/// <X_1(theta1)^p X_2(theta2)^q>, p + q <= 4.
double joint_quadrature_moment(const MixedMoments& m, double theta1, int p, double theta2, int q);

double kappa3(const QuadratureMoments& q);
double kappa4(const QuadratureMoments& q, Kappa4Convention convention = Kappa4Convention::MeanWeighted);

double quad_variance(const MixedMoments& m, const QuadratureSpec& spec);
/// V(A, B) = <AB> - <A><B>; the two quadratures must belong to different wells.
double quad_covariance(const MixedMoments& m, const QuadratureSpec& a, const QuadratureSpec& b);

/// Real covariance matrix of (X_1(0), X_1(pi/2), X_2(0), X_2(pi/2)).
Eigen::Matrix4d quadrature_covariance(const MixedMoments& m);

/// Reid product V_inf(X_i) V_inf(Y_i) inferring well i from well j != i.
double epr_product(const MixedMoments& m, int inferred_well, double theta_i, double theta_j);
double epr_product(const Eigen::Matrix4d& cov, int inferred_well, double theta_i, double theta_j);

struct DuanSimon {
  double value;
  double bound = 4.0;
};

/// V(X_1 + X_2) + V(Y_1 - Y_2) at a common angle theta.
DuanSimon duan_simon(const MixedMoments& m, double theta);
/// Same sum with separate local angles, X_1(theta1) and X_2(theta2).
DuanSimon duan_simon(const MixedMoments& m, double theta1, double theta2);
DuanSimon duan_simon(const Eigen::Matrix4d& cov, double theta1, double theta2);

/// Atom number <a^dag a> = mean |alpha|^2 - 1/2.
double population(const MixedMoments& m, int well);

// ---- angle optimization ----------------------------------------------------

struct EprOptimum {
  double theta_i = 0.0;
  double theta_j = 0.0;
  double value = 0.0;
};

/// Exhaustive grid over theta_i, theta_j in [0, pi), then one refinement
/// pass at ten times the resolution around the grid minimum. Ties resolve
/// to the lexicographically smallest (theta_i, theta_j).
EprOptimum optimize_epr(const MixedMoments& m, int inferred_well, int grid_size = 180);

struct DuanSimonOptimum {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double value = 0.0;
};

enum class DuanSimonAngles {
  Common,       // theta1 = theta2 = theta
  Independent,  // separate local angle per well
};

/// Grid search over theta in [0, pi), or over both local angles.
DuanSimonOptimum optimize_duan_simon(const MixedMoments& m, int grid_size = 180,
                                     DuanSimonAngles angles = DuanSimonAngles::Common);

// ---- estimates with batch standard errors ----------------------------------

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // standard error
};

using MomentObservable = std::function<double(const MixedMoments&)>;

/// Value from the pooled moments; standard error from the spread of the
/// per-batch values: sd / sqrt(n_batches).
Estimate estimate(const MomentAccumulator& acc, std::size_t time_index, const MomentObservable& f);

Estimate quadrature_moment(const MomentAccumulator& acc, std::size_t t, const QuadratureSpec& spec, int order);
Estimate kappa3(const MomentAccumulator& acc, std::size_t t, const QuadratureSpec& spec);
Estimate kappa4(const MomentAccumulator& acc, std::size_t t, const QuadratureSpec& spec,
                Kappa4Convention convention = Kappa4Convention::MeanWeighted);
Estimate quad_variance(const MomentAccumulator& acc, std::size_t t, const QuadratureSpec& spec);
Estimate quad_covariance(const MomentAccumulator& acc, std::size_t t, const QuadratureSpec& a,
                         const QuadratureSpec& b);
Estimate epr_product(const MomentAccumulator& acc, std::size_t t, int inferred_well, double theta_i,
                     double theta_j);
Estimate duan_simon(const MomentAccumulator& acc, std::size_t t, double theta);
Estimate duan_simon(const MomentAccumulator& acc, std::size_t t, double theta1, double theta2);
Estimate population(const MomentAccumulator& acc, std::size_t t, int well);

struct EprEstimate {
  EprOptimum optimum;     // angles found on the pooled moments
  Estimate estimate;      // Reid product at those angles
};

EprEstimate optimize_epr(const MomentAccumulator& acc, std::size_t t, int inferred_well, int grid_size = 180);

// ---- steady state ------------------------------------------------------------

/// Indices of the save times inside the last `fraction` of the time window.
std::vector<std::size_t> steady_window(const MomentAccumulator& acc, double fraction = 0.25);

struct SteadyEstimate {
  Estimate estimate;       // time average over the window
  double drift = 0.0;      // least-squares slope times the window length
  bool stationary = true;  // |drift| < standard error
};

/// Averages f over the window times. The standard error comes from the
/// per-batch time averages, so correlations between save times are kept.
SteadyEstimate steady_state(const MomentAccumulator& acc, const std::vector<std::size_t>& window,
                            const MomentObservable& f);

struct SteadyEpr {
  EprOptimum optimum;  // angles minimizing the window-averaged product
  SteadyEstimate steady;
};

SteadyEpr optimize_epr_steady(const MomentAccumulator& acc, const std::vector<std::size_t>& window,
                              int inferred_well, int grid_size = 180);

struct SteadyDuanSimon {
  DuanSimonOptimum optimum;  // angles minimizing the window-averaged sum
  SteadyEstimate steady;
};

SteadyDuanSimon optimize_duan_simon_steady(const MomentAccumulator& acc, const std::vector<std::size_t>& window,
                                           int grid_size = 180, DuanSimonAngles angles = DuanSimonAngles::Common);

}  // namespace wdimer

#endif  // WDIMER_STATISTICS_HPP
