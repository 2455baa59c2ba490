#include "wdimer/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "wdimer/errors.hpp"

namespace wdimer {

namespace {

using Complex = std::complex<double>;

constexpr int kBinomial[5][5] = {
    {1, 0, 0, 0, 0}, {1, 1, 0, 0, 0}, {1, 2, 1, 0, 0}, {1, 3, 3, 1, 0}, {1, 4, 6, 4, 1}};

Complex phase(double angle) { return {std::cos(angle), std::sin(angle)}; }

void check_well(int well) {
  if (well != 1 && well != 2) throw std::invalid_argument("well must be 1 or 2");
}

// Unit vectors picking X(theta) and Y(theta) out of the (X(0), X(pi/2)) pair.
Eigen::Vector2d x_direction(double theta) { return {std::cos(theta), std::sin(theta)}; }
Eigen::Vector2d y_direction(double theta) { return {-std::sin(theta), std::cos(theta)}; }

double inferred_variance(double v_i, double cov_ij, double v_j) {
  if (v_j < 1e-12) return v_i;
  return v_i - cov_ij * cov_ij / v_j;
}

}  // namespace

double reduce_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

QuadratureSpec QuadratureSpec::make(int well, double theta) {
  check_well(well);
  return {well, reduce_angle(theta)};
}

std::string to_string(Kappa4Convention c) { return c == Kappa4Convention::MeanWeighted ? "mean_weighted" : "standard"; }

Kappa4Convention kappa4_convention_from_string(const std::string& text) {
  if (text == "mean_weighted") return Kappa4Convention::MeanWeighted;
  if (text == "standard") return Kappa4Convention::Standard;
  throw ConfigError("unknown kappa4 convention '" + text + "' (expected mean_weighted or standard)");
}

double quadrature_moment(const MixedMoments& m, const QuadratureSpec& spec, int order) {
  if (order < 1 || order > kMaxMomentOrder) throw std::invalid_argument("quadrature order must be in 1..4");
  check_well(spec.well);
  // X^n = sum_k C(n,k) a^k a*^(n-k) e^{-i theta (2k - n)}
  double total = 0.0;
  for (int k = 0; k <= order; ++k)
    total += kBinomial[order][k] * (phase(-spec.theta * (2 * k - order)) * m.single(spec.well, k, order - k)).real();
  return total;
}

QuadratureMoments quadrature_moments(const MixedMoments& m, const QuadratureSpec& spec) {
  return {quadrature_moment(m, spec, 1), quadrature_moment(m, spec, 2), quadrature_moment(m, spec, 3),
          quadrature_moment(m, spec, 4)};
}

double joint_quadrature_moment(const MixedMoments& m, double theta1, int p, double theta2, int q) {
  if (p < 0 || q < 0 || p + q > kMaxMomentOrder) throw std::invalid_argument("joint order outside the basis");
  double total = 0.0;
  for (int k = 0; k <= p; ++k)
    for (int l = 0; l <= q; ++l)
      total += kBinomial[p][k] * kBinomial[q][l] *
               (phase(-theta1 * (2 * k - p) - theta2 * (2 * l - q)) * m(k, p - k, l, q - l)).real();
  return total;
}

double kappa3(const QuadratureMoments& q) { return q.m3 + 2.0 * q.m1 * q.m1 * q.m1 - 3.0 * q.m1 * q.m2; }

double kappa4(const QuadratureMoments& q, Kappa4Convention convention) {
  const double m1sq = q.m1 * q.m1;
  if (convention == Kappa4Convention::MeanWeighted)
    return q.m4 + 2.0 * m1sq * m1sq - 3.0 * q.m2 * q.m2 - q.m1 * kappa3(q);
  return q.m4 - 4.0 * q.m1 * q.m3 - 3.0 * q.m2 * q.m2 + 12.0 * m1sq * q.m2 - 6.0 * m1sq * m1sq;
}

double quad_variance(const MixedMoments& m, const QuadratureSpec& spec) {
  const double mean = quadrature_moment(m, spec, 1);
  return quadrature_moment(m, spec, 2) - mean * mean;
}

double quad_covariance(const MixedMoments& m, const QuadratureSpec& a, const QuadratureSpec& b) {
  check_well(a.well);
  check_well(b.well);
  if (a.well == b.well) throw SameWellCovariance("covariance requires quadratures of different wells");
  const QuadratureSpec& one = a.well == 1 ? a : b;
  const QuadratureSpec& two = a.well == 1 ? b : a;
  return joint_quadrature_moment(m, one.theta, 1, two.theta, 1) -
         quadrature_moment(m, one, 1) * quadrature_moment(m, two, 1);
}

Eigen::Matrix4d quadrature_covariance(const MixedMoments& m) {
  // q = 2 Re(w^T alpha) with w = e^{-i theta} on the quadrature's own well:
  // Cov(q_a, q_b) = 2 Re(w_a^T M w_b + w_a^T K conj(w_b)),
  // M_ij = Cov(alpha_i, alpha_j), K_ij = Cov(alpha_i, conj(alpha_j)).
  const Eigen::Vector2cd mean(m(1, 0, 0, 0), m(0, 0, 1, 0));
  Eigen::Matrix2cd second, mixed;
  second << m(2, 0, 0, 0), m(1, 0, 1, 0), m(1, 0, 1, 0), m(0, 0, 2, 0);
  mixed << m(1, 1, 0, 0), m(1, 0, 0, 1), m(0, 1, 1, 0), m(0, 0, 1, 1);
  const Eigen::Matrix2cd cov_second = second - mean * mean.transpose();
  const Eigen::Matrix2cd cov_mixed = mixed - mean * mean.adjoint();

  Eigen::Matrix<Complex, 2, 4> weights = Eigen::Matrix<Complex, 2, 4>::Zero();
  weights(0, 0) = 1.0;
  weights(0, 1) = Complex(0.0, -1.0);
  weights(1, 2) = 1.0;
  weights(1, 3) = Complex(0.0, -1.0);

  const Eigen::Matrix4cd full =
      weights.transpose() * cov_second * weights + weights.transpose() * cov_mixed * weights.conjugate();
  return 2.0 * full.real();
}

double epr_product(const Eigen::Matrix4d& cov, int inferred_well, double theta_i, double theta_j) {
  check_well(inferred_well);
  const int i = 2 * (inferred_well - 1);
  const int j = 2 * (2 - inferred_well);
  const Eigen::Matrix2d c_ii = cov.block<2, 2>(i, i);
  const Eigen::Matrix2d c_jj = cov.block<2, 2>(j, j);
  const Eigen::Matrix2d c_ij = cov.block<2, 2>(i, j);
  const Eigen::Vector2d xi = x_direction(theta_i), yi = y_direction(theta_i);
  const Eigen::Vector2d xj = x_direction(theta_j), yj = y_direction(theta_j);
  const double vx = inferred_variance(xi.dot(c_ii * xi), xi.dot(c_ij * xj), xj.dot(c_jj * xj));
  const double vy = inferred_variance(yi.dot(c_ii * yi), yi.dot(c_ij * yj), yj.dot(c_jj * yj));
  return vx * vy;
}

double epr_product(const MixedMoments& m, int inferred_well, double theta_i, double theta_j) {
  check_well(inferred_well);
  const int other = 3 - inferred_well;
  const auto xi = QuadratureSpec::make(inferred_well, theta_i);
  const auto xj = QuadratureSpec::make(other, theta_j);
  const auto yi = xi.conjugate();
  const auto yj = xj.conjugate();
  const double vx = inferred_variance(quad_variance(m, xi), quad_covariance(m, xi, xj), quad_variance(m, xj));
  const double vy = inferred_variance(quad_variance(m, yi), quad_covariance(m, yi, yj), quad_variance(m, yj));
  return vx * vy;
}

DuanSimon duan_simon(const Eigen::Matrix4d& cov, double theta1, double theta2) {
  const Eigen::Vector4d sum_x(std::cos(theta1), std::sin(theta1), std::cos(theta2), std::sin(theta2));
  const Eigen::Vector4d diff_y(-std::sin(theta1), std::cos(theta1), std::sin(theta2), -std::cos(theta2));
  return {sum_x.dot(cov * sum_x) + diff_y.dot(cov * diff_y)};
}

DuanSimon duan_simon(const MixedMoments& m, double theta1, double theta2) {
  const auto x1 = QuadratureSpec::make(1, theta1);
  const auto x2 = QuadratureSpec::make(2, theta2);
  const auto y1 = x1.conjugate();
  const auto y2 = x2.conjugate();
  const double sum_x = quad_variance(m, x1) + quad_variance(m, x2) + 2.0 * quad_covariance(m, x1, x2);
  const double diff_y = quad_variance(m, y1) + quad_variance(m, y2) - 2.0 * quad_covariance(m, y1, y2);
  return {sum_x + diff_y};
}

DuanSimon duan_simon(const MixedMoments& m, double theta) { return duan_simon(m, theta, theta); }

double population(const MixedMoments& m, int well) {
  check_well(well);
  return m.single(well, 1, 1).real() - 0.5;
}

namespace {

// Values closer than this are ties; ties go to the smaller angle pair.
bool clearly_below(double value, double best) { return value < best - 1e-12 * std::max(1.0, std::abs(best)); }

bool ties(double value, double best) { return std::abs(value - best) <= 1e-12 * std::max(1.0, std::abs(best)); }

double mean_epr_product(const std::vector<Eigen::Matrix4d>& covs, int inferred_well, double theta_i, double theta_j) {
  double total = 0.0;
  for (const auto& cov : covs) total += epr_product(cov, inferred_well, theta_i, theta_j);
  return total / static_cast<double>(covs.size());
}

// Grid search of the mean product over a set of covariance matrices.
EprOptimum minimize_epr(const std::vector<Eigen::Matrix4d>& covs, int inferred_well, int grid_size) {
  if (grid_size < 4) throw std::invalid_argument("angle grid must have at least 4 points");
  check_well(inferred_well);
  const double step = std::numbers::pi / grid_size;

  EprOptimum best{0.0, 0.0, mean_epr_product(covs, inferred_well, 0.0, 0.0)};
  for (int a = 0; a < grid_size; ++a)
    for (int b = 0; b < grid_size; ++b) {
      const double value = mean_epr_product(covs, inferred_well, a * step, b * step);
      if (clearly_below(value, best.value)) best = {a * step, b * step, value};
    }

  // Refinement: +-1 coarse step at a tenth of the spacing, angles folded
  // back into [0, pi) (the product is pi-periodic in each angle).
  const EprOptimum coarse = best;
  const double fine = step / 10.0;
  for (int a = -10; a <= 10; ++a)
    for (int b = -10; b <= 10; ++b) {
      const double ti = std::fmod(coarse.theta_i + a * fine + std::numbers::pi, std::numbers::pi);
      const double tj = std::fmod(coarse.theta_j + b * fine + std::numbers::pi, std::numbers::pi);
      const double value = mean_epr_product(covs, inferred_well, ti, tj);
      const bool smaller_tie =
          ties(value, best.value) && (ti < best.theta_i || (ti == best.theta_i && tj < best.theta_j));
      if (clearly_below(value, best.value) || smaller_tie) best = {ti, tj, value};
    }
  return best;
}

// Grid search of the mean Duan-Simon sum over a set of covariance matrices.
DuanSimonOptimum minimize_duan_simon(const std::vector<Eigen::Matrix4d>& covs, int grid_size,
                                     DuanSimonAngles angles) {
  if (grid_size < 4) throw std::invalid_argument("angle grid must have at least 4 points");
  const double step = std::numbers::pi / grid_size;
  DuanSimonOptimum best;
  bool first = true;
  for (int a = 0; a < grid_size; ++a)
    for (int b = 0; b < grid_size; ++b) {
      if (angles == DuanSimonAngles::Common && b != a) continue;
      double value = 0.0;
      for (const auto& cov : covs) value += duan_simon(cov, a * step, b * step).value;
      value /= static_cast<double>(covs.size());
      if (first || clearly_below(value, best.value)) best = {a * step, b * step, value};
      first = false;
    }
  return best;
}

}  // namespace

EprOptimum optimize_epr(const MixedMoments& m, int inferred_well, int grid_size) {
  return minimize_epr({quadrature_covariance(m)}, inferred_well, grid_size);
}

DuanSimonOptimum optimize_duan_simon(const MixedMoments& m, int grid_size, DuanSimonAngles angles) {
  return minimize_duan_simon({quadrature_covariance(m)}, grid_size, angles);
}

Estimate estimate(const MomentAccumulator& acc, std::size_t time_index, const MomentObservable& f) {
  Estimate out;
  out.value = f(acc.pooled(time_index));
  std::vector<double> per_batch;
  per_batch.reserve(acc.num_batches());
  for (std::size_t b = 0; b < acc.num_batches(); ++b)
    if (acc.batch(b).n_used > 0) per_batch.push_back(f(acc.batch_mean(b, time_index)));
  if (per_batch.size() < 2) return out;
  double mean = 0.0;
  for (double v : per_batch) mean += v;
  mean /= static_cast<double>(per_batch.size());
  double ss = 0.0;
  for (double v : per_batch) ss += (v - mean) * (v - mean);
  const double n = static_cast<double>(per_batch.size());
  out.error = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

Estimate quadrature_moment(const MomentAccumulator& acc, std::size_t t, const QuadratureSpec& spec, int order) {
  return estimate(acc, t, [&](const MixedMoments& m) { return quadrature_moment(m, spec, order); });
}

Estimate kappa3(const MomentAccumulator& acc, std::size_t t, const QuadratureSpec& spec) {
  return estimate(acc, t, [&](const MixedMoments& m) { return kappa3(quadrature_moments(m, spec)); });
}

Estimate kappa4(const MomentAccumulator& acc, std::size_t t, const QuadratureSpec& spec,
                Kappa4Convention convention) {
  return estimate(acc, t, [&](const MixedMoments& m) { return kappa4(quadrature_moments(m, spec), convention); });
}

Estimate quad_variance(const MomentAccumulator& acc, std::size_t t, const QuadratureSpec& spec) {
  return estimate(acc, t, [&](const MixedMoments& m) { return quad_variance(m, spec); });
}

Estimate quad_covariance(const MomentAccumulator& acc, std::size_t t, const QuadratureSpec& a,
                         const QuadratureSpec& b) {
  if (a.well == b.well) throw SameWellCovariance("covariance requires quadratures of different wells");
  return estimate(acc, t, [&](const MixedMoments& m) { return quad_covariance(m, a, b); });
}

Estimate epr_product(const MomentAccumulator& acc, std::size_t t, int inferred_well, double theta_i,
                     double theta_j) {
  return estimate(acc, t,
                  [&](const MixedMoments& m) { return epr_product(m, inferred_well, theta_i, theta_j); });
}

Estimate duan_simon(const MomentAccumulator& acc, std::size_t t, double theta) {
  return duan_simon(acc, t, theta, theta);
}

Estimate duan_simon(const MomentAccumulator& acc, std::size_t t, double theta1, double theta2) {
  return estimate(acc, t, [&](const MixedMoments& m) { return duan_simon(m, theta1, theta2).value; });
}

Estimate population(const MomentAccumulator& acc, std::size_t t, int well) {
  return estimate(acc, t, [&](const MixedMoments& m) { return population(m, well); });
}

EprEstimate optimize_epr(const MomentAccumulator& acc, std::size_t t, int inferred_well, int grid_size) {
  EprEstimate out;
  out.optimum = optimize_epr(acc.pooled(t), inferred_well, grid_size);
  out.estimate = epr_product(acc, t, inferred_well, out.optimum.theta_i, out.optimum.theta_j);
  return out;
}

std::vector<std::size_t> steady_window(const MomentAccumulator& acc, double fraction) {
  if (acc.num_times() == 0) throw ShapeMismatch("accumulator has no save times");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("steady fraction must be in (0, 1]");
  const auto& times = acc.save_times();
  const double t_from = times.back() - fraction * (times.back() - times.front());
  std::vector<std::size_t> window;
  for (std::size_t t = 0; t < times.size(); ++t)
    if (times[t] >= t_from - 1e-9) window.push_back(t);
  return window;
}

SteadyEstimate steady_state(const MomentAccumulator& acc, const std::vector<std::size_t>& window,
                            const MomentObservable& f) {
  if (window.empty()) throw ShapeMismatch("empty steady-state window");
  const double n_times = static_cast<double>(window.size());
  SteadyEstimate out;

  std::vector<double> pooled;
  pooled.reserve(window.size());
  for (auto t : window) pooled.push_back(f(acc.pooled(t)));
  double mean = 0.0;
  for (double v : pooled) mean += v;
  mean /= n_times;
  out.estimate.value = mean;

  std::vector<double> per_batch;
  for (std::size_t b = 0; b < acc.num_batches(); ++b) {
    if (acc.batch(b).n_used == 0) continue;
    double sum = 0.0;
    for (auto t : window) sum += f(acc.batch_mean(b, t));
    per_batch.push_back(sum / n_times);
  }
  if (per_batch.size() >= 2) {
    double m = 0.0;
    for (double v : per_batch) m += v;
    m /= static_cast<double>(per_batch.size());
    double ss = 0.0;
    for (double v : per_batch) ss += (v - m) * (v - m);
    const double n = static_cast<double>(per_batch.size());
    out.estimate.error = std::sqrt(ss / (n - 1.0) / n);
  }

  if (window.size() >= 2) {
    const auto& times = acc.save_times();
    double t_mean = 0.0;
    for (auto t : window) t_mean += times[t];
    t_mean /= n_times;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < window.size(); ++k) {
      const double dt = times[window[k]] - t_mean;
      sxy += dt * (pooled[k] - mean);
      sxx += dt * dt;
    }
    out.drift = sxx > 0.0 ? sxy / sxx * (times[window.back()] - times[window.front()]) : 0.0;
  }
  out.stationary = std::abs(out.drift) < out.estimate.error;
  return out;
}

SteadyEpr optimize_epr_steady(const MomentAccumulator& acc, const std::vector<std::size_t>& window,
                              int inferred_well, int grid_size) {
  if (window.empty()) throw ShapeMismatch("empty steady-state window");
  std::vector<Eigen::Matrix4d> covs;
  for (auto t : window) covs.push_back(quadrature_covariance(acc.pooled(t)));
  SteadyEpr out;
  out.optimum = minimize_epr(covs, inferred_well, grid_size);
  const double ti = out.optimum.theta_i, tj = out.optimum.theta_j;
  out.steady = steady_state(acc, window, [&](const MixedMoments& m) { return epr_product(m, inferred_well, ti, tj); });
  return out;
}

SteadyDuanSimon optimize_duan_simon_steady(const MomentAccumulator& acc, const std::vector<std::size_t>& window,
                                           int grid_size, DuanSimonAngles angles) {
  if (window.empty()) throw ShapeMismatch("empty steady-state window");
  std::vector<Eigen::Matrix4d> covs;
  for (auto t : window) covs.push_back(quadrature_covariance(acc.pooled(t)));
  SteadyDuanSimon out;
  out.optimum = minimize_duan_simon(covs, grid_size, angles);
  const double t1 = out.optimum.theta1, t2 = out.optimum.theta2;
  out.steady = steady_state(acc, window, [&](const MixedMoments& m) { return duan_simon(m, t1, t2).value; });
  return out;
}

}  // namespace wdimer
