#include "heatalloc/estimator.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "heatalloc/errors.hpp"
#include "heatalloc/thermal_models.hpp"

namespace heatalloc {

namespace {

constexpr double kWattsPerKilowatt = 1000.0;
// Reciprocal condition number below which the normal matrix is singular.
constexpr double kMinRcond = 1e3 * std::numeric_limits<double>::epsilon();

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

double safe_log(double x) { return std::log(std::max(x, std::numeric_limits<double>::min())); }

}  // namespace

double EstimationResult::relative_parameter_uncertainty(std::size_t j) const {
  if (samplings == 0) return std::numeric_limits<double>::quiet_NaN();
  const auto idx = static_cast<Eigen::Index>(j);
  const double theta_kw = theta_hat_w(idx) / kWattsPerKilowatt;
  return std::sqrt(covariance(idx, idx)) /
         (std::sqrt(static_cast<double>(samplings)) * std::abs(theta_kw));
}

SamplingMatrix assemble(const Dataset& dataset, Method method) {
  ValidationOptions options;
  options.method = method;
  require_valid(dataset, options);

  const auto m = static_cast<Eigen::Index>(dataset.periods.size());
  const auto k = static_cast<Eigen::Index>(dataset.radiators.size());
  SamplingMatrix sm;
  sm.a.resize(m, k);
  sm.q.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    sm.period_index.push_back(dataset.periods[static_cast<std::size_t>(i)].index);
    sm.q(i) = dataset.total_energy_kwh[static_cast<std::size_t>(i)];
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& radiator = dataset.radiators[static_cast<std::size_t>(j)];
    sm.radiator_ids.push_back(radiator.id);
    for (Eigen::Index i = 0; i < m; ++i) {
      sm.a(i, j) =
          integral_column(dataset, method, radiator.id, dataset.periods[static_cast<std::size_t>(i)])
              .value;
    }
  }
  return sm;
}

Eigen::VectorXd prior_vector(const Dataset& dataset, Method method) {
  Eigen::VectorXd prior(static_cast<Eigen::Index>(dataset.radiators.size()));
  for (std::size_t j = 0; j < dataset.radiators.size(); ++j) {
    prior(static_cast<Eigen::Index>(j)) = dataset.radiators[j].prior_for(method);
  }
  return prior;
}

EstimationResult solve_rls(const SamplingMatrix& sm, const Eigen::VectorXd& theta0_w,
                           double lambda) {
  const Eigen::Index k = sm.a.cols();
  if (k == 0) throw DataError("sampling matrix has no radiators");
  if (sm.q.size() != sm.a.rows()) throw DataError("Q length does not match the rows of A");
  if (theta0_w.size() != k) {
    throw DataError("prior has " + std::to_string(theta0_w.size()) + " entries, expected " +
                    std::to_string(k));
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw NumericalError("lambda must be finite and non-negative");
  }
  if (!all_finite(sm.a) || !sm.q.allFinite() || !theta0_w.allFinite()) {
    throw NumericalError("non-finite input to the regularized solve");
  }

  const Eigen::VectorXd theta0 = theta0_w / kWattsPerKilowatt;
  Eigen::MatrixXd normal = sm.a.transpose() * sm.a;
  normal.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = sm.a.transpose() * sm.q + lambda * theta0;

  const Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success || !(llt.rcond() > kMinRcond)) {
    throw NumericalError("normal matrix A^T A + lambda I is singular (lambda = " +
                         std::to_string(lambda) + ")");
  }
  Eigen::VectorXd theta = llt.solve(rhs);
  // One step of iterative refinement on the normal equations.
  theta += llt.solve(rhs - normal * theta);

  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(k, k));
  cov = 0.5 * (cov + cov.transpose()).eval();

  EstimationResult out;
  out.radiator_ids = sm.radiator_ids;
  out.theta_hat_w = theta * kWattsPerKilowatt;
  out.covariance = std::move(cov);
  out.lambda = lambda;
  out.samplings = static_cast<std::size_t>(sm.a.rows());
  const Eigen::VectorXd residual = sm.q - sm.a * theta;
  out.residual_norm_kwh = residual.norm();
  out.prior_deviation_norm_w = (out.theta_hat_w - theta0_w).norm();
  out.residual_variance = sm.a.rows() > k
                              ? residual.squaredNorm() / static_cast<double>(sm.a.rows() - k)
                              : std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (out.theta_hat_w(j) < 0.0) out.negative_components.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw ConfigError("log grid needs 0 < lo < hi and at least two points");
  }
  std::vector<double> grid(count);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> default_lambda_grid() { return log_grid(1e-6, 1e2, 20); }

LCurveSelection lcurve_select(const SamplingMatrix& sm, const Eigen::VectorXd& theta0_w,
                              const std::vector<double>& grid) {
  if (grid.size() < 5) throw ConfigError("L-curve grid needs at least 5 points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw ConfigError("L-curve grid must be positive and strictly ascending");
    }
  }
  if (grid.back() / grid.front() < 1e4 * (1.0 - 1e-12)) {
    throw ConfigError("L-curve grid must span at least 4 decades");
  }

  LCurveSelection sel;
  sel.points.reserve(grid.size());
  double r_min = std::numeric_limits<double>::infinity();
  double r_max = 0.0;
  for (const double lambda : grid) {
    const EstimationResult r = solve_rls(sm, theta0_w, lambda);
    sel.points.push_back(LCurvePoint{lambda, r.residual_norm_kwh, r.prior_deviation_norm_w,
                                     std::numeric_limits<double>::quiet_NaN()});
    r_min = std::min(r_min, r.residual_norm_kwh);
    r_max = std::max(r_max, r.residual_norm_kwh);
  }
  if (r_max - r_min <= 1e-12 * std::max(r_max, 1.0)) {
    throw DegenerateCurveError(
        "L-curve is degenerate: residual norm is constant over the grid, the problem is not "
        "ill-posed enough to need regularization");
  }

  // Three-point derivatives in t = log(lambda) of x = log(residual),
  // y = log(prior deviation); signed curvature of the parametric curve.
  const std::size_t n = sel.points.size();
  std::vector<double> t(n), x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = std::log(sel.points[i].lambda);
    x[i] = safe_log(sel.points[i].residual_norm);
    y[i] = safe_log(sel.points[i].prior_deviation_norm);
  }
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_index = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    const auto d1 = [&](const std::vector<double>& f) {
      return -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] +
             h1 / (h2 * (h1 + h2)) * f[i + 1];
    };
    const auto d2 = [&](const std::vector<double>& f) {
      return 2.0 * (f[i - 1] / (h1 * (h1 + h2)) - f[i] / (h1 * h2) + f[i + 1] / (h2 * (h1 + h2)));
    };
    const double xp = d1(x), yp = d1(y), xpp = d2(x), ypp = d2(y);
    const double speed = std::pow(xp * xp + yp * yp, 1.5);
    const double kappa = speed > 0.0 ? (xp * ypp - xpp * yp) / speed : 0.0;
    sel.points[i].curvature = kappa;
    if (kappa >= best) {
      best = kappa;
      best_index = i;
    }
  }
  if (!(best > 0.0)) {
    throw DegenerateCurveError(
        "L-curve is degenerate: no convex corner on the grid, the problem is not ill-posed "
        "enough to need regularization");
  }
  sel.index = best_index;
  sel.lambda_star = sel.points[best_index].lambda;
  return sel;
}

EstimationResult recalibrate(const EstimationResult& previous, const SamplingMatrix& new_data,
                             double lambda) {
  if (previous.theta_hat_w.size() != new_data.a.cols()) {
    throw DataError("previous estimate has " + std::to_string(previous.theta_hat_w.size()) +
                    " parameters, new data has " + std::to_string(new_data.a.cols()) +
                    " radiators");
  }
  if (!previous.radiator_ids.empty() && !new_data.radiator_ids.empty() &&
      previous.radiator_ids != new_data.radiator_ids) {
    throw DataError("radiator ids of the new data differ from the previous estimate");
  }
  if (new_data.a.rows() == 0) {
    if (!(lambda > 0.0)) throw NumericalError("no new data and lambda = 0: singular system");
    EstimationResult out = previous;
    const Eigen::Index k = previous.theta_hat_w.size();
    out.covariance = Eigen::MatrixXd::Identity(k, k) / lambda;
    out.lambda = lambda;
    out.samplings = 0;
    out.residual_norm_kwh = 0.0;
    out.prior_deviation_norm_w = 0.0;
    out.residual_variance = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  EstimationResult out = solve_rls(new_data, previous.theta_hat_w, lambda);
  if (out.radiator_ids.empty()) out.radiator_ids = previous.radiator_ids;
  return out;
}

}  // namespace heatalloc
