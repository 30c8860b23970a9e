#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "heatalloc/domain.hpp"

namespace heatalloc {

/// The linear energy balance Q = A theta + dQ over M energy samplings and K
/// radiators. A holds normalized temperature integrals in hours, Q energies in
/// kWh, so the solver works with theta in kW.
struct SamplingMatrix {
  Eigen::MatrixXd a;
  Eigen::VectorXd q;
  std::vector<std::size_t> period_index;
  std::vector<std::string> radiator_ids;

  Eigen::Index samplings() const { return a.rows(); }
  Eigen::Index radiators() const { return a.cols(); }
};

struct EstimationResult {
  std::vector<std::string> radiator_ids;
  Eigen::VectorXd theta_hat_w;
  /// (A^T A + lambda I)^-1 in solver units (A in hours, theta in kW). Carries
  /// no noise-variance scale.
  Eigen::MatrixXd covariance;
  double lambda = 0.0;
  double residual_norm_kwh = 0.0;
  double prior_deviation_norm_w = 0.0;
  std::size_t samplings = 0;
  /// ||Q - A theta||^2 / (M - K) when M > K, else NaN. Diagnostic only.
  double residual_variance = 0.0;
  /// Indices of physically impossible (negative) estimates.
  std::vector<std::size_t> negative_components;

  /// sqrt(C_jj) / (sqrt(M) * theta_j): the relative parameter uncertainty.
  double relative_parameter_uncertainty(std::size_t j) const;
};

struct LCurvePoint {
  double lambda = 0.0;
  double residual_norm = 0.0;          // kWh
  double prior_deviation_norm = 0.0;   // W
  double curvature = 0.0;              // NaN at the two grid ends
};

struct LCurveSelection {
  double lambda_star = 0.0;
  std::size_t index = 0;
  std::vector<LCurvePoint> points;
};

/// Builds A and Q from a validated dataset.
SamplingMatrix assemble(const Dataset& dataset, Method method);

/// Prior vector for a method, in W, ordered like the dataset radiators.
Eigen::VectorXd prior_vector(const Dataset& dataset, Method method);

/// theta = (A^T A + lambda I)^-1 (A^T Q + lambda theta0), theta0 in W.
EstimationResult solve_rls(const SamplingMatrix& sm, const Eigen::VectorXd& theta0_w,
                           double lambda);

/// `count` logarithmically spaced values in [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t count);
/// 20 points in [1e-6, 1e2].
std::vector<double> default_lambda_grid();

/// Traces the L-curve over the grid and returns the lambda of maximum discrete
/// curvature (ties towards the larger lambda). Throws DegenerateCurveError when
/// the curve has no convex corner.
LCurveSelection lcurve_select(const SamplingMatrix& sm, const Eigen::VectorXd& theta0_w,
                              const std::vector<double>& lambda_grid);

/// Re-solves on new data using the previous estimate as prior.
EstimationResult recalibrate(const EstimationResult& previous, const SamplingMatrix& new_data,
                             double lambda);

}  // namespace heatalloc
