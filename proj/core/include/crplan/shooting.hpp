#pragma once

#include <memory>

#include <Eigen/Core>

#include "crplan/mechanics.hpp"
#include "crplan/metric.hpp"

namespace crplan {

/// [F_lambda F_tau], 6 x (6 + n).
using ShootingJacobian = Eigen::Matrix<double, 6, kAmbientDim>;

/// Shooting unknown lambda (elastic base wrench) together with the actuation.
/// Solved points carry their Configuration and Jacobian so downstream code
/// does not integrate twice.
struct ManifoldPoint {
  Wrench lambda = Wrench::Zero();
  Actuation tau = Actuation::Zero();
  bool converged = false;
  std::shared_ptr<const Configuration> cfg;
  std::shared_ptr<const ShootingJacobian> jac;

  AmbientVector ambient() const;
  static ManifoldPoint from_ambient(const AmbientVector& x);
};

struct ResidualReport {
  Vector6d F_value = Vector6d::Zero();
  double residual_norm = 0.0;  // moment rows scaled by 1/char_length
  int iterations = 0;
  bool converged = false;
  int rank_F_lambda = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

struct ShootingOptions {
  double tol_F = 1e-8;
  int max_iterations = 100;
  /// Moment residuals are divided by this length before norming.
  double char_length = 0.05;
  double initial_damping = 1e-3;
  /// Second-order (geodesic acceleration) correction of each LM step.
  bool geodesic_acceleration = true;
  /// Singular values above rank_tol * sigma_max count towards the rank.
  double rank_tol = 1e-6;
  /// Compute the rank of F_lambda at the converged point.
  bool classify = true;
  /// With classify, also compute and cache the F_tau columns. Without them
  /// the point carries no Jacobian.
  bool full_jacobian = true;
  MetricM metric;
};

/// F(lambda, tau) = Lambda(l) - W+(g(l)).
Vector6d residual(const Wrench& lambda, const Actuation& tau, const StaticsModel& model);
Vector6d residual(const ManifoldPoint& x, const StaticsModel& model);

double weighted_residual_norm(const Vector6d& F, double char_length);

/// Central differences, one column per ambient coordinate, with step
/// max(1e-6, 1e-6 |x_i|) / sqrt(M_ii). Throws JacobianFailed.
ShootingJacobian jacobian(const ManifoldPoint& x, const StaticsModel& model, const MetricM& metric);
/// The F_lambda block alone, same differencing as jacobian().
Matrix6d lambda_jacobian(const ManifoldPoint& x, const StaticsModel& model, const MetricM& metric);

struct RankInfo {
  int rank = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// F_lambda with moment rows divided by char_length and columns divided by
/// sqrt(M_ii). The raw matrix mixes N and N m and its singular value ratio
/// reflects units rather than proximity to a fold.
Matrix6d nondimensional_F_lambda(const Matrix6d& F_lambda, const ShootingOptions& options);

/// Plain SVD rank of the given matrix.
RankInfo stability_rank(const Matrix6d& F_lambda, double rank_tol = 1e-6);
/// Rank of nondimensional_F_lambda at x.
RankInfo stability_rank(const ManifoldPoint& x, const StaticsModel& model,
                        const ShootingOptions& options = {});

struct SolveResult {
  ManifoldPoint point;
  ResidualReport report;
};

/// Levenberg-Marquardt over lambda with tau held fixed. Returns the best
/// iterate with converged = false when tol_F is not met. Throws
/// IntegrationDiverged if the initial guess cannot be integrated.
SolveResult solve_bvp(const Wrench& guess, const Actuation& tau, const StaticsModel& model,
                      const ShootingOptions& options = {});

/// Membership in the stable set: converged and full-rank F_lambda.
bool is_stable(const ResidualReport& report);

}  // namespace crplan
