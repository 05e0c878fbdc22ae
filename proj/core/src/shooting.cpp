#include "crplan/shooting.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include "crplan/errors.hpp"

namespace crplan {

namespace {

constexpr double kMaxDamping = 1e16;
constexpr double kMinDamping = 1e-12;
constexpr double kMaxAccelRatio = 0.75;

Vector6d residual_scale(double char_length) {
  Vector6d s;
  s << 1.0 / char_length, 1.0 / char_length, 1.0 / char_length, 1.0, 1.0, 1.0;
  return s;
}

Vector6d tip_residual(const RodState& tip, const Scene& scene) {
  return tip.Lambda - tip_wrench(scene, tip.g);
}

double fd_step(double x, double weight) {
  return std::max(1e-6, 1e-6 * std::abs(x)) / std::sqrt(weight);
}

// Forward-difference F_lambda used inside the LM loop; the central-difference
// Jacobian is reserved for classification and tangent spaces.
Matrix6d forward_lambda_jacobian(const Wrench& lambda, const Actuation& tau,
                                 const Vector6d& F0, const StaticsModel& model,
                                 const MetricM& metric) {
  Matrix6d J;
  for (int i = 0; i < 6; ++i) {
    const double h = fd_step(lambda(i), metric.weights(i));
    Wrench lp = lambda;
    lp(i) += h;
    J.col(i) = (tip_residual(integrate_tip(lp, tau, model), model.scene) - F0) / h;
  }
  return J;
}

}  // namespace

AmbientVector ManifoldPoint::ambient() const {
  AmbientVector x;
  x << lambda, tau;
  return x;
}

ManifoldPoint ManifoldPoint::from_ambient(const AmbientVector& x) {
  ManifoldPoint p;
  p.lambda = x.head<6>();
  p.tau = x.tail<kActuationDim>();
  return p;
}

Vector6d residual(const Wrench& lambda, const Actuation& tau, const StaticsModel& model) {
  check_actuation(tau, model.robot);
  return tip_residual(integrate_tip(lambda, tau, model), model.scene);
}

Vector6d residual(const ManifoldPoint& x, const StaticsModel& model) {
  return residual(x.lambda, x.tau, model);
}

double weighted_residual_norm(const Vector6d& F, double char_length) {
  return F.cwiseProduct(residual_scale(char_length)).norm();
}

namespace {

// Central differences over the first `cols` ambient coordinates.
template <int Cols>
Eigen::Matrix<double, 6, Cols> central_jacobian(const ManifoldPoint& x, const StaticsModel& model,
                                                const MetricM& metric) {
  const AmbientVector x0 = x.ambient();
  Eigen::Matrix<double, 6, Cols> J;
  try {
    for (int i = 0; i < Cols; ++i) {
      const double h = fd_step(x0(i), metric.weights(i));
      AmbientVector xp = x0, xm = x0;
      xp(i) += h;
      xm(i) -= h;
      const Vector6d Fp = tip_residual(integrate_tip(xp.head<6>(), xp.tail<3>(), model), model.scene);
      const Vector6d Fm = tip_residual(integrate_tip(xm.head<6>(), xm.tail<3>(), model), model.scene);
      J.col(i) = (Fp - Fm) / (2.0 * h);
    }
  } catch (const Error& e) {
    throw JacobianFailed(std::string("jacobian evaluation failed: ") + e.what());
  }
  return J;
}

}  // namespace

ShootingJacobian jacobian(const ManifoldPoint& x, const StaticsModel& model, const MetricM& metric) {
  return central_jacobian<kAmbientDim>(x, model, metric);
}

Matrix6d lambda_jacobian(const ManifoldPoint& x, const StaticsModel& model, const MetricM& metric) {
  return central_jacobian<6>(x, model, metric);
}

Matrix6d nondimensional_F_lambda(const Matrix6d& F_lambda, const ShootingOptions& options) {
  const Vector6d cols = options.metric.weights.head<6>().cwiseSqrt().cwiseInverse();
  return residual_scale(options.char_length).asDiagonal() * F_lambda * cols.asDiagonal();
}

RankInfo stability_rank(const Matrix6d& F_lambda, double rank_tol) {
  Eigen::JacobiSVD<Matrix6d> svd(F_lambda);
  const Vector6d sv = svd.singularValues();
  RankInfo info;
  info.sigma_max = sv(0);
  info.sigma_min = sv(5);
  for (int i = 0; i < 6; ++i) {
    if (sv(i) > rank_tol * info.sigma_max) ++info.rank;
  }
  return info;
}

RankInfo stability_rank(const ManifoldPoint& x, const StaticsModel& model,
                        const ShootingOptions& options) {
  const ShootingJacobian J = x.jac ? *x.jac : jacobian(x, model, options.metric);
  return stability_rank(nondimensional_F_lambda(J.leftCols<6>(), options), options.rank_tol);
}

bool is_stable(const ResidualReport& report) {
  return report.converged && report.rank_F_lambda == 6;
}

SolveResult solve_bvp(const Wrench& guess, const Actuation& tau, const StaticsModel& model,
                      const ShootingOptions& options) {
  check_actuation(tau, model.robot);
  const Vector6d scale = residual_scale(options.char_length);

  Wrench lambda = guess;
  Vector6d F = tip_residual(integrate_tip(lambda, tau, model), model.scene);
  double cost = F.cwiseProduct(scale).norm();

  int iterations = 0;
  double mu = options.initial_damping;
  bool need_jacobian = true;
  Matrix6d JF;

  while (cost > options.tol_F && iterations < options.max_iterations && mu < kMaxDamping) {
    if (need_jacobian) {
      try {
        JF = forward_lambda_jacobian(lambda, tau, F, model, options.metric);
      } catch (const IntegrationDiverged&) {
        break;
      }
      need_jacobian = false;
    }
    const Matrix6d J = scale.asDiagonal() * JF;
    const Vector6d r = F.cwiseProduct(scale);
    const Matrix6d A = J.transpose() * J;
    const Vector6d grad = J.transpose() * r;
    Matrix6d damped = A;
    for (int i = 0; i < 6; ++i) damped(i, i) += mu * std::max(A(i, i), 1e-12);
    const Vector6d step = -damped.ldlt().solve(grad);
    ++iterations;
    if (!step.allFinite()) {
      mu *= 10.0;
      continue;
    }

    Wrench trial = lambda + step;
    Vector6d F_trial;
    try {
      if (options.geodesic_acceleration) {
        // Second directional derivative of F along the step; correcting with
        // it keeps the iterate inside narrow curved valleys of |F|.
        constexpr double h = 0.1;
        const Vector6d F_h = tip_residual(integrate_tip(lambda + h * step, tau, model), model.scene);
        const Vector6d rpp = (2.0 / h) * ((F_h - F) / h - JF * step);
        const Vector6d accel = -damped.ldlt().solve(J.transpose() * rpp.cwiseProduct(scale));
        const Vector6d d = A.diagonal().cwiseMax(1e-12).cwiseSqrt();
        if (2.0 * accel.cwiseProduct(d).norm() > kMaxAccelRatio * step.cwiseProduct(d).norm()) {
          mu *= 10.0;
          continue;
        }
        trial += 0.5 * accel;
      }
      F_trial = tip_residual(integrate_tip(trial, tau, model), model.scene);
    } catch (const IntegrationDiverged&) {
      mu *= 10.0;
      continue;
    }
    const double trial_cost = F_trial.cwiseProduct(scale).norm();
    spdlog::trace("lm {}: cost={:.3e} trial={:.3e} mu={:.1e} |step|={:.3e}", iterations, cost,
                  trial_cost, mu, step.norm());
    if (trial_cost < cost) {
      lambda = trial;
      F = F_trial;
      cost = trial_cost;
      mu = std::max(mu / 10.0, kMinDamping);
      need_jacobian = true;
    } else {
      mu *= 10.0;
    }
  }

  SolveResult out;
  out.point.lambda = lambda;
  out.point.tau = tau;
  out.report.F_value = F;
  out.report.residual_norm = cost;
  out.report.iterations = iterations;
  out.report.converged = cost <= options.tol_F;
  out.point.converged = out.report.converged;

  if (out.report.converged) {
    out.point.cfg = std::make_shared<const Configuration>(integrate_ivp(lambda, tau, model));
    if (options.classify) {
      try {
        Matrix6d F_lambda;
        if (options.full_jacobian) {
          auto J = std::make_shared<const ShootingJacobian>(jacobian(out.point, model, options.metric));
          F_lambda = J->leftCols<6>();
          out.point.jac = std::move(J);
        } else {
          F_lambda = lambda_jacobian(out.point, model, options.metric);
        }
        const RankInfo info = stability_rank(nondimensional_F_lambda(F_lambda, options), options.rank_tol);
        out.report.rank_F_lambda = info.rank;
        out.report.sigma_min = info.sigma_min;
        out.report.sigma_max = info.sigma_max;
      } catch (const JacobianFailed&) {
        out.report.rank_F_lambda = 0;
      }
    }
  }
  spdlog::debug("solve_bvp: iterations={} |F|={:.3e} converged={} rank={} sigma_min={:.3e}",
                out.report.iterations, out.report.residual_norm, out.report.converged,
                out.report.rank_F_lambda, out.report.sigma_min);
  return out;
}

}  // namespace crplan
