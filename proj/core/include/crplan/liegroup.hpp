#pragma once

#include <Eigen/Core>

namespace crplan {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Body twist ordered [omega; v]. Along the backbone both parts are
/// per-arclength quantities (curvature/torsion, shear/extension).
using Twist = Vector6d;

/// Body wrench ordered [moment; force], dual to Twist.
using Wrench = Vector6d;

/// Element of SE(3). Body-frame convention: g' = g * hat(xi).
struct Pose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  Eigen::Matrix4d matrix() const;
  Pose operator*(const Pose& other) const;
  Pose inverse() const;
};

Eigen::Matrix3d hat3(const Eigen::Vector3d& w);
Eigen::Vector3d vee3(const Eigen::Matrix3d& W);

/// se(3) hat map: [[hat3(omega), v], [0, 0]].
Eigen::Matrix4d hat(const Vector6d& xi);
Vector6d vee(const Eigen::Matrix4d& X);

/// Adjoint of the Lie algebra, [[hat(omega), 0], [hat(v), hat(omega)]].
/// ad(a) * b is the bracket [a, b].
Matrix6d ad(const Twist& xi);

/// Closed-form exponential of hat(xi). Falls back to a Taylor series when
/// |omega| < 1e-6.
Pose exp_se3(const Twist& xi);

/// g * exp(h * hat(xi)).
Pose step_pose(const Pose& g, const Twist& xi, double h);

/// Nearest rotation in the Frobenius sense (polar decomposition).
Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d& R);

/// max(|R^T R - I|, |det R - 1|)
double rotation_defect(const Eigen::Matrix3d& R);

}  // namespace crplan
