#include "crplan/liegroup.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

namespace crplan {

namespace {
constexpr double kSmallAngle = 1e-6;
}  // namespace

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = R;
  T.topRightCorner<3, 1>() = p;
  return T;
}

Pose Pose::operator*(const Pose& other) const {
  return Pose{R * other.R, R * other.p + p};
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d Rt = R.transpose();
  return Pose{Rt, -Rt * p};
}

Eigen::Matrix3d hat3(const Eigen::Vector3d& w) {
  Eigen::Matrix3d W;
  W << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return W;
}

Eigen::Vector3d vee3(const Eigen::Matrix3d& W) {
  return Eigen::Vector3d(W(2, 1), W(0, 2), W(1, 0));
}

Eigen::Matrix4d hat(const Vector6d& xi) {
  Eigen::Matrix4d X = Eigen::Matrix4d::Zero();
  X.topLeftCorner<3, 3>() = hat3(xi.head<3>());
  X.topRightCorner<3, 1>() = xi.tail<3>();
  return X;
}

Vector6d vee(const Eigen::Matrix4d& X) {
  Vector6d xi;
  xi.head<3>() = vee3(X.topLeftCorner<3, 3>());
  xi.tail<3>() = X.topRightCorner<3, 1>();
  return xi;
}

Matrix6d ad(const Twist& xi) {
  Matrix6d A = Matrix6d::Zero();
  const Eigen::Matrix3d W = hat3(xi.head<3>());
  A.topLeftCorner<3, 3>() = W;
  A.bottomLeftCorner<3, 3>() = hat3(xi.tail<3>());
  A.bottomRightCorner<3, 3>() = W;
  return A;
}

Pose exp_se3(const Twist& xi) {
  const Eigen::Vector3d w = xi.head<3>();
  const Eigen::Vector3d v = xi.tail<3>();
  const double theta = w.norm();
  const Eigen::Matrix3d W = hat3(w);
  const Eigen::Matrix3d W2 = W * W;

  // a = sin(t)/t, b = (1 - cos(t))/t^2, c = (t - sin(t))/t^3
  double a, b, c;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
    c = 1.0 / 6.0 - t2 / 120.0;
  } else {
    const double s = std::sin(theta);
    const double co = std::cos(theta);
    a = s / theta;
    b = (1.0 - co) / (theta * theta);
    c = (theta - s) / (theta * theta * theta);
  }

  Pose g;
  g.R = Eigen::Matrix3d::Identity() + a * W + b * W2;
  g.p = (Eigen::Matrix3d::Identity() + b * W + c * W2) * v;
  return g;
}

Pose step_pose(const Pose& g, const Twist& xi, double h) {
  return g * exp_se3(h * xi);
}

Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d& R) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  const Eigen::Matrix3d V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) {
    U.col(2) *= -1.0;
  }
  return U * V.transpose();
}

double rotation_defect(const Eigen::Matrix3d& R) {
  const double ortho =
      (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(R.determinant() - 1.0));
}

}  // namespace crplan
