#pragma once

// Reference computations written independently of the library code paths.

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "crplan/mechanics.hpp"

namespace oracle {

constexpr double kPi = 3.14159265358979323846;

inline double bending_stiffness(const crplan::RobotParams& p) {
  return p.E * kPi * std::pow(p.r_backbone, 4) / 4.0;
}

/// Tip of a planar arc of curvature kappa bending about +y from the base frame.
inline Eigen::Vector3d arc_tip(double kappa, double l) {
  if (std::abs(kappa) < 1e-12) return {0.0, 0.0, l};
  return {(1.0 - std::cos(kappa * l)) / kappa, 0.0, std::sin(kappa * l) / kappa};
}

/// Cantilever tip deflection under a transverse end load.
inline double cantilever_deflection(double force, double l, double EI) {
  return force * l * l * l / (3.0 * EI);
}

/// Base wrench of four tendons at (+-d, 0) and (0, +-d) pulling towards the
/// base, summed as r x F. Positive tau1 pulls the +x tendon, negative the -x
/// one; same for tau2 on +y / -y.
inline crplan::Wrench tendon_wrench(const crplan::Actuation& tau, double d, bool axial) {
  const Eigen::Vector3d pulls[4][2] = {
      {{d, 0, 0}, {0, 0, -std::max(tau(0), 0.0)}},
      {{-d, 0, 0}, {0, 0, -std::max(-tau(0), 0.0)}},
      {{0, d, 0}, {0, 0, -std::max(tau(1), 0.0)}},
      {{0, -d, 0}, {0, 0, -std::max(-tau(1), 0.0)}},
  };
  Eigen::Vector3d m = Eigen::Vector3d::Zero(), f = Eigen::Vector3d::Zero();
  for (const auto& [r, F] : pulls) {
    m += r.cross(F);
    f += F;
  }
  crplan::Wrench w;
  // The tendon tension loads the rod through its terminations: the moment acts
  // on the section, the force compresses it.
  w << -m, axial ? f : Eigen::Vector3d::Zero();
  return w;
}

/// Matrix exponential of hat(xi) by a truncated Taylor series.
inline Eigen::Matrix4d exp_series(const Eigen::Matrix4d& X) {
  Eigen::Matrix4d out = Eigen::Matrix4d::Identity(), term = Eigen::Matrix4d::Identity();
  for (int k = 1; k < 40; ++k) {
    term = term * X / k;
    out += term;
  }
  return out;
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d S;
  S << 0, -w(2), w(1), w(2), 0, -w(0), -w(1), w(0), 0;
  return S;
}

}  // namespace oracle
