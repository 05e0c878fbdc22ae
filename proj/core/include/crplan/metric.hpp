#pragma once

#include <cmath>

#include <Eigen/Core>

#include "crplan/mechanics.hpp"

namespace crplan {

/// Point of the ambient space R^6 x R^3 ordered (lambda, tau).
using AmbientVector = Eigen::Matrix<double, kAmbientDim, 1>;

/// Diagonal weighting that makes (lambda, tau) distances commensurate.
struct MetricM {
  AmbientVector weights =
      (AmbientVector() << 1e2, 1e2, 1e2, 0.8, 0.8, 0.8, 1.0, 1.0, 1e4).finished();

  double norm(const AmbientVector& v) const { return std::sqrt(v.dot(weights.cwiseProduct(v))); }

  /// Norm restricted to the actuation block.
  double actuation_norm(const Actuation& dtau) const {
    return std::sqrt(dtau.dot(weights.tail<kActuationDim>().cwiseProduct(dtau)));
  }
};

inline double metric_distance(const AmbientVector& a, const AmbientVector& b, const MetricM& M) {
  return M.norm(a - b);
}

}  // namespace crplan
