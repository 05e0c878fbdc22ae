#pragma once

#include <iosfwd>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "crplan/metric.hpp"
#include "crplan/shooting.hpp"

namespace crplan {

/// Chart coordinates. The basis has an identity actuation block, so these are
/// actuation increments in raw units.
using ChartCoords = Eigen::Matrix<double, kActuationDim, 1>;
using TangentBasis = Eigen::Matrix<double, kAmbientDim, kActuationDim>;

struct AtlasParams {
  double R = 10.0;        // validity radius, metric units
  double epsilon = 5.0;   // tangent-to-manifold tolerance, metric units
  MetricM metric;
};

struct ChartNeighbor {
  int id = -1;
  ChartCoords y = ChartCoords::Zero();  // neighbor origin in this chart's coordinates
};

struct Chart {
  ManifoldPoint origin;
  TangentBasis Phi = TangentBasis::Zero();
  /// (Phi^T M Phi)^-1 Phi^T M, cached. Projection is orthogonal in the
  /// metric so that large-valued force entries do not dominate it.
  Eigen::Matrix<double, kActuationDim, kAmbientDim> pinv =
      Eigen::Matrix<double, kActuationDim, kAmbientDim>::Zero();
  std::vector<ChartNeighbor> neighbors;
  int sample_count = 0;
  double radius = 10.0;
};

/// [-F_lambda^-1 F_tau; I]. Throws ChartCreationFailed when the
/// nondimensional F_lambda is rank deficient under options.rank_tol.
TangentBasis tangent_basis(const ShootingJacobian& J, const ShootingOptions& options = {});
TangentBasis tangent_basis(const ManifoldPoint& x, const StaticsModel& model,
                           const ShootingOptions& options = {});

/// Chart at an arbitrary origin with a given basis (origin need not be solved).
Chart make_chart(const ManifoldPoint& origin, const TangentBasis& Phi, double radius,
                 const MetricM& metric = {});

AmbientVector to_ambient(const Chart& chart, const ChartCoords& y);
ChartCoords to_chart_coords(const Chart& chart, const AmbientVector& x);

/// Solves F = 0 over lambda starting from to_ambient(y), actuation held at
/// the tangent guess. Out-of-range actuation or a diverging guess come back
/// as a non-converged result rather than an exception.
SolveResult project_to_manifold(const Chart& chart, const ChartCoords& y,
                                const StaticsModel& model, const ShootingOptions& options = {});

/// Validity radius and linearization error tests on a projected point x.
bool within_validity(const Chart& chart, const ChartCoords& y, const AmbientVector& x,
                     const AtlasParams& params);

/// Half-space cell inequalities 2 y^T y_j <= y_j^T y_j against every neighbor.
bool within_cell(const Chart& chart, const ChartCoords& y);

bool chart_contains(const Chart& chart, const ChartCoords& y, const AmbientVector& x,
                    const AtlasParams& params);

class Atlas {
 public:
  explicit Atlas(AtlasParams params = {});

  /// Builds the basis at a solved, full-rank point and links neighbors within 2R.
  int add_chart(const ManifoldPoint& x, const StaticsModel& model,
                const ShootingOptions& options = {});
  /// Same bookkeeping for a caller-provided basis.
  int add_chart(const ManifoldPoint& origin, const TangentBasis& Phi);

  /// Chart selection weighted by (max N - N_i)^2; uniform when all counts tie.
  /// Increments the chosen chart's count.
  int select_chart(std::mt19937_64& rng);

  /// First chart among c and its neighbors whose region contains x, or -1.
  int covering_chart(int c, const AmbientVector& x) const;

  const Chart& chart(int id) const { return charts_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(charts_.size()); }
  const AtlasParams& params() const { return params_; }
  long total_selections() const { return selections_; }

  /// One line per chart: id, N_i, origin (9 numbers), then neighbor ids.
  void write(std::ostream& os) const;

 private:
  AtlasParams params_;
  std::vector<Chart> charts_;
  long selections_ = 0;
};

}  // namespace crplan
