#include "crplan/atlas.hpp"

#include <algorithm>
#include <ostream>

#include <Eigen/LU>

#include "crplan/errors.hpp"

namespace crplan {

TangentBasis tangent_basis(const ShootingJacobian& J, const ShootingOptions& options) {
  const Matrix6d F_lambda = J.leftCols<6>();
  if (stability_rank(nondimensional_F_lambda(F_lambda, options), options.rank_tol).rank < 6) {
    throw ChartCreationFailed("F_lambda is rank deficient at the chart origin");
  }
  TangentBasis Phi;
  Phi.topRows<6>() = -F_lambda.fullPivLu().solve(J.rightCols<kActuationDim>());
  Phi.bottomRows<kActuationDim>().setIdentity();
  if (!Phi.allFinite()) throw ChartCreationFailed("non-finite tangent basis");
  return Phi;
}

TangentBasis tangent_basis(const ManifoldPoint& x, const StaticsModel& model,
                           const ShootingOptions& options) {
  if (x.jac) return tangent_basis(*x.jac, options);
  try {
    return tangent_basis(jacobian(x, model, options.metric), options);
  } catch (const JacobianFailed& e) {
    throw ChartCreationFailed(e.what());
  }
}

Chart make_chart(const ManifoldPoint& origin, const TangentBasis& Phi, double radius,
                 const MetricM& metric) {
  Chart c;
  c.origin = origin;
  c.Phi = Phi;
  const Eigen::Matrix<double, kActuationDim, kAmbientDim> PhiTM =
      Phi.transpose() * metric.weights.asDiagonal();
  c.pinv = (PhiTM * Phi).inverse() * PhiTM;
  c.radius = radius;
  return c;
}

AmbientVector to_ambient(const Chart& chart, const ChartCoords& y) {
  return chart.origin.ambient() + chart.Phi * y;
}

ChartCoords to_chart_coords(const Chart& chart, const AmbientVector& x) {
  return chart.pinv * (x - chart.origin.ambient());
}

SolveResult project_to_manifold(const Chart& chart, const ChartCoords& y,
                                const StaticsModel& model, const ShootingOptions& options) {
  const ManifoldPoint guess = ManifoldPoint::from_ambient(to_ambient(chart, y));
  try {
    return solve_bvp(guess.lambda, guess.tau, model, options);
  } catch (const DomainError&) {
  } catch (const IntegrationDiverged&) {
  }
  SolveResult failed;
  failed.point = guess;
  return failed;
}

bool within_validity(const Chart& chart, const ChartCoords& y, const AmbientVector& x,
                     const AtlasParams& params) {
  const AmbientVector step = chart.Phi * y;
  if (params.metric.norm(step) > chart.radius) return false;
  return params.metric.norm(chart.origin.ambient() + step - x) <= params.epsilon;
}

bool within_cell(const Chart& chart, const ChartCoords& y) {
  return std::all_of(chart.neighbors.begin(), chart.neighbors.end(),
                     [&y](const ChartNeighbor& n) { return 2.0 * y.dot(n.y) <= n.y.dot(n.y); });
}

bool chart_contains(const Chart& chart, const ChartCoords& y, const AmbientVector& x,
                    const AtlasParams& params) {
  return within_validity(chart, y, x, params) && within_cell(chart, y);
}

Atlas::Atlas(AtlasParams params) : params_(std::move(params)) {}

int Atlas::add_chart(const ManifoldPoint& x, const StaticsModel& model,
                     const ShootingOptions& options) {
  if (!x.converged) throw ChartCreationFailed("chart origin is not a solved equilibrium");
  return add_chart(x, tangent_basis(x, model, options));
}

int Atlas::add_chart(const ManifoldPoint& origin, const TangentBasis& Phi) {
  Chart fresh = make_chart(origin, Phi, params_.R, params_.metric);
  const int id = size();
  const AmbientVector xn = origin.ambient();
  for (int j = 0; j < id; ++j) {
    Chart& other = charts_[static_cast<std::size_t>(j)];
    const AmbientVector xj = other.origin.ambient();
    if (params_.metric.norm(xj - xn) > 2.0 * params_.R) continue;
    fresh.neighbors.push_back({j, to_chart_coords(fresh, xj)});
    other.neighbors.push_back({id, to_chart_coords(other, xn)});
  }
  charts_.push_back(std::move(fresh));
  return id;
}

int Atlas::select_chart(std::mt19937_64& rng) {
  if (charts_.empty()) throw DomainError("select_chart on an empty atlas");
  int max_count = 0;
  for (const auto& c : charts_) max_count = std::max(max_count, c.sample_count);
  std::vector<double> weights;
  weights.reserve(charts_.size());
  double total = 0.0;
  for (const auto& c : charts_) {
    const double gap = max_count - c.sample_count;
    weights.push_back(gap * gap);
    total += gap * gap;
  }
  int chosen;
  if (total == 0.0) {
    chosen = std::uniform_int_distribution<int>(0, size() - 1)(rng);
  } else {
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    chosen = size() - 1;
    for (int i = 0; i < size(); ++i) {
      u -= weights[static_cast<std::size_t>(i)];
      if (u < 0.0 && weights[static_cast<std::size_t>(i)] > 0.0) {
        chosen = i;
        break;
      }
    }
    // Guard against rounding landing on a zero-weight tail chart.
    while (weights[static_cast<std::size_t>(chosen)] == 0.0) --chosen;
  }
  ++charts_[static_cast<std::size_t>(chosen)].sample_count;
  ++selections_;
  return chosen;
}

int Atlas::covering_chart(int c, const AmbientVector& x) const {
  const Chart& home = chart(c);
  if (chart_contains(home, to_chart_coords(home, x), x, params_)) return c;
  for (const auto& n : home.neighbors) {
    const Chart& other = chart(n.id);
    if (chart_contains(other, to_chart_coords(other, x), x, params_)) return n.id;
  }
  return -1;
}

void Atlas::write(std::ostream& os) const {
  os << "# id samples lambda(6) tau(3) neighbors...\n";
  for (int i = 0; i < size(); ++i) {
    const Chart& c = chart(i);
    os << i << ' ' << c.sample_count;
    const AmbientVector x = c.origin.ambient();
    for (int k = 0; k < kAmbientDim; ++k) os << ' ' << x(k);
    for (const auto& n : c.neighbors) os << ' ' << n.id;
    os << '\n';
  }
}

}  // namespace crplan
