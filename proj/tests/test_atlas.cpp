#include <random>

#include <Eigen/LU>

#include <gtest/gtest.h>

#include "crplan/atlas.hpp"
#include "crplan/errors.hpp"
#include "crplan/scenario.hpp"

using namespace crplan;

namespace {

const Scenario& scenario1() {
  static const Scenario s = load_scenario(CRPLAN_SCENARIO_DIR "/scenario1.json");
  return s;
}

ManifoldPoint straight(double l = 0.05) {
  const StaticsModel m;
  return solve_bvp(Wrench::Zero(), {0, 0, l}, m).point;
}

// Basis with zero lambda block: metric length reduces to the actuation weights.
TangentBasis actuation_only_basis() {
  TangentBasis Phi = TangentBasis::Zero();
  Phi.bottomRows<kActuationDim>().setIdentity();
  return Phi;
}

ManifoldPoint at_tau(const Actuation& tau) {
  ManifoldPoint x;
  x.tau = tau;
  return x;
}

}  // namespace

TEST(TangentBasis, StraightRodShape) {
  const StaticsModel m;
  const TangentBasis Phi = tangent_basis(straight(), m);
  EXPECT_EQ(Phi.rows(), 9);
  EXPECT_EQ(Phi.cols(), 3);
  EXPECT_TRUE(Phi.bottomRows<3>().isIdentity(0.0));
}

TEST(TangentBasis, KernelPropertyAtFieldPoints) {
  const Scenario& s = scenario1();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  while (checked < 20) {
    const Actuation tau = s.start.point.tau + Actuation(6 * u(rng), 6 * u(rng), 0.004 * u(rng));
    const SolveResult r = solve_bvp(s.start.point.lambda, tau, s.model);
    if (!is_stable(r.report)) continue;
    ++checked;
    const ShootingJacobian& J = *r.point.jac;
    const TangentBasis Phi = tangent_basis(J);
    EXPECT_LE((J * Phi).norm(), 1e-6 * J.norm());
    EXPECT_TRUE(Phi.topRows<6>().isApprox(-J.leftCols<6>().inverse() * J.rightCols<3>(), 1e-9));
  }
}

TEST(TangentBasis, SingularFLambdaRejected) {
  ShootingJacobian J = ShootingJacobian::Random();
  J.row(4).setZero();
  EXPECT_THROW(tangent_basis(J), ChartCreationFailed);
}

TEST(ChartMaps, OriginLinearityAndActuationBlock) {
  const StaticsModel m;
  const ManifoldPoint o = straight();
  const Chart c = make_chart(o, tangent_basis(o, m), 10.0);
  EXPECT_EQ(to_ambient(c, ChartCoords::Zero()), o.ambient());
  const ChartCoords y1(1.0, -2.0, 0.01), y2(-0.5, 3.0, 0.002);
  const AmbientVector x0 = o.ambient();
  EXPECT_TRUE((to_ambient(c, y1 + y2) - x0).isApprox((to_ambient(c, y1) - x0) + (to_ambient(c, y2) - x0), 1e-14));
  EXPECT_TRUE((to_ambient(c, y1) - x0).tail<3>().isApprox(y1, 1e-12));
}

TEST(ChartMaps, ProjectionRoundTripAndOptimality) {
  const Scenario& s = scenario1();
  const Chart c = make_chart(s.start.point, tangent_basis(*s.start.point.jac), 10.0, s.planner.metric);
  EXPECT_TRUE(to_chart_coords(c, s.start.point.ambient()).isZero(0.0));
  const ChartCoords y(2.0, -1.0, 0.003);
  EXPECT_TRUE(to_chart_coords(c, to_ambient(c, y)).isApprox(y, 1e-10));
  // Off-tangent point: the residual is orthogonal to every column in the
  // metric inner product.
  AmbientVector x = to_ambient(c, y);
  x.head<6>() += AmbientVector::Constant(0.1).head<6>();
  const ChartCoords yp = to_chart_coords(c, x);
  const AmbientVector r = x - to_ambient(c, yp);
  const Eigen::Vector3d g = c.Phi.transpose() * s.planner.metric.weights.asDiagonal() * r;
  EXPECT_LT(g.norm(), 1e-10 * (c.Phi.norm() * r.norm() * 1e4));
}

TEST(Projection, OriginAndSmallStep) {
  const StaticsModel m;
  const ManifoldPoint o = straight();
  const Chart c = make_chart(o, tangent_basis(o, m), 10.0);
  const SolveResult r0 = project_to_manifold(c, ChartCoords::Zero(), m);
  EXPECT_TRUE(r0.report.converged);
  EXPECT_TRUE(r0.point.lambda.isZero(1e-12));
  const SolveResult r1 = project_to_manifold(c, ChartCoords(5.0, -3.0, 0.005), m);
  EXPECT_TRUE(r1.report.converged);
  EXPECT_LE(r1.report.residual_norm, 1e-8);
}

TEST(Projection, TangentErrorWithinEpsilonForSmallSteps) {
  const Scenario& s = scenario1();
  AtlasParams p;
  p.metric = s.planner.metric;
  const Chart c = make_chart(s.start.point, tangent_basis(*s.start.point.jac), p.R, p.metric);
  for (const ChartCoords& y : {ChartCoords(1, 0, 0), ChartCoords(0, -1, 0), ChartCoords(0, 0, 0.001)}) {
    const SolveResult r = project_to_manifold(c, y, s.model);
    ASSERT_TRUE(r.report.converged);
    EXPECT_LE(p.metric.norm(to_ambient(c, y) - r.point.ambient()), p.epsilon);
  }
}

TEST(Projection, OutOfRangeActuationIsNonConverged) {
  const StaticsModel m;
  const ManifoldPoint o = straight();
  const Chart c = make_chart(o, tangent_basis(o, m), 10.0);
  const SolveResult r = project_to_manifold(c, ChartCoords(100, 0, 0), m);
  EXPECT_FALSE(r.report.converged);
}

TEST(ChartContains, ValidityRadius) {
  AtlasParams p;
  const Chart c = make_chart(at_tau({0, 0, 0.05}), actuation_only_basis(), p.R, p.metric);
  EXPECT_TRUE(chart_contains(c, ChartCoords::Zero(), c.origin.ambient(), p));
  const ChartCoords inside(0.99 * p.R, 0, 0), outside(1.01 * p.R, 0, 0);
  EXPECT_TRUE(chart_contains(c, inside, to_ambient(c, inside), p));
  EXPECT_FALSE(chart_contains(c, outside, to_ambient(c, outside), p));
  // Linearization error above epsilon rejects even a short step.
  AmbientVector far = to_ambient(c, inside);
  far(0) += 1.01 * p.epsilon / std::sqrt(p.metric.weights(0));
  EXPECT_FALSE(chart_contains(c, inside, far, p));
}

TEST(Atlas, NeighborThresholdsAndSymmetry) {
  AtlasParams p;
  Atlas atlas(p);
  atlas.add_chart(at_tau({0, 0, 0.05}), actuation_only_basis());
  atlas.add_chart(at_tau({1.5 * p.R, 0, 0.05}), actuation_only_basis());
  atlas.add_chart(at_tau({-2.5 * p.R, 0, 0.05}), actuation_only_basis());
  EXPECT_EQ(atlas.chart(0).neighbors.size(), 1u);
  EXPECT_EQ(atlas.chart(0).neighbors[0].id, 1);
  EXPECT_EQ(atlas.chart(1).neighbors[0].id, 0);
  EXPECT_TRUE(atlas.chart(2).neighbors.empty());
  // Non-neighbors place no half-space on each other.
  const ChartCoords toward(-2.0 * p.R, 0, 0);
  EXPECT_TRUE(within_cell(atlas.chart(0), toward));
}

TEST(Atlas, FirstChartHasNoNeighbors) {
  Atlas atlas;
  atlas.add_chart(straight(), StaticsModel{});
  EXPECT_TRUE(atlas.chart(0).neighbors.empty());
  EXPECT_THROW(atlas.add_chart(at_tau({0, 0, 0.05}), StaticsModel{}), ChartCreationFailed);
}

TEST(Atlas, MidplaneSplitsCells) {
  AtlasParams p;
  Atlas atlas(p);
  atlas.add_chart(at_tau({0, 0, 0.05}), actuation_only_basis());
  atlas.add_chart(at_tau({p.R, 0, 0.05}), actuation_only_basis());
  for (double delta : {-1e-6, 1e-6, -0.5, 0.5}) {
    const AmbientVector x = at_tau({0.5 * p.R + delta, 0, 0.05}).ambient();
    int containing = 0;
    for (int c = 0; c < 2; ++c) {
      const Chart& ch = atlas.chart(c);
      containing += chart_contains(ch, to_chart_coords(ch, x), x, p) ? 1 : 0;
    }
    EXPECT_EQ(containing, 1) << "delta " << delta;
    EXPECT_EQ(atlas.covering_chart(0, x), delta < 0 ? 0 : 1);
  }
  const AmbientVector mid = at_tau({0.5 * p.R, 0, 0.05}).ambient();
  EXPECT_EQ(atlas.covering_chart(0, mid), 0);
  EXPECT_EQ(atlas.covering_chart(1, mid), 1);
}

TEST(SelectChart, SingleChartAlwaysChosen) {
  Atlas atlas;
  atlas.add_chart(at_tau({0, 0, 0.05}), actuation_only_basis());
  std::mt19937_64 rng(32);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(atlas.select_chart(rng), 0);
  EXPECT_EQ(atlas.chart(0).sample_count, 10);
}

TEST(SelectChart, WeightsFollowCountGaps) {
  std::mt19937_64 rng(33);
  // After one pick the other chart holds the whole gap weight.
  for (int t = 0; t < 100; ++t) {
    Atlas atlas;
    atlas.add_chart(at_tau({0, 0, 0.05}), actuation_only_basis());
    atlas.add_chart(at_tau({50, 0, 0.05}), actuation_only_basis());
    const int first = atlas.select_chart(rng);
    EXPECT_EQ(atlas.select_chart(rng), 1 - first);
  }
}

TEST(SelectChart, TieIsUniformAndCountsAddUp) {
  std::mt19937_64 rng(34);
  int hits[3] = {0, 0, 0};
  const int trials = 30000;
  for (int t = 0; t < trials; ++t) {
    Atlas atlas;
    for (int i = 0; i < 3; ++i) atlas.add_chart(at_tau({50.0 * i, 0, 0.05}), actuation_only_basis());
    ++hits[atlas.select_chart(rng)];
  }
  for (int h : hits) EXPECT_NEAR(h / double(trials), 1.0 / 3.0, 0.015);

  Atlas atlas;
  for (int i = 0; i < 4; ++i) atlas.add_chart(at_tau({50.0 * i, 0, 0.05}), actuation_only_basis());
  for (int t = 0; t < 500; ++t) atlas.select_chart(rng);
  int sum = 0;
  for (int i = 0; i < atlas.size(); ++i) sum += atlas.chart(i).sample_count;
  EXPECT_EQ(sum, atlas.total_selections());
  EXPECT_EQ(sum, 500);
}
