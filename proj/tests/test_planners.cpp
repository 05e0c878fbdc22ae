#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "crplan/errors.hpp"
#include "crplan/planners.hpp"

using namespace crplan;

namespace {

ManifoldPoint solved(const Actuation& tau, const StaticsModel& m = {}) {
  const SolveResult r = solve_bvp(Wrench::Zero(), tau, m);
  EXPECT_TRUE(r.report.converged);
  return r.point;
}

PlanProblem free_problem() {
  PlanProblem p;
  p.start = solved({0, 0, 0.05});
  p.goal = solved({30, -20, 0.07});
  return p;
}

PlannerParams small_params(int budget, unsigned long seed) {
  PlannerParams pp;
  pp.node_budget = budget;
  pp.seed = seed;
  return pp;
}

std::string tree_dump(const PlanResult& r) {
  std::ostringstream os;
  os.precision(17);
  write_tree(os, r);
  return os.str();
}

void expect_valid_tree(const PlanResult& r, const StaticsModel& m) {
  ASSERT_FALSE(r.tree.empty());
  EXPECT_EQ(r.tree[0].parent, -1);
  EXPECT_EQ(r.tree[0].cost, 0.0);
  for (std::size_t i = 1; i < r.tree.size(); ++i) {
    const TreeNode& n = r.tree[i];
    ASSERT_GE(n.parent, 0);
    ASSERT_LT(n.parent, static_cast<int>(r.tree.size()));
    const TreeNode& p = r.tree[static_cast<std::size_t>(n.parent)];
    EXPECT_NEAR(n.cost, p.cost + tip_path_cost(p.x, n.x), 1e-12);
    EXPECT_LE(weighted_residual_norm(residual(n.x, m), 0.05), 1e-8);
  }
}

}  // namespace

TEST(Metric, DistanceExamples) {
  const MetricM M;
  AmbientVector a = AmbientVector::Zero(), b = AmbientVector::Zero();
  EXPECT_EQ(metric_distance(a, a, M), 0.0);
  b(8) = 1.0;
  EXPECT_DOUBLE_EQ(metric_distance(a, b, M), 100.0);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n;
  for (int i = 0; i < 20; ++i) {
    for (int k = 0; k < 9; ++k) {
      a(k) = n(rng);
      b(k) = n(rng);
    }
    EXPECT_DOUBLE_EQ(metric_distance(a, b, M), metric_distance(b, a, M));
  }
}

TEST(Variant, NamesRoundTrip) {
  for (Variant v : all_variants()) EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_THROW(parse_variant("rrt"), DomainError);
}

TEST(SampleOnAtlas, LengthBoundsAndDeterminism) {
  const StaticsModel m;
  PlannerParams pp;
  Atlas atlas(AtlasParams{pp.R, pp.epsilon, pp.metric});
  atlas.add_chart(solved({0, 0, 0.05}), m);
  const AmbientVector origin = atlas.chart(0).origin.ambient();
  std::mt19937_64 rng(42), rng2(42);
  Atlas twin = atlas;
  for (int i = 0; i < 1000; ++i) {
    const AtlasSample s = sample_on_atlas(atlas, pp, m.robot, rng);
    const double len = pp.metric.norm(s.x - origin);
    EXPECT_GE(len, 0.5 * pp.beta * pp.R - 1e-9);
    EXPECT_LE(len, pp.beta * pp.R + 1e-9);
    EXPECT_EQ(s.x, sample_on_atlas(twin, pp, m.robot, rng2).x);
  }
}

TEST(Steer, SmallStepStaysInChart) {
  const StaticsModel m;
  PlannerParams pp;
  Atlas atlas(AtlasParams{pp.R, pp.epsilon, pp.metric});
  TreeNode root;
  root.x = solved({0, 0, 0.05});
  root.chart = atlas.add_chart(root.x, m);
  const AmbientVector x_rand = to_ambient(atlas.chart(0), ChartCoords(4.0, 3.0, 0.0));
  const SteerOutcome o = steer(atlas, root, x_rand, 0, 1.0, m, pp);
  ASSERT_TRUE(o.accepted);
  EXPECT_FALSE(o.new_chart);
  EXPECT_EQ(o.chart, 0);
  EXPECT_EQ(atlas.size(), 1);
}

TEST(Steer, LongStepCreatesChart) {
  const StaticsModel m;
  PlannerParams pp;
  Atlas atlas(AtlasParams{pp.R, pp.epsilon, pp.metric});
  TreeNode root;
  root.x = solved({0, 0, 0.05});
  root.chart = atlas.add_chart(root.x, m);
  const AmbientVector x_rand = to_ambient(atlas.chart(0), ChartCoords(0.9 * pp.beta * pp.R, 0.0, 0.0));
  const SteerOutcome o = steer(atlas, root, x_rand, 0, 0.9, m, pp);
  ASSERT_TRUE(o.accepted);
  EXPECT_TRUE(o.new_chart);
  EXPECT_EQ(atlas.size(), 2);
  EXPECT_EQ(o.chart, 1);
}

TEST(Steer, PointInNeighborCellIsReassigned) {
  const StaticsModel m;
  PlannerParams pp;
  Atlas atlas(AtlasParams{pp.R, pp.epsilon, pp.metric});
  TreeNode root;
  root.x = solved({0, 0, 0.05});
  root.chart = atlas.add_chart(root.x, m);
  atlas.add_chart(solved({8, 0, 0.05}), m);
  ASSERT_EQ(atlas.chart(0).neighbors.size(), 1u);
  // Step toward the second origin, past the midplane but inside both radii.
  const AmbientVector x_rand = to_ambient(atlas.chart(0), ChartCoords(6.0, 0.0, 0.0));
  const SteerOutcome o = steer(atlas, root, x_rand, 0, 1.0, m, pp);
  ASSERT_TRUE(o.accepted);
  EXPECT_FALSE(o.new_chart);
  EXPECT_EQ(o.chart, 1);
  EXPECT_EQ(atlas.size(), 2);
}

TEST(Edge, IdenticalEndpoints) {
  const StaticsModel m;
  const ManifoldPoint a = solved({10, 0, 0.05});
  EXPECT_TRUE(edge_collision_free(a, a, m, PlannerParams{}));
}

TEST(Edge, FreeSpaceEdgeIsValid) {
  const StaticsModel m;
  EXPECT_TRUE(edge_collision_free(solved({10, 0, 0.05}), solved({20, 5, 0.06}), m, PlannerParams{}));
}

TEST(Edge, BallBetweenEndpointsBlocks) {
  StaticsModel m;
  SphereField s;
  s.center = {0, 0, 0.06};
  s.r_solid = 0.004;
  s.r_field = 0.006;
  s.k = 1.0;
  m.scene.obstacles.push_back(s);
  const ManifoldPoint a = solved({40, 0, 0.07}, m), b = solved({-40, 0, 0.07}, m);
  ASSERT_FALSE(in_collision(m.scene, *a.cfg, m.robot.r_backbone));
  ASSERT_FALSE(in_collision(m.scene, *b.cfg, m.robot.r_backbone));
  EXPECT_FALSE(edge_collision_free(a, b, m, PlannerParams{}));
  // Endpoint-only checking misses the obstacle.
  PlannerParams unsafe;
  unsafe.edge_resolution = 0;
  unsafe.edge_deviation = 1e9;
  EXPECT_TRUE(edge_collision_free(a, b, m, unsafe));
}

TEST(Edge, RejectsJumpBetweenBranches) {
  // Same actuation, different equilibria: continuation cannot land on b.
  StaticsModel m;
  const ManifoldPoint a = solved({0, 0, 0.05}, m);
  ManifoldPoint b = a;
  b.lambda(0) += 0.1;
  EXPECT_FALSE(edge_collision_free(a, b, m, PlannerParams{}));
}

TEST(TipCost, Examples) {
  const ManifoldPoint a = solved({0, 0, 0.05}), b = solved({0, 0, 0.06});
  EXPECT_EQ(tip_path_cost(a, a), 0.0);
  EXPECT_NEAR(tip_path_cost(a, b), 0.01, 1e-14);
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> t(-60, 60), l(0.03, 0.09);
  for (int i = 0; i < 10; ++i) {
    const ManifoldPoint x = solved({t(rng), t(rng), l(rng)}), y = solved({t(rng), t(rng), l(rng)}),
                        z = solved({t(rng), t(rng), l(rng)});
    EXPECT_LE(tip_path_cost(x, z), tip_path_cost(x, y) + tip_path_cost(y, z) + 1e-15);
  }
}

TEST(Plan, GoalEqualsStart) {
  PlanProblem p = free_problem();
  p.goal = p.start;
  for (Variant v : all_variants()) {
    const PlanResult r = plan(v, p, small_params(5, 1));
    EXPECT_TRUE(r.found);
    EXPECT_EQ(r.cost, 0.0);
    EXPECT_EQ(r.samples_before_path, 0);
  }
}

TEST(Plan, RequiresSolvedEndpoints) {
  PlanProblem p = free_problem();
  p.start.converged = false;
  EXPECT_THROW(plan(Variant::AtlasRRTStar, p, small_params(5, 1)), DomainError);
}

TEST(Plan, TreesAreValidAndDeterministic) {
  const PlanProblem p = free_problem();
  for (Variant v : all_variants()) {
    const PlanResult a = plan(v, p, small_params(40, 7));
    const PlanResult b = plan(v, p, small_params(40, 7));
    expect_valid_tree(a, p.model);
    EXPECT_EQ(tree_dump(a), tree_dump(b)) << variant_name(v);
    EXPECT_EQ(a.samples_drawn, b.samples_drawn);
    for (const TreeNode& n : a.tree) {
      EXPECT_EQ(stability_rank(n.x, p.model).rank, 6);
    }
    if (v == Variant::AtlasRRTStar) {
      ASSERT_TRUE(a.atlas);
      for (std::size_t i = 1; i < a.tree.size(); ++i) EXPECT_GE(a.tree[i].chart, 0);
    }
  }
}

TEST(Plan, FreeSpaceFindsGoal) {
  const PlanProblem p = free_problem();
  for (Variant v : all_variants()) {
    const PlanResult r = plan(v, p, small_params(150, 3));
    EXPECT_TRUE(r.found) << variant_name(v);
    if (!r.found) continue;
    EXPECT_EQ(r.path.front(), 0);
    EXPECT_LE(metric_distance(r.tree[static_cast<std::size_t>(r.path.back())].x.ambient(),
                              p.goal.ambient(), PlannerParams{}.metric),
              PlannerParams{}.goal_tolerance);
    // Consecutive path nodes are joined by valid edges.
    for (std::size_t k = 1; k < r.path.size(); ++k) {
      EXPECT_TRUE(edge_collision_free(r.tree[static_cast<std::size_t>(r.path[k - 1])].x,
                                      r.tree[static_cast<std::size_t>(r.path[k])].x, p.model,
                                      PlannerParams{}));
    }
  }
}

TEST(Plan, RewiringLeavesNoCheaperFeasibleParent) {
  const PlanProblem p = free_problem();
  const PlannerParams pp = small_params(40, 11);
  const PlanResult r = plan(Variant::RRTStarLambdaTau, p, pp);
  // Brute force: for each node, no tree node among its k_near nearest
  // offers a strictly cheaper feasible connection. In free space all edges
  // between stable points on the unique branch are feasible.
  for (std::size_t v = 1; v < r.tree.size(); ++v) {
    std::vector<std::pair<double, std::size_t>> by_distance;
    for (std::size_t u = 0; u < r.tree.size(); ++u) {
      if (u == v) continue;
      by_distance.emplace_back(pp.metric.norm(r.tree[u].x.ambient() - r.tree[v].x.ambient()), u);
    }
    std::sort(by_distance.begin(), by_distance.end());
    by_distance.resize(std::min<std::size_t>(by_distance.size(), static_cast<std::size_t>(pp.k_near)));
    for (const auto& [d, u] : by_distance) {
      const double via = r.tree[u].cost + tip_path_cost(r.tree[u].x, r.tree[v].x);
      if (via < r.tree[v].cost - 1e-9) {
        EXPECT_FALSE(edge_collision_free(r.tree[u].x, r.tree[v].x, p.model, pp))
            << "node " << v << " could attach to " << u;
      }
    }
  }
}
