#pragma once

#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "crplan/atlas.hpp"
#include "crplan/metric.hpp"
#include "crplan/shooting.hpp"

namespace crplan {

enum class Variant { AtlasRRTStar, RRTStarTau, RRTStarLambdaTau };

/// "atlas-rrt*", "rrt*-tau", "rrt*-lambda-tau".
std::string variant_name(Variant v);
/// Inverse of variant_name; throws DomainError on unknown names.
Variant parse_variant(const std::string& name);
std::vector<Variant> all_variants();

struct PlannerParams {
  // Atlas parameters.
  double R = 10.0;
  double epsilon = 5.0;
  double beta = 5.0;
  // Baseline extension distances (metric units; tau block only for rrt*-tau).
  double extension_lambda_tau = 20.0;
  double extension_tau = 7.0;

  int node_budget = 300;
  /// Hard cap on drawn samples so a planner that stops growing still ends.
  int max_samples = 3000;
  int k_near = 10;
  double goal_tolerance = 5.0;
  double goal_bias = 0.05;
  unsigned long seed = 0;

  /// Intermediate continuation steps per edge.
  int edge_resolution = 5;
  /// Max metric distance between a continuation step and its predictor.
  /// Larger corrections mean the solver jumped branches.
  double edge_deviation = 5.0;
  /// The continuation must end this close to the edge target (metric units).
  double edge_endpoint_tol = 0.1;

  /// Sampling box for rrt*-lambda-tau.
  double lambda_box_moment = 2.0;
  double lambda_box_force = 20.0;

  /// Reject nodes with sigma_min <= sigma_floor * sigma_max.
  double sigma_floor = 1e-4;
  /// Accept rank-deficient (marginally stable) nodes.
  bool allow_marginal = false;

  MetricM metric;

  void validate() const;
};

struct TreeNode {
  ManifoldPoint x;
  int parent = -1;
  double cost = 0.0;  // tip path length from the root (m)
  int chart = -1;     // atlas-rrt* only
};

struct PlanResult {
  Variant variant = Variant::AtlasRRTStar;
  unsigned long seed = 0;
  std::vector<TreeNode> tree;
  /// Node ids from the root to the best goal node; empty when no path.
  std::vector<int> path;
  bool found = false;
  double cost = 0.0;  // m
  /// Tree nodes added before the first goal node (0 when start is the goal).
  int samples_before_path = -1;
  int samples_drawn = 0;
  double time_s = 0.0;
  std::optional<Atlas> atlas;
};

struct PlanProblem {
  StaticsModel model;
  ManifoldPoint start;  // solved, with cached Configuration and Jacobian
  ManifoldPoint goal;
};

/// Tip chord between two solved points (m).
double tip_path_cost(const ManifoldPoint& a, const ManifoldPoint& b);

/// Follows the equilibrium branch through a to actuation tau by continuation
/// with edge_resolution intermediate steps. Every step must converge, stay
/// stable and collision-free, and stay within edge_deviation of its
/// predictor. Returns the solved endpoint, or nullopt.
std::optional<ManifoldPoint> follow_branch(const ManifoldPoint& a, const Actuation& tau,
                                           const StaticsModel& model, const PlannerParams& params,
                                           const ShootingOptions& options = {});

/// Follows the equilibrium from a to b by continuation in tau with
/// edge_resolution intermediate steps. Every step must converge, stay stable
/// and collision-free, and stay within edge_deviation of its predictor. The
/// last step must land on b, so edges between different branches at the same
/// actuation are rejected.
bool edge_collision_free(const ManifoldPoint& a, const ManifoldPoint& b, const StaticsModel& model,
                         const PlannerParams& params, const ShootingOptions& options = {});

/// Random point in the tangent space of the selected chart at metric length
/// delta * beta * R, delta ~ U[0.5, 1]. Actuation coordinates are clipped
/// to the admissible box afterwards.
struct AtlasSample {
  int chart = -1;
  AmbientVector x = AmbientVector::Zero();
  double delta = 1.0;
};
AtlasSample sample_on_atlas(Atlas& atlas, const PlannerParams& params, const RobotParams& robot,
                            std::mt19937_64& rng);

/// Outcome of one atlas STEER call.
struct SteerOutcome {
  bool accepted = false;
  ManifoldPoint x_new;
  int chart = -1;
  bool new_chart = false;
};

/// Chart-based steering towards x_rand from tree node `near`.
/// rand_chart is the chart x_rand was drawn from, or -1 (goal bias).
SteerOutcome steer(Atlas& atlas, const TreeNode& near, const AmbientVector& x_rand, int rand_chart,
                   double delta, const StaticsModel& model, const PlannerParams& params,
                   const ShootingOptions& options = {});

/// Runs one planner to the node budget (or max_samples).
PlanResult plan(Variant variant, const PlanProblem& problem, const PlannerParams& params);

/// Tree dump: id parent cost chart lambda(6) tau(3) tip(3), one node per line.
void write_tree(std::ostream& os, const PlanResult& result);
/// Path dump: each node as a '# node' header followed by its Configuration.
void write_path(std::ostream& os, const PlanResult& result);

}  // namespace crplan
