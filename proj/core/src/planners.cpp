#include "crplan/planners.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <ostream>

#include <Eigen/LU>
#include <spdlog/spdlog.h>

#include "crplan/errors.hpp"

namespace crplan {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::AtlasRRTStar: return "atlas-rrt*";
    case Variant::RRTStarTau: return "rrt*-tau";
    case Variant::RRTStarLambdaTau: return "rrt*-lambda-tau";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : all_variants()) {
    if (variant_name(v) == name) return v;
  }
  throw DomainError("unknown planner variant '" + name + "'");
}

std::vector<Variant> all_variants() {
  return {Variant::AtlasRRTStar, Variant::RRTStarTau, Variant::RRTStarLambdaTau};
}

void PlannerParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw DomainError(std::string("planner parameter ") + name + " must be positive");
  };
  positive(R, "R");
  positive(epsilon, "epsilon");
  positive(beta, "beta");
  positive(extension_lambda_tau, "extension_lambda_tau");
  positive(extension_tau, "extension_tau");
  positive(goal_tolerance, "goal_tolerance");
  positive(lambda_box_moment, "lambda_box_moment");
  positive(lambda_box_force, "lambda_box_force");
  positive(edge_deviation, "edge_deviation");
  positive(edge_endpoint_tol, "edge_endpoint_tol");
  if (node_budget < 1) throw DomainError("planner parameter node_budget must be at least 1");
  if (max_samples < 1) throw DomainError("planner parameter max_samples must be at least 1");
  if (k_near < 1) throw DomainError("planner parameter k_near must be at least 1");
  if (edge_resolution < 0) throw DomainError("planner parameter edge_resolution must be >= 0");
  if (goal_bias < 0.0 || goal_bias > 1.0) throw DomainError("planner parameter goal_bias must lie in [0, 1]");
  if (sigma_floor < 0.0) throw DomainError("planner parameter sigma_floor must be >= 0");
  if ((metric.weights.array() <= 0.0).any()) throw DomainError("metric weights must be positive");
}

double tip_path_cost(const ManifoldPoint& a, const ManifoldPoint& b) {
  if (!a.cfg || !b.cfg) throw DomainError("tip_path_cost needs solved configurations");
  return (a.cfg->tip().p - b.cfg->tip().p).norm();
}

namespace {

constexpr double kMinStepFraction = 0.05;

Actuation clip_actuation(const Actuation& tau, const RobotParams& robot) {
  return tau.cwiseMax(actuation_lower(robot)).cwiseMin(actuation_upper(robot));
}

// Largest step from `from` towards `to` along the segment that keeps the
// actuation inside its box (`from` is assumed inside).
AmbientVector shrink_into_box(const AmbientVector& from, const AmbientVector& to,
                              const RobotParams& robot) {
  const Actuation lo = actuation_lower(robot), hi = actuation_upper(robot);
  double t = 1.0;
  for (int i = 0; i < kActuationDim; ++i) {
    const double a = from(6 + i), b = to(6 + i);
    if (b > hi(i)) t = std::min(t, (hi(i) - a) / (b - a));
    if (b < lo(i)) t = std::min(t, (lo(i) - a) / (b - a));
  }
  AmbientVector x = from + std::max(t, 0.0) * (to - from);
  x.tail<kActuationDim>() = clip_actuation(x.tail<kActuationDim>(), robot);
  return x;
}

bool acceptable(const SolveResult& r, const StaticsModel& model, const PlannerParams& params) {
  if (!r.report.converged || !r.point.cfg) return false;
  if (!params.allow_marginal) {
    if (r.report.rank_F_lambda < 6) return false;
    if (!(r.report.sigma_min > params.sigma_floor * r.report.sigma_max)) return false;
  }
  return !in_collision(model.scene, *r.point.cfg, model.robot.r_backbone);
}

SolveResult try_solve(const Wrench& guess, const Actuation& tau, const StaticsModel& model,
                      const ShootingOptions& options) {
  try {
    return solve_bvp(guess, tau, model, options);
  } catch (const Error&) {
    SolveResult failed;
    failed.point.lambda = guess;
    failed.point.tau = tau;
    return failed;
  }
}

}  // namespace

std::optional<ManifoldPoint> follow_branch(const ManifoldPoint& a, const Actuation& tau,
                                           const StaticsModel& model, const PlannerParams& params,
                                           const ShootingOptions& options) {
  const Actuation dtau = (tau - a.tau) / (params.edge_resolution + 1);
  // Natural-parameter continuation in tau. The first predictor uses the
  // tangent at a when its Jacobian is cached, later ones the secant.
  ShootingOptions rank_only = options;
  rank_only.full_jacobian = false;
  ManifoldPoint current = a;
  Wrench slope = Wrench::Zero();
  if (a.jac) slope = -a.jac->leftCols<6>().fullPivLu().solve(a.jac->rightCols<kActuationDim>() * dtau);
  for (int k = 1; k <= params.edge_resolution + 1; ++k) {
    const Actuation tau_k = k == params.edge_resolution + 1 ? tau : Actuation(a.tau + k * dtau);
    const Wrench predicted = current.lambda + slope;
    const SolveResult r = try_solve(predicted, tau_k, model, k == params.edge_resolution + 1 ? options : rank_only);
    if (!acceptable(r, model, params)) return std::nullopt;
    AmbientVector correction = AmbientVector::Zero();
    correction.head<6>() = r.point.lambda - predicted;
    if (params.metric.norm(correction) > params.edge_deviation) return std::nullopt;
    slope = r.point.lambda - current.lambda;
    current = r.point;
  }
  return current;
}

bool edge_collision_free(const ManifoldPoint& a, const ManifoldPoint& b, const StaticsModel& model,
                         const PlannerParams& params, const ShootingOptions& options) {
  const AmbientVector xb = b.ambient();
  if (a.ambient() == xb) return true;
  const std::optional<ManifoldPoint> end = follow_branch(a, b.tau, model, params, options);
  return end && params.metric.norm(end->ambient() - xb) <= params.edge_endpoint_tol;
}

AtlasSample sample_on_atlas(Atlas& atlas, const PlannerParams& params, const RobotParams& /*robot*/,
                            std::mt19937_64& rng) {
  AtlasSample s;
  s.chart = atlas.select_chart(rng);
  const Chart& c = atlas.chart(s.chart);
  std::normal_distribution<double> normal;
  // Direction is uniform after scaling by the actuation weights so that no
  // single actuation coordinate dominates the metric length.
  ChartCoords y;
  do {
    for (int i = 0; i < kActuationDim; ++i) y(i) = normal(rng);
  } while (y.norm() == 0.0);
  y = y.cwiseQuotient(params.metric.weights.tail<kActuationDim>().cwiseSqrt());
  s.delta = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
  const double length = params.metric.norm(c.Phi * y);
  y *= s.delta * params.beta * params.R / length;
  s.x = to_ambient(c, y);
  return s;
}

SteerOutcome steer(Atlas& atlas, const TreeNode& near, const AmbientVector& x_rand, int rand_chart,
                   double delta, const StaticsModel& model, const PlannerParams& params,
                   const ShootingOptions& options) {
  SteerOutcome out;
  int c = rand_chart;
  AmbientVector target = x_rand;
  const AmbientVector x_near = near.x.ambient();
  if (c != near.chart) {
    c = near.chart;
    const Chart& chart = atlas.chart(c);
    // Tangent displacement from x_near, not from the chart origin.
    const AmbientVector dir = chart.Phi * (chart.pinv * (x_rand - x_near));
    const double len = params.metric.norm(dir);
    if (len == 0.0) return out;
    // Never step past the re-projected target; stretching a short step out
    // to delta * beta * R overshoots nearby goals.
    target = x_near + std::min(delta * params.beta * params.R, len) * dir / len;
  }
  target = shrink_into_box(x_near, target, model.robot);
  // A step pinned against the actuation bounds adds nothing new.
  if (params.metric.norm(target - x_near) < kMinStepFraction * params.R) return out;

  // Projection onto the manifold follows the branch through x_near, so the
  // new node and its edge are validated together.
  const std::optional<ManifoldPoint> x_new =
      follow_branch(near.x, target.tail<kActuationDim>(), model, params, options);
  if (!x_new) return out;

  out.x_new = *x_new;
  const int covering = atlas.covering_chart(c, x_new->ambient());
  if (covering >= 0) {
    out.chart = covering;
  } else {
    try {
      out.chart = atlas.add_chart(*x_new, model, options);
      out.new_chart = true;
    } catch (const ChartCreationFailed&) {
      return out;
    }
  }
  out.accepted = true;
  return out;
}

namespace {

class Planner {
 public:
  Planner(Variant variant, const PlanProblem& problem, const PlannerParams& params)
      : variant_(variant), problem_(problem), params_(params), rng_(params.seed) {
    atlas_params_.R = params.R;
    atlas_params_.epsilon = params.epsilon;
    atlas_params_.metric = params.metric;
    options_.metric = params.metric;
  }

  PlanResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    PlanResult result;
    result.variant = variant_;
    result.seed = params_.seed;

    TreeNode root;
    root.x = problem_.start;
    if (variant_ == Variant::AtlasRRTStar) {
      atlas_.emplace(atlas_params_);
      root.chart = atlas_->add_chart(problem_.start, problem_.model, options_);
    }
    add_node(root);

    int samples = 0;
    while (static_cast<int>(tree_.size()) < params_.node_budget && samples < params_.max_samples) {
      ++samples;
      std::optional<Candidate> cand = extend();
      if (cand) insert(*cand);
    }

    result.samples_drawn = samples;
    result.samples_before_path = first_path_nodes_;
    result.tree = tree_;
    finalize_path(result);
    if (atlas_) result.atlas = std::move(atlas_);
    result.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::info("{} seed {}: nodes={} samples={} found={} cost={:.4f} time={:.2f}s",
                 variant_name(variant_), params_.seed, tree_.size(), samples, result.found,
                 result.cost, result.time_s);
    return result;
  }

 private:
  struct Candidate {
    ManifoldPoint x;
    int near = -1;
    int chart = -1;
  };

  double distance(const ManifoldPoint& a, const ManifoldPoint& b) const {
    if (variant_ == Variant::RRTStarTau) return params_.metric.actuation_norm(a.tau - b.tau);
    return params_.metric.norm(a.ambient() - b.ambient());
  }

  double distance(const ManifoldPoint& a, const AmbientVector& x) const {
    return distance(a, ManifoldPoint::from_ambient(x));
  }

  int nearest(const AmbientVector& x) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(tree_.size()); ++i) {
      const double d = distance(tree_[static_cast<std::size_t>(i)].x, x);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  std::vector<int> k_nearest(const ManifoldPoint& x, int k) const {
    std::vector<int> ids(tree_.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<double> d(tree_.size());
    for (std::size_t i = 0; i < tree_.size(); ++i) d[i] = distance(tree_[i].x, x);
    const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), ids.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<long>(kk), ids.end(),
                      [&d](int a, int b) {
                        return d[static_cast<std::size_t>(a)] < d[static_cast<std::size_t>(b)] ||
                               (d[static_cast<std::size_t>(a)] == d[static_cast<std::size_t>(b)] && a < b);
                      });
    ids.resize(kk);
    return ids;
  }

  bool goal_sample() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < params_.goal_bias;
  }

  std::optional<Candidate> extend() {
    switch (variant_) {
      case Variant::AtlasRRTStar: return extend_atlas();
      case Variant::RRTStarTau: return extend_tau();
      case Variant::RRTStarLambdaTau: return extend_lambda_tau();
    }
    return std::nullopt;
  }

  std::optional<Candidate> extend_atlas() {
    AmbientVector x_rand;
    int chart = -1;
    double delta;
    if (goal_sample()) {
      x_rand = problem_.goal.ambient();
      delta = std::uniform_real_distribution<double>(0.5, 1.0)(rng_);
    } else {
      const AtlasSample s = sample_on_atlas(*atlas_, params_, problem_.model.robot, rng_);
      x_rand = s.x;
      chart = s.chart;
      delta = s.delta;
    }
    const int near = nearest(x_rand);
    const SteerOutcome o = steer(*atlas_, tree_[static_cast<std::size_t>(near)], x_rand, chart,
                                 delta, problem_.model, params_, options_);
    if (!o.accepted) return std::nullopt;
    return Candidate{o.x_new, near, o.chart};
  }

  std::optional<Candidate> extend_tau() {
    const RobotParams& robot = problem_.model.robot;
    Actuation tau_rand;
    if (goal_sample()) {
      tau_rand = problem_.goal.tau;
    } else {
      const Actuation lo = actuation_lower(robot), hi = actuation_upper(robot);
      for (int i = 0; i < kActuationDim; ++i) {
        tau_rand(i) = std::uniform_real_distribution<double>(lo(i), hi(i))(rng_);
      }
    }
    AmbientVector x_rand;
    x_rand << problem_.start.lambda, tau_rand;
    const int near = nearest(x_rand);
    const Actuation& tau_near = tree_[static_cast<std::size_t>(near)].x.tau;
    Actuation step = tau_rand - tau_near;
    const double len = params_.metric.actuation_norm(step);
    if (len > params_.extension_tau) step *= params_.extension_tau / len;
    return finish_baseline(problem_.start.lambda, clip_actuation(tau_near + step, robot), near);
  }

  std::optional<Candidate> extend_lambda_tau() {
    const RobotParams& robot = problem_.model.robot;
    AmbientVector x_rand;
    if (goal_sample()) {
      x_rand = problem_.goal.ambient();
    } else {
      const Actuation lo = actuation_lower(robot), hi = actuation_upper(robot);
      for (int i = 0; i < 6; ++i) {
        const double b = i < 3 ? params_.lambda_box_moment : params_.lambda_box_force;
        x_rand(i) = std::uniform_real_distribution<double>(-b, b)(rng_);
      }
      for (int i = 0; i < kActuationDim; ++i) {
        x_rand(6 + i) = std::uniform_real_distribution<double>(lo(i), hi(i))(rng_);
      }
    }
    const int near = nearest(x_rand);
    const AmbientVector x_near = tree_[static_cast<std::size_t>(near)].x.ambient();
    AmbientVector step = x_rand - x_near;
    const double len = params_.metric.norm(step);
    if (len > params_.extension_lambda_tau) step *= params_.extension_lambda_tau / len;
    const AmbientVector guess = x_near + step;
    return finish_baseline(guess.head<6>(), clip_actuation(guess.tail<kActuationDim>(), robot), near);
  }

  std::optional<Candidate> finish_baseline(const Wrench& guess, const Actuation& tau, int near) {
    const SolveResult r = try_solve(guess, tau, problem_.model, options_);
    if (!acceptable(r, problem_.model, params_)) return std::nullopt;
    if (!edge_collision_free(tree_[static_cast<std::size_t>(near)].x, r.point, problem_.model,
                             params_, options_)) {
      return std::nullopt;
    }
    return Candidate{r.point, near, -1};
  }

  int add_node(const TreeNode& node) {
    tree_.push_back(node);
    children_.emplace_back();
    const int id = static_cast<int>(tree_.size()) - 1;
    if (node.parent >= 0) children_[static_cast<std::size_t>(node.parent)].push_back(id);
    // Goal test always uses the full metric, including for rrt*-tau.
    if (metric_distance(node.x.ambient(), problem_.goal.ambient(), params_.metric) <=
        params_.goal_tolerance) {
      goal_nodes_.push_back(id);
      if (first_path_nodes_ < 0) first_path_nodes_ = id;
    }
    return id;
  }

  void insert(const Candidate& cand) {
    const std::vector<int> near_set = k_nearest(cand.x, params_.k_near);

    // Choose parent: cheapest candidate whose edge is feasible. The edge from
    // the extension's nearest node has already been checked.
    std::vector<std::pair<double, int>> options;
    options.emplace_back(cost_via(cand.near, cand.x), cand.near);
    for (int id : near_set) {
      if (id != cand.near) options.emplace_back(cost_via(id, cand.x), id);
    }
    std::sort(options.begin(), options.end());
    TreeNode node;
    node.x = cand.x;
    node.chart = cand.chart;
    // Edges that failed here fail in reverse too; rewiring skips them.
    std::vector<int> failed;
    for (const auto& [cost, id] : options) {
      if (id == cand.near || edge_collision_free(tree_[static_cast<std::size_t>(id)].x, cand.x,
                                                 problem_.model, params_, options_)) {
        node.parent = id;
        node.cost = cost;
        break;
      }
      failed.push_back(id);
    }
    const int new_id = add_node(node);

    for (int id : near_set) {
      if (id == node.parent || std::find(failed.begin(), failed.end(), id) != failed.end()) continue;
      TreeNode& other = tree_[static_cast<std::size_t>(id)];
      const double via_new = node.cost + tip_path_cost(node.x, other.x);
      if (via_new >= other.cost) continue;
      if (!edge_collision_free(node.x, other.x, problem_.model, params_, options_)) continue;
      reparent(id, new_id, via_new);
    }
  }

  double cost_via(int parent, const ManifoldPoint& x) const {
    const TreeNode& p = tree_[static_cast<std::size_t>(parent)];
    return p.cost + tip_path_cost(p.x, x);
  }

  void reparent(int id, int new_parent, double new_cost) {
    auto& old_children = children_[static_cast<std::size_t>(tree_[static_cast<std::size_t>(id)].parent)];
    old_children.erase(std::remove(old_children.begin(), old_children.end(), id), old_children.end());
    tree_[static_cast<std::size_t>(id)].parent = new_parent;
    children_[static_cast<std::size_t>(new_parent)].push_back(id);
    const double shift = new_cost - tree_[static_cast<std::size_t>(id)].cost;
    std::vector<int> stack{id};
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      tree_[static_cast<std::size_t>(n)].cost += shift;
      for (int ch : children_[static_cast<std::size_t>(n)]) stack.push_back(ch);
    }
  }

  void finalize_path(PlanResult& result) const {
    int best = -1;
    for (int id : goal_nodes_) {
      if (best < 0 || tree_[static_cast<std::size_t>(id)].cost < tree_[static_cast<std::size_t>(best)].cost) {
        best = id;
      }
    }
    if (best < 0) return;
    result.found = true;
    result.cost = tree_[static_cast<std::size_t>(best)].cost;
    for (int n = best; n >= 0; n = tree_[static_cast<std::size_t>(n)].parent) result.path.push_back(n);
    std::reverse(result.path.begin(), result.path.end());
  }

  Variant variant_;
  const PlanProblem& problem_;
  PlannerParams params_;
  AtlasParams atlas_params_;
  ShootingOptions options_;
  std::mt19937_64 rng_;
  std::optional<Atlas> atlas_;
  std::vector<TreeNode> tree_;
  std::vector<std::vector<int>> children_;
  std::vector<int> goal_nodes_;
  int first_path_nodes_ = -1;
};

}  // namespace

PlanResult plan(Variant variant, const PlanProblem& problem, const PlannerParams& params) {
  params.validate();
  if (!problem.start.converged || !problem.start.cfg) {
    throw DomainError("plan needs a solved start point");
  }
  if (!problem.goal.converged || !problem.goal.cfg) {
    throw DomainError("plan needs a solved goal point");
  }
  return Planner(variant, problem, params).run();
}

void write_tree(std::ostream& os, const PlanResult& result) {
  os << "# id parent cost_m chart lambda(6) tau(3) tip(3)\n";
  for (std::size_t i = 0; i < result.tree.size(); ++i) {
    const TreeNode& n = result.tree[i];
    os << i << ' ' << n.parent << ' ' << n.cost << ' ' << n.chart;
    const AmbientVector x = n.x.ambient();
    for (int k = 0; k < kAmbientDim; ++k) os << ' ' << x(k);
    const Eigen::Vector3d tip = n.x.cfg ? n.x.cfg->tip().p : Eigen::Vector3d::Zero();
    os << ' ' << tip(0) << ' ' << tip(1) << ' ' << tip(2) << '\n';
  }
}

void write_path(std::ostream& os, const PlanResult& result) {
  for (std::size_t k = 0; k < result.path.size(); ++k) {
    const TreeNode& n = result.tree[static_cast<std::size_t>(result.path[k])];
    os << "# node " << result.path[k] << " step " << k << " cost_m " << n.cost << '\n';
    if (n.x.cfg) write_configuration(os, *n.x.cfg);
  }
}

}  // namespace crplan
