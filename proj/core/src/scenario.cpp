#include "crplan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "crplan/errors.hpp"
#include "crplan/potentials.hpp"

namespace crplan {

namespace {

using nlohmann::json;

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void require_object(const json& j, const std::string& field) {
  if (!j.is_object()) throw SchemaError(field.empty() ? "<root>" : field, "expected an object");
}

void reject_unknown(const json& j, const std::string& prefix, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw SchemaError(join(prefix, key), "unknown key");
  }
}

const json& required(const json& j, const std::string& prefix, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(join(prefix, key), "missing required field");
  return *it;
}

double as_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw SchemaError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(field, "must be finite");
  return v;
}

double positive_number(const json& j, const std::string& field) {
  const double v = as_number(j, field);
  if (!(v > 0.0)) throw SchemaError(field, "must be positive");
  return v;
}

int as_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw SchemaError(field, "expected an integer");
  return j.get<int>();
}

template <int N>
Eigen::Matrix<double, N, 1> as_vector(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
    throw SchemaError(field, "expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    v(i) = as_number(j[static_cast<std::size_t>(i)], field + "[" + std::to_string(i) + "]");
  }
  return v;
}

// Optional scalar: assigns only when the key exists.
void maybe(const json& j, const std::string& prefix, const char* key, double& out) {
  if (const auto it = j.find(key); it != j.end()) out = as_number(*it, join(prefix, key));
}
void maybe(const json& j, const std::string& prefix, const char* key, int& out) {
  if (const auto it = j.find(key); it != j.end()) out = as_int(*it, join(prefix, key));
}
void maybe(const json& j, const std::string& prefix, const char* key, bool& out) {
  if (const auto it = j.find(key); it != j.end()) {
    if (!it->is_boolean()) throw SchemaError(join(prefix, key), "expected true or false");
    out = it->get<bool>();
  }
}

void parse_robot(const json& j, StaticsModel& model) {
  const std::string p = "robot";
  require_object(j, p);
  reject_unknown(j, p,
                 {"E", "G", "r_backbone", "d_tendon", "tau_max", "l_min", "l_max",
                  "axial_tendon_load", "grid_size"});
  RobotParams& r = model.robot;
  maybe(j, p, "E", r.E);
  maybe(j, p, "G", r.G);
  maybe(j, p, "r_backbone", r.r_backbone);
  maybe(j, p, "d_tendon", r.d_tendon);
  maybe(j, p, "tau_max", r.tau_max);
  maybe(j, p, "l_min", r.l_min);
  maybe(j, p, "l_max", r.l_max);
  maybe(j, p, "axial_tendon_load", r.axial_tendon_load);
  maybe(j, p, "grid_size", model.grid_size);
  if (model.grid_size < 2) throw SchemaError("robot.grid_size", "must be at least 2");
  try {
    r.validate();
  } catch (const DomainError& e) {
    throw SchemaError(p, e.what());
  }
}

Obstacle parse_obstacle(const json& j, const std::string& p) {
  require_object(j, p);
  const json& type = required(j, p, "type");
  if (!type.is_string()) throw SchemaError(join(p, "type"), "expected \"sphere\" or \"capsule\"");
  const std::string t = type.get<std::string>();
  auto fill_field = [&](auto& o) {
    o.r_solid = positive_number(required(j, p, "r_solid"), join(p, "r_solid"));
    o.r_field = positive_number(required(j, p, "r_field"), join(p, "r_field"));
    o.k = positive_number(required(j, p, "k"), join(p, "k"));
    if (!(o.r_field > o.r_solid)) throw SchemaError(join(p, "r_field"), "must exceed r_solid");
  };
  if (t == "sphere") {
    reject_unknown(j, p, {"type", "center", "r_solid", "r_field", "k", "note"});
    SphereField s;
    s.center = as_vector<3>(required(j, p, "center"), join(p, "center"));
    fill_field(s);
    return s;
  }
  if (t == "capsule") {
    reject_unknown(j, p, {"type", "a", "b", "r_solid", "r_field", "k", "note"});
    CapsuleField c;
    c.a = as_vector<3>(required(j, p, "a"), join(p, "a"));
    c.b = as_vector<3>(required(j, p, "b"), join(p, "b"));
    if ((c.a - c.b).norm() == 0.0) throw SchemaError(join(p, "b"), "coincides with a");
    fill_field(c);
    return c;
  }
  throw SchemaError(join(p, "type"), "unknown obstacle type '" + t + "'");
}

void parse_scene(const json& j, Scene& scene) {
  const std::string p = "scene";
  require_object(j, p);
  reject_unknown(j, p, {"obstacles", "tip_force"});
  if (const auto it = j.find("obstacles"); it != j.end()) {
    if (!it->is_array()) throw SchemaError("scene.obstacles", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      scene.obstacles.push_back(parse_obstacle((*it)[i], "scene.obstacles[" + std::to_string(i) + "]"));
    }
  }
  if (const auto it = j.find("tip_force"); it != j.end()) {
    scene.tip.force = as_vector<3>(*it, "scene.tip_force");
  }
}

PointSpec parse_point(const json& j, const std::string& p, const RobotParams& robot) {
  require_object(j, p);
  reject_unknown(j, p, {"lambda", "tau", "evidence"});
  PointSpec spec;
  spec.lambda = as_vector<6>(required(j, p, "lambda"), join(p, "lambda"));
  spec.tau = as_vector<3>(required(j, p, "tau"), join(p, "tau"));
  try {
    check_actuation(spec.tau, robot);
  } catch (const DomainError& e) {
    throw SchemaError(join(p, "tau"), e.what());
  }
  return spec;
}

void parse_planner(const json& j, PlannerParams& pp) {
  const std::string p = "planner";
  require_object(j, p);
  reject_unknown(j, p,
                 {"R", "epsilon", "beta", "extension_lambda_tau", "extension_tau", "node_budget",
                  "max_samples", "k_near", "goal_tolerance", "goal_bias", "edge_resolution",
                  "edge_deviation", "edge_endpoint_tol", "lambda_box_moment", "lambda_box_force",
                  "sigma_floor", "allow_marginal", "metric"});
  maybe(j, p, "R", pp.R);
  maybe(j, p, "epsilon", pp.epsilon);
  maybe(j, p, "beta", pp.beta);
  maybe(j, p, "extension_lambda_tau", pp.extension_lambda_tau);
  maybe(j, p, "extension_tau", pp.extension_tau);
  maybe(j, p, "node_budget", pp.node_budget);
  maybe(j, p, "max_samples", pp.max_samples);
  maybe(j, p, "k_near", pp.k_near);
  maybe(j, p, "goal_tolerance", pp.goal_tolerance);
  maybe(j, p, "goal_bias", pp.goal_bias);
  maybe(j, p, "edge_resolution", pp.edge_resolution);
  maybe(j, p, "edge_deviation", pp.edge_deviation);
  maybe(j, p, "edge_endpoint_tol", pp.edge_endpoint_tol);
  maybe(j, p, "lambda_box_moment", pp.lambda_box_moment);
  maybe(j, p, "lambda_box_force", pp.lambda_box_force);
  maybe(j, p, "sigma_floor", pp.sigma_floor);
  maybe(j, p, "allow_marginal", pp.allow_marginal);
  if (const auto it = j.find("metric"); it != j.end()) {
    pp.metric.weights = as_vector<kAmbientDim>(*it, "planner.metric");
  }
  try {
    pp.validate();
  } catch (const DomainError& e) {
    throw SchemaError(p, e.what());
  }
}

SolvedEndpoint solve_endpoint(const PointSpec& spec, const char* which, const Scenario& s) {
  ShootingOptions options;
  options.metric = s.planner.metric;
  SolveResult r;
  try {
    r = solve_bvp(spec.lambda, spec.tau, s.model, options);
  } catch (const Error& e) {
    throw ValidationError(std::string(which) + ": shooting failed: " + e.what());
  }
  if (!r.report.converged || !r.point.cfg) {
    std::ostringstream msg;
    msg << which << ": shooting did not converge (|F| = " << r.report.residual_norm << ")";
    throw ValidationError(msg.str());
  }
  if (in_collision(s.model.scene, *r.point.cfg, s.model.robot.r_backbone)) {
    throw ValidationError(std::string(which) + ": configuration intersects a solid obstacle");
  }
  if (!s.planner.allow_marginal &&
      (r.report.rank_F_lambda < 6 ||
       !(r.report.sigma_min > s.planner.sigma_floor * r.report.sigma_max))) {
    std::ostringstream msg;
    msg << which << ": equilibrium is not stable (rank " << r.report.rank_F_lambda
        << ", sigma ratio " << r.report.sigma_min / r.report.sigma_max << ")";
    throw ValidationError(msg.str());
  }
  SolvedEndpoint out;
  out.point = r.point;
  out.report = r.report;
  AmbientVector d = AmbientVector::Zero();
  d.head<6>() = r.point.lambda - spec.lambda;
  out.guess_offset = s.planner.metric.norm(d);
  if (out.guess_offset > 1e-3) {
    spdlog::warn("{}: solved lambda is {:.3g} metric units from the file's guess", which,
                 out.guess_offset);
  }
  return out;
}

std::string dash_or(const std::optional<double>& v, int precision) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << *v;
  return os.str();
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string artifact_name(const char* kind, const PlanResult& r) {
  return std::string(kind) + "_" + variant_name(r.variant) + "_" + std::to_string(r.seed) + ".txt";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << std::setprecision(12);
  return os;
}

}  // namespace

PlanProblem Scenario::problem() const {
  PlanProblem p;
  p.model = model;
  p.start = start.point;
  p.goal = goal.point;
  return p;
}

Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", std::string("not valid JSON: ") + e.what());
  }
  require_object(j, "");
  reject_unknown(j, "",
                 {"name", "description", "robot", "scene", "start", "goal", "planner", "evidence"});
  Scenario s;
  const json& name = required(j, "", "name");
  if (!name.is_string()) throw SchemaError("name", "expected a string");
  s.name = name.get<std::string>();
  if (const auto it = j.find("description"); it != j.end()) {
    if (!it->is_string()) throw SchemaError("description", "expected a string");
    s.description = it->get<std::string>();
  }
  if (const auto it = j.find("robot"); it != j.end()) parse_robot(*it, s.model);
  parse_scene(required(j, "", "scene"), s.model.scene);
  s.start_spec = parse_point(required(j, "", "start"), "start", s.model.robot);
  s.goal_spec = parse_point(required(j, "", "goal"), "goal", s.model.robot);
  if (const auto it = j.find("planner"); it != j.end()) parse_planner(*it, s.planner);
  return s;
}

void solve_endpoints(Scenario& scenario) {
  scenario.start = solve_endpoint(scenario.start_spec, "start", scenario);
  scenario.goal = solve_endpoint(scenario.goal_spec, "goal", scenario);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw SchemaError("<file>", "cannot open " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  Scenario s = parse_scenario(buf.str());
  solve_endpoints(s);
  return s;
}

RunRow make_row(const PlanResult& result) {
  RunRow row;
  row.variant = result.variant;
  row.seed = result.seed;
  if (result.found) {
    row.samples = result.samples_before_path;
    row.cost_mm = result.cost * 1e3;
  }
  row.time_s = result.time_s;
  row.nodes = static_cast<int>(result.tree.size());
  row.samples_drawn = result.samples_drawn;
  return row;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRow>& rows) {
  std::vector<AggregateRow> out;
  std::map<Variant, std::size_t> index;
  std::vector<double> samples_sum, cost_sum;
  for (const RunRow& r : rows) {
    auto [it, fresh] = index.try_emplace(r.variant, out.size());
    if (fresh) {
      out.push_back(AggregateRow{});
      out.back().variant = r.variant;
      samples_sum.push_back(0.0);
      cost_sum.push_back(0.0);
    }
    const std::size_t i = it->second;
    AggregateRow& a = out[i];
    ++a.runs;
    a.mean_time_s += r.time_s;
    a.mean_time_per_node_s += r.time_per_node_s();
    if (r.samples && r.cost_mm) {
      ++a.successes;
      samples_sum[i] += *r.samples;
      cost_sum[i] += *r.cost_mm;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    AggregateRow& a = out[i];
    a.mean_time_s /= a.runs;
    a.mean_time_per_node_s /= a.runs;
    if (a.successes > 0) {
      a.mean_samples = samples_sum[i] / a.successes;
      a.mean_cost_mm = cost_sum[i] / a.successes;
    }
  }
  return out;
}

void write_run_artifacts(const std::filesystem::path& dir, const PlanResult& result) {
  {
    std::ofstream os = open_out(dir / artifact_name("path", result));
    if (!result.found) os << "# no path found\n";
    write_path(os, result);
  }
  {
    std::ofstream os = open_out(dir / artifact_name("tree", result));
    write_tree(os, result);
  }
  {
    std::ofstream os = open_out(dir / artifact_name("atlas", result));
    if (result.atlas) {
      result.atlas->write(os);
    } else {
      os << "# " << variant_name(result.variant) << " builds no atlas\n";
    }
  }
}

RunReport run(const Scenario& scenario, const std::vector<Variant>& variants,
              const std::vector<unsigned long>& seeds,
              const std::optional<std::filesystem::path>& out_dir) {
  if (out_dir) std::filesystem::create_directories(*out_dir);
  const PlanProblem problem = scenario.problem();
  RunReport report;
  report.scenario = scenario.name;
  for (Variant v : variants) {
    for (unsigned long seed : seeds) {
      PlannerParams params = scenario.planner;
      params.seed = seed;
      try {
        const PlanResult result = plan(v, problem, params);
        report.rows.push_back(make_row(result));
        if (out_dir) write_run_artifacts(*out_dir, result);
      } catch (const Error& e) {
        spdlog::error("{} seed {} failed: {}", variant_name(v), seed, e.what());
        RunRow row;
        row.variant = v;
        row.seed = seed;
        report.rows.push_back(row);
      }
    }
  }
  report.aggregates = aggregate(report.rows);
  if (out_dir) {
    std::ofstream os = open_out(*out_dir / "metrics.csv");
    write_metrics_csv(os, report);
  }
  return report;
}

void write_metrics_csv(std::ostream& os, const RunReport& report) {
  os << "variant,seed,samples,cost_mm,time_s\n";
  for (const RunRow& r : report.rows) {
    os << variant_name(r.variant) << ',' << r.seed << ','
       << (r.samples ? std::to_string(*r.samples) : "-") << ',' << dash_or(r.cost_mm, 3) << ','
       << fixed(r.time_s, 3) << '\n';
  }
  for (const AggregateRow& a : report.aggregates) {
    os << variant_name(a.variant) << ",mean," << dash_or(a.mean_samples, 1) << ','
       << dash_or(a.mean_cost_mm, 3) << ',' << fixed(a.mean_time_s, 3) << '\n';
  }
}

void write_summary(std::ostream& os, const RunReport& report) {
  os << "scenario " << report.scenario << '\n';
  os << std::left << std::setw(18) << "variant" << std::right << std::setw(9) << "success"
     << std::setw(10) << "samples" << std::setw(11) << "cost_mm" << std::setw(10) << "time_s"
     << std::setw(14) << "time/node_ms" << '\n';
  for (const AggregateRow& a : report.aggregates) {
    os << std::left << std::setw(18) << variant_name(a.variant) << std::right << std::setw(9)
       << (std::to_string(a.successes) + "/" + std::to_string(a.runs)) << std::setw(10)
       << dash_or(a.mean_samples, 1) << std::setw(11) << dash_or(a.mean_cost_mm, 2)
       << std::setw(10) << fixed(a.mean_time_s, 2) << std::setw(14)
       << fixed(a.mean_time_per_node_s * 1e3, 2) << '\n';
  }
}

void write_validation(std::ostream& os, const Scenario& s) {
  os << "scenario " << s.name << ": " << s.model.scene.obstacles.size() << " obstacle(s)\n";
  auto one = [&](const char* which, const SolvedEndpoint& e) {
    const AmbientVector x = e.point.ambient();
    os << which << ": |F| = " << std::scientific << std::setprecision(2) << e.report.residual_norm
       << ", rank " << e.report.rank_F_lambda << ", sigma_min/sigma_max = "
       << e.report.sigma_min / e.report.sigma_max << ", iterations " << e.report.iterations
       << std::defaultfloat << std::setprecision(6) << "\n  x = [";
    for (int i = 0; i < kAmbientDim; ++i) os << (i ? ", " : "") << x(i);
    const Eigen::Vector3d tip = e.point.cfg->tip().p;
    os << "]\n  tip = [" << tip(0) << ", " << tip(1) << ", " << tip(2) << "]\n";
  };
  one("start", s.start);
  one("goal", s.goal);
  os << "start-goal metric distance " << s.planner.metric.norm(s.start.point.ambient() - s.goal.point.ambient())
     << '\n';
}

}  // namespace crplan
