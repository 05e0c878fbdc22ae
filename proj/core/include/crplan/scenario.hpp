#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crplan/mechanics.hpp"
#include "crplan/planners.hpp"
#include "crplan/shooting.hpp"

namespace crplan {

/// Shooting guess and actuation as written in a scenario file.
struct PointSpec {
  Wrench lambda = Wrench::Zero();
  Actuation tau = Actuation::Zero();
};

/// A solved endpoint together with the solver evidence behind it.
struct SolvedEndpoint {
  ManifoldPoint point;
  ResidualReport report;
  /// Metric distance between the file's lambda and the solved lambda.
  double guess_offset = 0.0;
};

struct Scenario {
  std::string name;
  std::string description;
  StaticsModel model;
  PointSpec start_spec;
  PointSpec goal_spec;
  PlannerParams planner;
  SolvedEndpoint start;
  SolvedEndpoint goal;

  PlanProblem problem() const;
};

/// Parses the JSON scenario text without solving the endpoints. Unknown keys
/// are rejected so typos do not silently fall back to defaults. Throws
/// SchemaError naming the dotted field path.
Scenario parse_scenario(std::string_view text);

/// Solves start and goal from their guesses and checks convergence, stability
/// and collision. Throws ValidationError.
void solve_endpoints(Scenario& scenario);

/// parse_scenario + solve_endpoints on a file.
Scenario load_scenario(const std::filesystem::path& path);

/// One (variant, seed) run. Optional fields are empty when no path was found.
struct RunRow {
  Variant variant = Variant::AtlasRRTStar;
  unsigned long seed = 0;
  std::optional<int> samples;
  std::optional<double> cost_mm;
  double time_s = 0.0;
  int nodes = 0;
  int samples_drawn = 0;

  double time_per_node_s() const { return nodes > 0 ? time_s / nodes : 0.0; }
};

/// Means over the rows of one variant. Samples and cost average the
/// successful runs only; time averages every run.
struct AggregateRow {
  Variant variant = Variant::AtlasRRTStar;
  int runs = 0;
  int successes = 0;
  std::optional<double> mean_samples;
  std::optional<double> mean_cost_mm;
  double mean_time_s = 0.0;
  double mean_time_per_node_s = 0.0;
};

struct RunReport {
  std::string scenario;
  std::vector<RunRow> rows;
  std::vector<AggregateRow> aggregates;
};

RunRow make_row(const PlanResult& result);
/// One aggregate per variant, in order of first appearance.
std::vector<AggregateRow> aggregate(const std::vector<RunRow>& rows);

/// Writes path_, tree_ and atlas_<variant>_<seed>.txt into dir.
void write_run_artifacts(const std::filesystem::path& dir, const PlanResult& result);

/// Runs every (variant, seed) pair in order. A run that throws is recorded
/// as a dash row and the batch continues. With out_dir, artifacts and
/// metrics.csv are written there.
RunReport run(const Scenario& scenario, const std::vector<Variant>& variants,
              const std::vector<unsigned long>& seeds,
              const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// variant,seed,samples,cost_mm,time_s; '-' for missing values. Aggregate
/// rows use "mean" as the seed.
void write_metrics_csv(std::ostream& os, const RunReport& report);

/// Fixed-width table of the aggregates for terminals.
void write_summary(std::ostream& os, const RunReport& report);

/// Human-readable start/goal evidence (residual norm, rank, sigma ratio).
void write_validation(std::ostream& os, const Scenario& scenario);

}  // namespace crplan
