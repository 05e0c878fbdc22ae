// Command line front end: plan, bench and validate on scenario files.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "crplan/errors.hpp"
#include "crplan/scenario.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kSchema = 2, kValidation = 3 };

std::vector<crplan::Variant> parse_variants(const std::string& spec) {
  if (spec == "all") return crplan::all_variants();
  std::vector<crplan::Variant> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(crplan::parse_variant(item));
  }
  if (out.empty()) throw crplan::DomainError("no variants given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling-based planning for a tendon-driven continuum robot"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Only warnings and errors");

  std::string scenario_path;
  std::string out_dir;

  auto* plan_cmd = app.add_subcommand("plan", "Run one planner variant with one seed");
  std::string variant = "atlas-rrt*";
  unsigned long seed = 0;
  plan_cmd->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  plan_cmd->add_option("--variant", variant, "atlas-rrt*, rrt*-tau or rrt*-lambda-tau")->capture_default_str();
  plan_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  plan_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* bench_cmd = app.add_subcommand("bench", "Run variants over seeds 0..N-1");
  int n_seeds = 5;
  std::string variants = "all";
  bench_cmd->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--seeds", n_seeds, "Number of seeds")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--variants", variants, "'all' or a comma separated list")->capture_default_str();
  bench_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* validate_cmd = app.add_subcommand("validate", "Parse a scenario and solve its start and goal");
  validate_cmd->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    const crplan::Scenario scenario = crplan::load_scenario(scenario_path);
    if (*validate_cmd) {
      crplan::write_validation(std::cout, scenario);
      return kOk;
    }
    std::vector<crplan::Variant> vs;
    std::vector<unsigned long> seeds;
    if (*plan_cmd) {
      vs = {crplan::parse_variant(variant)};
      seeds = {seed};
    } else {
      vs = parse_variants(variants);
      for (int s = 0; s < n_seeds; ++s) seeds.push_back(static_cast<unsigned long>(s));
    }
    const crplan::RunReport report = crplan::run(scenario, vs, seeds, std::filesystem::path(out_dir));
    crplan::write_summary(std::cout, report);
    return kOk;
  } catch (const crplan::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kSchema;
  } catch (const crplan::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const crplan::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
