// Micro benchmarks for the inner loops of the planners. All inputs come from
// the scenario-1 start equilibrium so timings track the preset workload.

#include <random>

#include <benchmark/benchmark.h>

#include "crplan/atlas.hpp"
#include "crplan/mechanics.hpp"
#include "crplan/planners.hpp"
#include "crplan/scenario.hpp"
#include "crplan/shooting.hpp"

using namespace crplan;

namespace {

const Scenario& preset() {
  static const Scenario s = load_scenario(CRPLAN_SCENARIO_DIR "/scenario1.json");
  return s;
}

void BM_IntegrateIvp(benchmark::State& state) {
  const Scenario& s = preset();
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate_ivp(s.start.point.lambda, s.start.point.tau, s.model, n));
  }
}
BENCHMARK(BM_IntegrateIvp)->Arg(100)->Arg(200)->Arg(400);

void BM_Jacobian(benchmark::State& state) {
  const Scenario& s = preset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(jacobian(s.start.point, s.model, s.planner.metric));
  }
}
BENCHMARK(BM_Jacobian);

// Warm start one metric unit away in lambda.
void BM_SolveBvpWarm(benchmark::State& state) {
  const Scenario& s = preset();
  Wrench guess = s.start.point.lambda;
  guess(3) += 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_bvp(guess, s.start.point.tau, s.model));
  }
}
BENCHMARK(BM_SolveBvpWarm);

void BM_SteerOnAtlas(benchmark::State& state) {
  const Scenario& s = preset();
  const PlannerParams& pp = s.planner;
  Atlas atlas(AtlasParams{pp.R, pp.epsilon, pp.metric});
  ShootingOptions options;
  options.metric = pp.metric;
  TreeNode root;
  root.x = s.start.point;
  root.chart = atlas.add_chart(s.start.point, s.model, options);
  std::mt19937_64 rng(1);
  for (auto _ : state) {
    // Fresh copy so chart creation inside steer does not grow the atlas.
    state.PauseTiming();
    Atlas local = atlas;
    const AtlasSample sample = sample_on_atlas(local, pp, s.model.robot, rng);
    state.ResumeTiming();
    benchmark::DoNotOptimize(steer(local, root, sample.x, sample.chart, sample.delta, s.model, pp, options));
  }
}
BENCHMARK(BM_SteerOnAtlas)->Unit(benchmark::kMillisecond);

}  // namespace

// The distro's static benchmark_main is LTO bytecode from another compiler
// release, so the shared library is linked and main is defined here.
BENCHMARK_MAIN();
