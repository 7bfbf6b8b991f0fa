#include <benchmark/benchmark.h>

#include <vector>

#include "pmtg/config.hpp"
#include "pmtg/pointmass.hpp"
#include "pmtg/policy.hpp"
#include "pmtg/quadruped.hpp"
#include "pmtg/rollout.hpp"
#include "pmtg/tg.hpp"

using namespace pmtg;

static void BM_TgLegTargets(benchmark::State& state) {
  const TgConfig cfg = gait_table("walk");
  TgState s;
  const TgModulation mod{1.5, 0.3, 1.2};
  for (auto _ : state) {
    s = advance_phase(s, mod.frequency, 0.01);
    benchmark::DoNotOptimize(tg_leg_targets(s, mod, cfg));
  }
}
BENCHMARK(BM_TgLegTargets);

static void BM_PolicyForward(benchmark::State& state) {
  PolicyShape shape;
  if (state.range(0) == 1) {
    shape.kind = PolicyKind::kMlp;
    shape.hidden = {32, 32};
  }
  const PolicyParams p = PolicyParams::random_init(shape, 1);
  const std::vector<double> obs{0.0, 0.1, 0.0, -0.2, 0.4, 0.5, 0.8};
  std::vector<double> out(kActionDim);
  for (auto _ : state) {
    policy_forward(p, obs, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_PolicyForward)->Arg(0)->Arg(1)->ArgNames({"mlp"});

static void BM_QuadrupedControlStep(benchmark::State& state) {
  QuadrupedSim sim(RobotModel{}, ContactModel{}, TaskSpec{});
  sim.reset(0);
  LegCommand stand;
  for (auto& leg : stand.legs) leg = {0.0, 1.2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim.step(stand));
    if (sim.body().time > 20.0) sim.reset(0);
  }
}
BENCHMARK(BM_QuadrupedControlStep);

static void BM_PointMassRollout(benchmark::State& state) {
  PointMassEpisode ep(PointMassConfig{}, PointMassWiringConfig{});
  PolicyShape shape;
  shape.input_dim = 4;
  shape.output_dim = 4;
  shape.bias = true;
  const PolicyParams p = PolicyParams::random_init(shape, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rollout(p, ep, 3).episode_return);
}
BENCHMARK(BM_PointMassRollout)->Unit(benchmark::kMicrosecond);

static void BM_QuadrupedRollout(benchmark::State& state) {
  QuadrupedEpisodeConfig cfg;
  QuadrupedEpisode ep(cfg);
  const PolicyParams p = PolicyParams::zeros(PolicyShape{});
  for (auto _ : state) benchmark::DoNotOptimize(rollout(p, ep, 3).episode_return);
}
BENCHMARK(BM_QuadrupedRollout)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
