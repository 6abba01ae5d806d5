#include <benchmark/benchmark.h>

#include "merge/discharge.hpp"
#include "merge/episode_sim.hpp"
#include "merge/run_config.hpp"
#include "merge/units.hpp"

using namespace merge;

static void BM_SolveBackward(benchmark::State& state) {
  RunConfig rc;
  rc.aux_length_m = static_cast<double>(state.range(0));
  const auto cfg = make_experiment(rc);
  const auto scenario = sample_scenario(cfg, 42);
  for (auto _ : state) {
    // Fresh problem each time so component memoization is part of the cost.
    const auto problem = build_problem(cfg, scenario);
    benchmark::DoNotOptimize(solve_backward(problem, {0.5}, {0.0, 150.0, 0.0, 300.0, 3e4}));
  }
}
BENCHMARK(BM_SolveBackward)->Arg(100)->Arg(150)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_DischargeProfile(benchmark::State& state) {
  const auto cfg = make_experiment(RunConfig{});
  const auto kin = EpisodeKinematics::from_merge(0.0, 120.0, 18.0, cfg.fd.v_u(), 2.0,
                                                 cfg.episode_length());
  const int samples = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(discharge_profile(cfg.fd, cfg.demand, kin, samples));
  }
  state.SetItemsProcessed(state.iterations() * samples);
}
BENCHMARK(BM_DischargeProfile)->Arg(200)->Arg(2000);

static void BM_ConflictTrace(benchmark::State& state) {
  const auto cfg = make_experiment(RunConfig{});
  ConflictSetup setup;
  setup.x_m = 120.0;
  setup.v_m = 18.0;
  setup.horizon = cfg.episode_length();
  setup.dt = cfg.dt_sim;
  for (int j = 0; j < state.range(0); ++j) {
    setup.followers.push_back({setup.x_m - 30.0 - 45.0 * j, cfg.fd.v_u()});
  }
  for (auto _ : state) {
    const auto trace = conflict_trace(setup, cfg.fd, cfg.mainline);
    benchmark::DoNotOptimize(crash_risk(trace, trace.dt));
  }
}
BENCHMARK(BM_ConflictTrace)->Arg(1)->Arg(4)->Arg(16);

static void BM_DischargeOracle(benchmark::State& state) {
  const auto fd = FundamentalDiagram::from_wave(units::kmh_to_mps(19.0),
                                                units::per_km_to_per_m(113.0),
                                                units::kmh_to_mps(48.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(discharge_oracle(fd, 4.0, units::vph_to_vps(130.0), 2.0));
  }
}
BENCHMARK(BM_DischargeOracle)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
