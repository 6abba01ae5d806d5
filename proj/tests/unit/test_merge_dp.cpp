#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "merge/errors.hpp"
#include "merge/merge_dp.hpp"
#include "support.hpp"

using namespace merge;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DpConfig toy_config(double aux_length = 4.0) {
  DpConfig c;
  c.dt = 0.5;
  c.v_step = 0.5;
  c.d_step = 0.25;
  c.v0 = 2.0;
  c.v_u = 3.0;
  c.a_max = 2.0;
  c.aux_length = aux_length;
  c.vehicle_length = 1.0;
  return c;
}

// Random but fixed merge costs per (step, state).
struct RandomCosts {
  std::uint64_t seed;
  CostComponents operator()(int k, const MergeState& s) const {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(k),
                      static_cast<std::uint64_t>(std::llround(s.v * 100)),
                      static_cast<std::uint64_t>(std::llround(s.d * 100))};
    std::mt19937_64 rng(seq);
    return {test::uniform(rng, 0, 1), test::uniform(rng, 0, 1), false};
  }
};

double brute_force(const MergeProblem& p, int k, const MergeState& s, const CostWeights& w,
                   const Normalization& n) {
  if (p.terminal(s)) return 0.0;
  if (k >= p.config().steps()) return kInf;
  double best = kInf;
  for (const auto& dec : p.decisions(k, s)) {
    const double c = p.stage_cost(k, s, dec, w, n);
    best = std::min(best, c + brute_force(p, k + 1, p.next(s, dec), w, n));
  }
  return best;
}

int merges(const PolicyPath& path) {
  int m = 0;
  for (const auto& st : path.steps) m += st.decision.m;
  return m;
}

}  // namespace

TEST(Transition, Examples) {
  auto s = transition({kAuxLane, 10.0, 50.0}, {1, 2.0}, 0.5, 30.0, 2.0);
  EXPECT_EQ(s.lane, kMainLane);
  EXPECT_NEAR(s.v, 11.0, 1e-12);
  EXPECT_NEAR(s.d, 55.25, 1e-12);

  s = transition({kAuxLane, 10.0, 50.0}, {0, 0.0}, 0.5, 30.0, 2.0);
  EXPECT_EQ(s.lane, kAuxLane);
  EXPECT_NEAR(s.d, 55.0, 1e-12);

  s = transition({kMainLane, 30.0, 10.0}, {0, 2.0}, 0.5, 30.0, 2.0);
  EXPECT_EQ(s.v, 30.0);
  EXPECT_NEAR(s.d, 25.0, 1e-12);
}

TEST(Transition, SpeedCapKeepsDistanceConsistent) {
  // Reaches v_u after 0.25 s, then cruises.
  const auto s = transition({kAuxLane, 29.5, 0.0}, {0, 2.0}, 0.5, 30.0, 2.0);
  EXPECT_EQ(s.v, 30.0);
  EXPECT_NEAR(s.d, 29.5 * 0.25 + 0.5 * 2 * 0.0625 + 30.0 * 0.25, 1e-12);
}

TEST(Transition, Violations) {
  EXPECT_THROW(transition({kMainLane, 10, 0}, {1, 0.0}, 0.5, 30, 2), DomainError);
  EXPECT_THROW(transition({kAuxLane, 10, 0}, {0, 3.0}, 0.5, 30, 2), DomainError);
  EXPECT_THROW(transition({kAuxLane, 10, 0}, {0, -1.0}, 0.5, 30, 2), DomainError);
}

TEST(StageCost, ZeroWithoutMerge) {
  MergeProblem p(toy_config(), [](int, const MergeState&) { return true; }, RandomCosts{1});
  const CostWeights w{0.3};
  const Normalization n;
  EXPECT_EQ(p.stage_cost(0, p.initial(), {0, 2.0}, w, n), 0.0);
  EXPECT_GT(p.stage_cost(0, p.initial(), {1, 2.0}, w, n), 0.0);
}

TEST(Normalization, WeightsAndSaturation) {
  Normalization n{0.0, 200.0, 0.0, 50.0, 80.0};
  const CostComponents c{100.0, 25.0, false};
  EXPECT_NEAR(n.weighted(c, {1.0}), 0.5, 1e-12);
  EXPECT_NEAR(n.weighted(c, {0.0}), 0.5, 1e-12);
  const CostComponents sat{100.0, 3.0, true};
  EXPECT_NEAR(n.weighted(sat, {0.0}), 80.0 / 50.0, 1e-12);
  EXPECT_THROW(CostWeights{1.5}.validate(), DomainError);
}

TEST(Solver, TerminalStateHasZeroCost) {
  MergeProblem p(toy_config(), [](int, const MergeState&) { return false; }, RandomCosts{2});
  MergeState t{kMainLane, 3.0, 5.0};
  ASSERT_TRUE(p.terminal(t));
  EXPECT_EQ(brute_force(p, 3, t, {0.5}, {}), 0.0);
  EXPECT_TRUE(p.can_finish(p.config().steps(), t));
}

TEST(Solver, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(2024);
  for (int inst = 0; inst < 25; ++inst) {
    const std::uint64_t seed = rng();
    std::vector<bool> flags(64);
    for (auto&& f : flags) f = std::bernoulli_distribution(0.4)(rng);
    MergeProblem p(
        toy_config(),
        [flags](int k, const MergeState&) { return flags[static_cast<std::size_t>(k)]; },
        RandomCosts{seed});
    const CostWeights w{test::uniform(rng, 0, 1)};
    const Normalization n;
    const auto sol = solve_backward(p, w, n);
    const double oracle = brute_force(p, 0, p.initial(), w, n);
    EXPECT_NEAR(sol.total_cost, oracle, 1e-12) << "instance " << inst;
    EXPECT_NEAR(sol.path.total_cost, oracle, 1e-12);
    EXPECT_TRUE(sol.path.reached_terminal);
    EXPECT_EQ(merges(sol.path), 1);
  }
}

TEST(Solver, BellmanResidualIsZero) {
  MergeProblem p(toy_config(6.0), [](int k, const MergeState&) { return k % 3 == 1; },
                 RandomCosts{77});
  const CostWeights w{0.4};
  const Normalization n;
  const auto sol = solve_backward(p, w, n);
  const auto& layers = p.aux_layers();
  std::size_t checked = 0;
  for (int k = 0; k < p.config().steps(); ++k) {
    for (auto key : layers[static_cast<std::size_t>(k)]) {
      const auto s = p.from_key(key);
      double best = kInf;
      for (const auto& dec : p.decisions(k, s)) {
        const auto nxt = p.next(s, dec);
        const double future = nxt.lane == kMainLane ? brute_force(p, k + 1, nxt, w, n)
                                                    : sol.table.find(k + 1, p.key(nxt))->value;
        best = std::min(best, p.stage_cost(k, s, dec, w, n) + future);
      }
      const double v = sol.table.find(k, key)->value;
      if (std::isinf(best)) {
        EXPECT_TRUE(std::isinf(v));
      } else {
        EXPECT_NEAR(v, best, 1e-12);
      }
      ++checked;
    }
  }
  EXPECT_EQ(checked + layers.back().size(), sol.table.size());
}

TEST(Solver, SingleGapWindow) {
  auto run = [](double gap_cost) {
    MergeProblem p(
        toy_config(), [](int k, const MergeState&) { return k == 1; },
        [gap_cost](int k, const MergeState&) {
          return CostComponents{k == 1 ? gap_cost : 1.0, 0.0, false};
        });
    return solve_backward(p, {1.0}, {});
  };
  const auto cheap = run(0.1);
  EXPECT_EQ(cheap.path.merge_step, 1);
  EXPECT_NEAR(cheap.total_cost, 0.1, 1e-12);
  const auto dear = run(2.0);
  EXPECT_NE(dear.path.merge_step, 1);
  EXPECT_NEAR(dear.total_cost, 1.0, 1e-12);
}

TEST(Solver, DominatesBenchmarksOnToyInstances) {
  std::mt19937_64 rng(8);
  for (int inst = 0; inst < 50; ++inst) {
    const std::uint64_t seed = rng();
    std::vector<bool> flags(64);
    for (auto&& f : flags) f = std::bernoulli_distribution(0.3)(rng);
    MergeProblem p(
        toy_config(8.0),
        [flags](int k, const MergeState&) { return flags[static_cast<std::size_t>(k)]; },
        RandomCosts{seed});
    const CostWeights w{test::uniform(rng, 0, 1)};
    const auto sol = solve_backward(p, w, {});
    EXPECT_LE(sol.total_cost, early_merge_policy(p, w, {}).total_cost);
    EXPECT_LE(sol.total_cost, late_merge_policy(p, w, {}).total_cost);
  }
}

TEST(Benchmarks, EarlyMergesAtFirstGap) {
  auto build = [](int first_gap) {
    return MergeProblem(
        toy_config(40.0), [first_gap](int k, const MergeState&) { return k >= first_gap; },
        RandomCosts{5});
  };
  const auto at_start = early_merge_policy(build(0), {0.5}, {});
  EXPECT_EQ(at_start.merge_step, 0);
  EXPECT_EQ(at_start.merge_state.v, 2.0);

  const auto at_seven = early_merge_policy(build(7), {0.5}, {});
  EXPECT_EQ(at_seven.merge_step, 7);
  EXPECT_EQ(merges(at_seven), 1);

  const auto never = early_merge_policy(build(1000), {0.5}, {});
  EXPECT_TRUE(never.reached_terminal);
  EXPECT_GE(never.merge_state.d + never.merge_state.v * 0.5, 40.0);
}

TEST(Benchmarks, LateMergesAtLaneEnd) {
  MergeProblem p(toy_config(40.0), [](int, const MergeState&) { return true; }, RandomCosts{6});
  const auto late = late_merge_policy(p, {0.5}, {});
  EXPECT_EQ(merges(late), 1);
  EXPECT_GE(late.merge_state.d + late.merge_state.v * 0.5, 40.0);
  EXPECT_LT(late.merge_state.d, 40.0);
  EXPECT_EQ(late.merge_state.v, 3.0);
}

TEST(Benchmarks, RuleMayNotMergeWithoutGap) {
  MergeProblem p(toy_config(), [](int, const MergeState&) { return false; }, RandomCosts{3});
  const PolicyRule eager = [](const MergeProblem&, int, const MergeState&) {
    return Decision{1, 0.0};
  };
  EXPECT_THROW(rollout(p, eager, {0.5}, {}), DomainError);
}

TEST(GapScenario, AcceptanceRule) {
  const GapRule rule{1.5, 6.0, 30.0};
  const GapScenario sc({10.0, 30.0});
  // Lag gap must exceed tau + v_u/b = 6.5 s and lead gap v/b.
  EXPECT_TRUE(sc.acceptable(20.0, 0.0, 12.0, rule));
  EXPECT_FALSE(sc.acceptable(25.0, 0.0, 12.0, rule));
  EXPECT_FALSE(sc.acceptable(11.0, 0.0, 12.0, rule));
  // Downstream positions see the stream shifted by d/v_u.
  EXPECT_TRUE(sc.acceptable(22.0, 60.0, 12.0, rule));
}

TEST(GapScenario, SampleIsReproducible) {
  const auto a = GapScenario::sample(42, 0.4, 0.0, 500.0);
  const auto b = GapScenario::sample(42, 0.4, 0.0, 500.0);
  EXPECT_EQ(a.passages(), b.passages());
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), GapScenario::sample(43, 0.4, 0.0, 500.0).hash());
  for (std::size_t i = 1; i < a.passages().size(); ++i) {
    EXPECT_GT(a.passages()[i], a.passages()[i - 1]);
  }
  // Mean headway near 1/rate.
  EXPECT_NEAR(500.0 / static_cast<double>(a.passages().size()), 2.5, 0.5);
}
