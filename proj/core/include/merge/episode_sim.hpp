#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "merge/merge_dp.hpp"
#include "merge/metrics.hpp"
#include "merge/traffic_core.hpp"

namespace merge {

// ---------------------------------------------------------------------------
// Saturated discharge oracle

struct OracleConfig {
  double x_up = -300.0;   // vertical-queue release point
  double x_m = 0.0;
  double clearance = 200.0;  // x_down = x_A + clearance
  int episodes = 12;
  double warmup = 20.0;
  double dt = 0.02;
};

struct OracleResult {
  double empirical_mu;    // veh/s between the first and last counted merger
  double closed_form_mu;  // mu*(1 - theta)
  double theta;
  int vehicles;
  double duration;
};

/// Pure Newell platoon fed by a saturated vertical queue. A ramp vehicle is
/// inserted every h_r directly behind the first mainline vehicle whose shadow
/// reaches x_m, merges there at v_m and accelerates at a_max.
OracleResult discharge_oracle(const FundamentalDiagram& fd, double v_m, double ramp_flow,
                              double a_max, const OracleConfig& cfg = {});

/// True when the dissipation wave reaches the merge point within one episode,
/// so consecutive episodes do not overlap.
bool episodes_separate(const FundamentalDiagram& fd, double v_m, double ramp_flow, double a_max);

// ---------------------------------------------------------------------------
// Experiment setup shared by the controller and the batch runner

struct ExperimentConfig {
  FundamentalDiagram fd;
  DemandProfile demand;
  VehicleParams mainline;  // Newell shifts plus a_max/b_max/length of followers
  GapRule gap;
  DpConfig dp;
  MergeGeometry geometry;
  double dt_sim = 0.1;
  double delay_horizon = 150.0;  // s, fluid-queue window for the delay term
  double risk_saturation_gap = 0.5;
  double risk_cap_factor = 100.0;
  double risk_cap_quantile = 0.95;
  int max_normalization_rounds = 20;
  unsigned threads = 0;  // 0: hardware concurrency

  double arrival_rate() const { return demand.lambda(0.0); }
  double episode_length() const { return episode_headway(demand, 0.0); }
};

/// Fluid-queue delay over the delay horizon when the merger enters at v_m.
double merge_delay(const ExperimentConfig& cfg, double v_m);

/// DRAC integral of the lag platoon after a merge at step k from state s.
CostComponents merge_components(const ExperimentConfig& cfg, const GapScenario& scenario, int k,
                                const MergeState& s);

GapScenario sample_scenario(const ExperimentConfig& cfg, std::uint64_t seed);

MergeProblem build_problem(const ExperimentConfig& cfg, const GapScenario& scenario);

// ---------------------------------------------------------------------------
// Single-episode microsimulation

struct VehicleTrace {
  int id;
  bool merger;
  Trajectory trajectory;
};

struct EpisodeResult {
  int vehicle_count_downstream = 0;
  double episode_duration = 0.0;
  double empirical_mu = 0.0;
  double delay = 0.0;  // veh*s relative to the run without the merger
  double risk = 0.0;
  int affected = 0;
  bool collision = false;
  double t_m = 0.0;
  double x_m = 0.0;
  double v_m = 0.0;
  std::vector<VehicleTrace> trajectories;
};

EpisodeResult simulate_episode(const PolicyPath& path, const GapScenario& scenario,
                               const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Monte Carlo batches

enum class PolicyKind { dp, early, late };
std::string to_string(PolicyKind p);
PolicyKind policy_from_string(const std::string& s);

struct RunRecord {
  int run;
  PolicyKind policy;
  double t_m;
  double x_m;
  double v_m;
  CostComponents components;
  double weighted_cost;
  std::uint64_t scenario_hash;
};

struct PolicySummary {
  PolicyKind policy;
  double mean_delay;
  double mean_risk;  // effective (capped) risk
  double mean_cost;
};

struct BatchSummary {
  double phi;
  int runs;
  std::uint64_t master_seed;
  Normalization normalization;
  int normalization_rounds;
  std::vector<PolicySummary> policies;
  std::vector<RunRecord> records;  // sorted by (run, policy)

  const PolicySummary& summary(PolicyKind p) const;
};

std::uint64_t run_seed(std::uint64_t master_seed, int run);

/// One batch per phi on common scenarios. Deterministic given master_seed.
std::vector<BatchSummary> monte_carlo(const std::vector<PolicyKind>& policies, int runs,
                                      std::uint64_t master_seed, const std::vector<double>& phis,
                                      const ExperimentConfig& cfg);

enum class SweepParam { demand, aux_length, ramp_ratio };
SweepParam sweep_param_from_string(const std::string& s);
std::string to_string(SweepParam p);

struct SweepRow {
  double value;
  bool feasible;
  std::vector<double> phis;
  std::vector<double> vs_early;  // (early - dp)/early per phi
  std::vector<double> vs_late;
  std::vector<double> dp_cost;
  std::vector<double> early_cost;
  std::vector<double> late_cost;
};

/// `value` is in the sweep's natural unit: veh/s, m, or a ratio.
ExperimentConfig with_param(const ExperimentConfig& cfg, SweepParam p, double value);

std::vector<double> sweep_grid(double from, double to, double step);

std::vector<SweepRow> sensitivity_sweep(SweepParam param, const std::vector<double>& values,
                                        int runs, std::uint64_t master_seed,
                                        const std::vector<double>& phis,
                                        const ExperimentConfig& cfg);

double reduction(double benchmark, double proposed);

}  // namespace merge
