#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "merge/metrics.hpp"
#include "merge/traffic_core.hpp"

namespace merge {

enum : int { kAuxLane = 1, kMainLane = 2 };

struct MergeState {
  int lane = kAuxLane;
  double v = 0.0;
  double d = 0.0;
};

struct Decision {
  int m = 0;
  double a = 0.0;
};

struct CostWeights {
  double phi = 0.5;
  void validate() const;
};

/// Unsnapped kinematics: lane += m, speed capped at v_u, distance integrated
/// consistently with the cap.
MergeState transition(const MergeState& s, const Decision& dec, double dt, double v_u,
                      double a_max);

/// Lead/lag acceptance rule for a merge at (t, d) with speed v.
struct GapRule {
  double tau = 1.5;
  double b_max = 6.0;
  double v_u = 0.0;
};

/// Mainline passage times at the auxiliary-lane entrance; the stream moves
/// at v_u, so a vehicle passing 0 at P passes d at P + d/v_u.
class GapScenario {
public:
  explicit GapScenario(std::vector<double> passages, std::uint64_t seed = 0);

  /// Exponential headways at `rate` veh/s covering [t_begin, t_end].
  static GapScenario sample(std::uint64_t seed, double rate, double t_begin, double t_end);

  const std::vector<double>& passages() const noexcept { return passages_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t hash() const noexcept;

  bool acceptable(double t, double d, double v, const GapRule& rule) const;

  /// Vehicles that pass d in (t, t + window], nearest first, as positions at t.
  std::vector<LagVehicle> lag_vehicles(double t, double d, double v_u, double window) const;

private:
  std::vector<double> passages_;
  std::uint64_t seed_;
};

struct DpConfig {
  double dt = 0.5;
  double v_step = 0.5;
  double d_step = 0.5;
  std::vector<double> accel_levels{0.0, 0.5, 1.0};  // fractions of a_max
  double v0 = 0.0;
  double v_u = 0.0;
  double a_max = 2.0;
  double aux_length = 150.0;
  double vehicle_length = 5.0;
  int horizon_steps = 0;  // 0 derives a horizon long enough for the slowest path

  void validate() const;
  int steps() const;
};

struct CostComponents {
  double delay = 0.0;  // veh*s
  double risk = 0.0;   // m/s
  bool saturated = false;
};

/// Min-max bounds for delay and risk plus the saturated-risk cap.
struct Normalization {
  double w_lo = 0.0;
  double w_hi = 1.0;
  double s_lo = 0.0;
  double s_hi = 1.0;
  double risk_cap = 0.0;

  double effective_risk(const CostComponents& c) const noexcept {
    return c.saturated ? risk_cap : c.risk;
  }
  double weighted(const CostComponents& c, const CostWeights& w) const noexcept;
  bool operator==(const Normalization&) const = default;
};

using GapFn = std::function<bool(int k, const MergeState&)>;
using ComponentFn = std::function<CostComponents(int k, const MergeState&)>;

struct PolicyStep {
  int k;
  MergeState state;
  Decision decision;
  double stage_cost;
};

struct PolicyPath {
  std::vector<PolicyStep> steps;
  int merge_step = -1;
  MergeState merge_state;
  CostComponents components;
  double total_cost = 0.0;
  bool reached_terminal = false;
};

/// Discretized merge problem for one gap realization.
class MergeProblem {
public:
  MergeProblem(DpConfig cfg, GapFn gap, ComponentFn components);

  const DpConfig& config() const noexcept { return cfg_; }
  MergeState initial() const;
  bool terminal(const MergeState& s) const;
  bool merge_forced(const MergeState& s) const;
  bool merge_allowed(int k, const MergeState& s) const;
  std::vector<Decision> decisions(int k, const MergeState& s) const;

  /// transition() followed by snapping onto the speed/distance grid.
  MergeState next(const MergeState& s, const Decision& dec) const;

  /// Memoized per (k, state).
  const CostComponents& components(int k, const MergeState& s) const;
  double stage_cost(int k, const MergeState& s, const Decision& dec, const CostWeights& w,
                    const Normalization& n) const;

  /// Main-lane states carry no further cost, so their value is 0 or infinity.
  /// Full acceleration dominates every other sequence on the monotone grid.
  bool can_finish(int k, const MergeState& s) const;

  /// Lowest acceleration that keeps a main-lane state able to finish.
  Decision main_lane_decision(int k, const MergeState& s) const;

  /// Auxiliary-lane states reachable at each step, sorted by key.
  const std::vector<std::vector<std::uint64_t>>& aux_layers() const;

  std::uint64_t key(const MergeState& s) const;
  MergeState from_key(std::uint64_t key) const;
  int speed_index(double v) const;
  int speed_count() const noexcept { return v_count_; }

private:
  DpConfig cfg_;
  GapFn gap_;
  ComponentFn component_fn_;
  int v_count_;
  mutable std::unordered_map<std::uint64_t, CostComponents> memo_;
  mutable std::unordered_map<std::uint64_t, bool> finish_memo_;
  mutable std::vector<std::vector<std::uint64_t>> aux_layers_;
};

struct ValueEntry {
  double value;
  Decision best;
};

/// Cost-to-go per step over reachable auxiliary-lane states.
class ValueTable {
public:
  explicit ValueTable(int steps) : layers_(static_cast<std::size_t>(steps) + 1) {}
  std::optional<ValueEntry> find(int k, std::uint64_t key) const;
  void set(int k, std::uint64_t key, ValueEntry e);
  std::size_t size() const;
  int steps() const noexcept { return static_cast<int>(layers_.size()) - 1; }

private:
  std::vector<std::unordered_map<std::uint64_t, ValueEntry>> layers_;
};

struct Solution {
  PolicyPath path;
  double total_cost = 0.0;
  ValueTable table;
};

Solution solve_backward(const MergeProblem& problem, const CostWeights& w, const Normalization& n);

using PolicyRule = std::function<Decision(const MergeProblem&, int k, const MergeState&)>;

/// Forward rollout of a rule-based policy through the same grid and costs.
PolicyPath rollout(const MergeProblem& problem, const PolicyRule& rule, const CostWeights& w,
                   const Normalization& n);

/// Accelerate at a_max and merge at the first acceptable gap.
PolicyRule early_merge_rule();
/// Accelerate at a_max and merge only at the end of the auxiliary lane.
PolicyRule late_merge_rule();

PolicyPath early_merge_policy(const MergeProblem& problem, const CostWeights& w,
                              const Normalization& n);
PolicyPath late_merge_policy(const MergeProblem& problem, const CostWeights& w,
                             const Normalization& n);

}  // namespace merge
