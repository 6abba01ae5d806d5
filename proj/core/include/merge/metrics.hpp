#pragma once

#include <functional>
#include <vector>

#include "merge/traffic_core.hpp"

namespace merge {

/// tau + v_u/b_max + v/b_max: lag part plus lead part of the critical gap.
double critical_headway(double v, const VehicleParams& params, double v_u);

/// Probability that a Poisson mainline stream leaves an acceptable gap.
double gap_probability(const DemandProfile& demand, double v, const VehicleParams& params,
                       double v_u, double t);

struct QueueSample {
  double t;
  double q;  // vehicles
};

struct QueueProfile {
  std::vector<QueueSample> samples;  // uniform at dt
  double t0 = 0.0;
  double dt = 0.0;
  double t_clear = 0.0;
  bool cleared = false;
};

using RateFunction = std::function<double(double)>;

/// Cumulative arrivals minus departures, clamped at zero. Arrivals are
/// integrated exactly over the piecewise-constant demand; departures by the
/// trapezoid rule.
QueueProfile queue_profile(const DemandProfile& demand, const RateFunction& mu_eff, double t0,
                           double t_end, double dt);

struct DelayResult {
  double veh_seconds = 0.0;
  bool cleared = true;  // false: partial integral up to the horizon
};

DelayResult total_delay(const QueueProfile& q);

/// Deceleration needed to avoid hitting the leader. Zero when not closing.
/// Throws CollisionError when gap_net <= 0.
double drac(double v_follow, double v_lead, double gap_net);

struct FollowPair {
  int leader = 0;
  int follower = 0;
  double dv = 0.0;   // v_follow - v_lead
  double gap = 0.0;  // net gap, m
};

/// Conflict pairs per time step, uniform at dt from t0.
struct CrashTrace {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<std::vector<FollowPair>> steps;
  int affected = 0;   // K
  int collisions = 0;  // steps where some net gap was <= 0 (not recorded as pairs)
  double min_gap = 0.0;  // smallest net gap between the merger and its first follower
};

double crash_risk(const CrashTrace& trace, double dt);

/// One mainline vehicle behind the merge point at the merge instant.
struct LagVehicle {
  double x;  // position at t_m
  double v;
};

struct ConflictSetup {
  double t_m = 0.0;
  double x_m = 0.0;
  double v_m = 0.0;
  double horizon = 0.0;  // integration window after t_m
  double dt = 0.1;
  std::vector<LagVehicle> followers;  // ordered nearest first
};

/// Bounded Newell followers reacting to a merger that accelerates to v_u.
/// Before t_m the merger is taken to have travelled at v_m.
CrashTrace conflict_trace(const ConflictSetup& setup, const FundamentalDiagram& fd,
                          const VehicleParams& mainline);

}  // namespace merge
