#pragma once

#include <optional>
#include <vector>

#include "merge/traffic_core.hpp"

namespace merge {

/// Merge point M, full-acceleration point A and the episode length.
struct EpisodeKinematics {
  double t_m = 0.0;
  double x_m = 0.0;
  double v_m = 0.0;
  double t_a = 0.0;
  double x_a = 0.0;
  double v_u = 0.0;
  double a_max = 0.0;
  double h_r = 0.0;

  /// Builds A from M by constant acceleration up to v_u.
  static EpisodeKinematics from_merge(double t_m, double x_m, double v_m, double v_u,
                                      double a_max, double h_r);
};

/// Five-period breakdown at a reference point between M and A.
struct DischargeComponents {
  double v_q1;        // speed of the merger when it passes the reference point
  double sigma;       // empty-space (no passing) duration
  double pi;          // queued-then-discharging duration
  double mu_q1s;      // average rate over pi
  double remainder;   // time at full capacity, h_r - sigma - pi
  double h_r;
};

struct DischargeResult {
  double theta;
  double mu_eff;
  DischargeComponents components;
};

// Scenario-1 building blocks.
double sigma_q1(double v_m, double v_q1, double v_u, double a_max);
double pi_q1(double v_q1, double v_u, double a_max, double w);
/// t_S - t_A: time for the dissipation wave to cover the Q1..A distance.
double dissipation_lag(double v_q1, double v_u, double a_max, double w);
double mu_q1s(double v_q1, const FundamentalDiagram& fd);

/// Capacity discount lambda*rho_r*(v_u - v_m)^2/(2*a_max*v_u).
double capacity_discount(double ramp_flow, double v_m, double v_u, double a_max);

/// mu*(1 - theta). Throws OverSaturatedError when theta >= 1.
DischargeResult effective_discharge_rate(const FundamentalDiagram& fd, const DemandProfile& demand,
                                         double v_m, double a_max, double t);

/// Raw five-period weighted average with reference speed v_q1 in [v_m, v_u].
/// Algebraically equal to effective_discharge_rate for every v_q1.
DischargeResult five_period_discharge(const FundamentalDiagram& fd, const DemandProfile& demand,
                                      double v_m, double v_q1, double a_max, double t);

/// Analytic derivative of mu' with respect to the merge speed.
double d_mu_d_vm(const FundamentalDiagram& fd, const DemandProfile& demand, double v_m,
                 double a_max, double t);

/// Free inputs of the upstream (D..M) scenario.
struct QueueState {
  double mu_vx;  // flow inside the queue, veh/s
  double omega;  // queuing wave speed magnitude, m/s
};

/// Default queue: congested-branch flow at the merger's mean speed over M..A,
/// and the wave between the arrival state and that queue.
QueueState default_queue_state(const FundamentalDiagram& fd, const DemandProfile& demand,
                               const EpisodeKinematics& kin);

/// Point D where the queuing wave from M meets the dissipation wave from A.
/// Empty when the two waves are parallel (omega == w).
std::optional<WaveCrossing> queue_tail_point(const FundamentalDiagram& fd,
                                             const EpisodeKinematics& kin, double omega);

/// Duration of the queued state at x_q2 in [x_D, x_M].
double pi_q2(const FundamentalDiagram& fd, const EpisodeKinematics& kin, double x_q2,
             double omega);

struct Scenario2Parts {
  double mu1;  // reference-point independent part
  double mu2;  // part linear in x_q2
  double mu_eff() const noexcept { return mu1 + mu2; }
};

Scenario2Parts scenario2_parts(const FundamentalDiagram& fd, const EpisodeKinematics& kin,
                               double x_q2, const QueueState& queue);

/// Effective rate for a reference point between D and M.
double scenario2_mu(const FundamentalDiagram& fd, const EpisodeKinematics& kin, double x_q2,
                    const QueueState& queue);

struct ProfilePoint {
  double x;
  double mu_eff;
};

struct DischargeProfile {
  std::vector<ProfilePoint> points;
  std::optional<double> x_d;  // empty when the queue never closes upstream
  double x_m;
  double x_a;
  QueueState queue;

  double minimum() const;
};

/// Effective rate as a function of the reference location, sampled from
/// upstream of D to downstream of A.
DischargeProfile discharge_profile(const FundamentalDiagram& fd, const DemandProfile& demand,
                                   const EpisodeKinematics& kin, int sample_count,
                                   std::optional<QueueState> queue = std::nullopt);

}  // namespace merge
