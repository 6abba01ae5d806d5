#include "merge/discharge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "merge/errors.hpp"

namespace merge {

namespace {

constexpr double kOrderTol = 1e-12;
// Smallest queuing-wave speed kept when the arrival state sits above the queue
// flow; the wave then effectively stays at M.
constexpr double kMinOmega = 1e-6;
constexpr double kParallelTol = 1e-9;

void check_speed_order(double lo, double mid, double hi) {
  if (mid < lo - kOrderTol || hi < mid - kOrderTol) {
    throw DomainError("speeds must satisfy v_m <= v_q1 <= v_u");
  }
}

double theta_or_throw(double ramp_flow, double v_m, double v_u, double a_max) {
  const double theta = capacity_discount(ramp_flow, v_m, v_u, a_max);
  if (theta >= 1.0) {
    throw OverSaturatedError("over-saturated episode: capacity discount >= 1");
  }
  return theta;
}

}  // namespace

EpisodeKinematics EpisodeKinematics::from_merge(double t_m, double x_m, double v_m, double v_u,
                                                double a_max, double h_r) {
  if (!(h_r > 0.0)) {
    throw DomainError("episode length must be positive");
  }
  const auto seg = acceleration_segment(v_m, v_u, a_max);
  EpisodeKinematics k;
  k.t_m = t_m;
  k.x_m = x_m;
  k.v_m = v_m;
  k.t_a = t_m + seg.duration;
  k.x_a = x_m + seg.distance;
  k.v_u = v_u;
  k.a_max = a_max;
  k.h_r = h_r;
  return k;
}

double sigma_q1(double v_m, double v_q1, double v_u, double a_max) {
  check_speed_order(v_m, v_q1, v_u);
  const double s = (v_q1 - v_m) / a_max - (v_q1 * v_q1 - v_m * v_m) / (2.0 * a_max * v_u);
  return std::max(0.0, s);
}

double dissipation_lag(double v_q1, double v_u, double a_max, double w) {
  if (v_q1 > v_u + kOrderTol) {
    throw DomainError("v_q1 must not exceed v_u");
  }
  return (v_u * v_u - v_q1 * v_q1) / (2.0 * a_max * w);
}

double pi_q1(double v_q1, double v_u, double a_max, double w) {
  return dissipation_lag(v_q1, v_u, a_max, w) + (v_u - v_q1) / a_max;
}

double mu_q1s(double v_q1, const FundamentalDiagram& fd) {
  if (v_q1 > fd.v_u() + kOrderTol) {
    throw DomainError("v_q1 must not exceed v_u");
  }
  const double s = fd.v_u() + v_q1;
  return fd.w() * fd.k_j() * s / (s + 2.0 * fd.w());
}

double capacity_discount(double ramp_flow, double v_m, double v_u, double a_max) {
  if (v_m > v_u + kOrderTol) {
    throw DomainError("merge speed exceeds cruise speed");
  }
  if (!(a_max > 0.0)) {
    throw DomainError("a_max must be positive");
  }
  const double dv = v_u - v_m;
  return ramp_flow * dv * dv / (2.0 * a_max * v_u);
}

DischargeResult effective_discharge_rate(const FundamentalDiagram& fd, const DemandProfile& demand,
                                         double v_m, double a_max, double t) {
  const double ramp = demand.ramp_flow(t);
  const double theta = theta_or_throw(ramp, v_m, fd.v_u(), a_max);

  DischargeResult r;
  r.theta = theta;
  r.mu_eff = fd.mu() * (1.0 - theta);
  // Components reported at the merge point itself (v_q1 = v_m).
  r.components.v_q1 = v_m;
  r.components.sigma = 0.0;
  r.components.pi = pi_q1(v_m, fd.v_u(), a_max, fd.w());
  r.components.mu_q1s = mu_q1s(v_m, fd);
  r.components.h_r = ramp > 0.0 ? 1.0 / ramp : std::numeric_limits<double>::infinity();
  r.components.remainder = r.components.h_r - r.components.pi;
  return r;
}

DischargeResult five_period_discharge(const FundamentalDiagram& fd, const DemandProfile& demand,
                                      double v_m, double v_q1, double a_max, double t) {
  const double v_u = fd.v_u();
  check_speed_order(v_m, v_q1, v_u);
  const double h_r = episode_headway(demand, t);
  const double theta = theta_or_throw(demand.ramp_flow(t), v_m, v_u, a_max);

  DischargeComponents c;
  c.v_q1 = v_q1;
  c.h_r = h_r;
  c.sigma = sigma_q1(v_m, v_q1, v_u, a_max);
  c.pi = pi_q1(v_q1, v_u, a_max, fd.w());
  c.mu_q1s = mu_q1s(v_q1, fd);
  c.remainder = h_r - c.sigma - c.pi;

  // No vehicle passes during sigma.
  const double passed = c.sigma * 0.0 + c.pi * c.mu_q1s + c.remainder * fd.mu();
  return {theta, passed / h_r, c};
}

double d_mu_d_vm(const FundamentalDiagram& fd, const DemandProfile& demand, double v_m,
                 double a_max, double t) {
  const double v_u = fd.v_u();
  if (v_m > v_u + kOrderTol) {
    throw DomainError("merge speed exceeds cruise speed");
  }
  return fd.mu() * demand.ramp_flow(t) * (v_u - v_m) / (a_max * v_u);
}

QueueState default_queue_state(const FundamentalDiagram& fd, const DemandProfile& demand,
                               const EpisodeKinematics& kin) {
  const double v_bar = 0.5 * (kin.v_m + kin.v_u);
  QueueState q;
  q.mu_vx = fd.congested_flow(v_bar);

  const double arrival = std::min(demand.lambda(kin.t_m), fd.mu());
  const FlowState upstream{arrival, arrival / fd.v_u()};
  const FlowState queued{q.mu_vx, fd.congested_density(v_bar)};
  const double signed_speed = shockwave_speed(upstream, queued);
  q.omega = std::clamp(-signed_speed, kMinOmega, fd.w());
  if (q.omega > fd.w() * (1.0 - kParallelTol)) {
    q.omega = fd.w();
  }
  return q;
}

std::optional<WaveCrossing> queue_tail_point(const FundamentalDiagram& fd,
                                             const EpisodeKinematics& kin, double omega) {
  if (omega >= fd.w() * (1.0 - kParallelTol)) {
    return std::nullopt;
  }
  const ShockwaveLine queuing{kin.t_m, kin.x_m, -omega};
  const ShockwaveLine dissipation{kin.t_a, kin.x_a, -fd.w()};
  try {
    return shockwave_intersection(queuing, dissipation);
  } catch (const NoIntersectionError&) {
    return std::nullopt;
  }
}

double pi_q2(const FundamentalDiagram& fd, const EpisodeKinematics& kin, double x_q2,
             double omega) {
  const double w = fd.w();
  return (kin.t_a - kin.t_m + kin.x_a / w - kin.x_m / omega) - x_q2 * (1.0 / w - 1.0 / omega);
}

Scenario2Parts scenario2_parts(const FundamentalDiagram& fd, const EpisodeKinematics& kin,
                               double x_q2, const QueueState& queue) {
  const double w = fd.w();
  const double mu = fd.mu();
  if (!(queue.omega > 0.0) || queue.omega > w * (1.0 + 1e-12)) {
    throw DomainError("queuing wave speed must lie in (0, w]");
  }
  if (queue.mu_vx < 0.0 || queue.mu_vx > mu * (1.0 + 1e-12)) {
    throw DomainError("queue flow must lie in [0, mu]");
  }
  const auto d = queue_tail_point(fd, kin, queue.omega);
  const double span = std::max(1.0, std::abs(kin.x_m)) * 1e-9;
  if (x_q2 > kin.x_m + span || (d && x_q2 < d->x - span)) {
    throw DomainError("reference point must lie between D and M");
  }

  const double shortfall = (mu - queue.mu_vx) / kin.h_r;
  const double fixed = kin.t_a - kin.t_m + kin.x_a / w - kin.x_m / queue.omega;
  Scenario2Parts parts;
  parts.mu1 = mu - fixed * shortfall;
  parts.mu2 = x_q2 * (1.0 / w - 1.0 / queue.omega) * shortfall;
  // At D the queued interval vanishes.
  if (d && x_q2 <= d->x) {
    parts.mu1 = mu;
    parts.mu2 = 0.0;
  }
  return parts;
}

double scenario2_mu(const FundamentalDiagram& fd, const EpisodeKinematics& kin, double x_q2,
                    const QueueState& queue) {
  return scenario2_parts(fd, kin, x_q2, queue).mu_eff();
}

double DischargeProfile::minimum() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    m = std::min(m, p.mu_eff);
  }
  return m;
}

DischargeProfile discharge_profile(const FundamentalDiagram& fd, const DemandProfile& demand,
                                   const EpisodeKinematics& kin, int sample_count,
                                   std::optional<QueueState> queue) {
  if (sample_count < 2) {
    throw DomainError("profile needs at least two samples");
  }
  DischargeProfile prof;
  prof.queue = queue ? *queue : default_queue_state(fd, demand, kin);
  prof.x_m = kin.x_m;
  prof.x_a = kin.x_a;
  const auto d = queue_tail_point(fd, kin, prof.queue.omega);
  const bool queue_upstream = !d || d->x < kin.x_m;
  if (d && queue_upstream) {
    prof.x_d = d->x;
  }

  const double mu_bottleneck =
      effective_discharge_rate(fd, demand, kin.v_m, kin.a_max, kin.t_m).mu_eff;
  const double upstream_span =
      std::max({10.0, kin.x_a - kin.x_m, prof.x_d ? kin.x_m - *prof.x_d : 0.0});
  const double x_lo = kin.x_m - 1.25 * upstream_span;
  const double x_hi = kin.x_a + 0.25 * std::max(1.0, kin.x_a - kin.x_m);

  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(sample_count) + 3);
  for (int i = 0; i < sample_count; ++i) {
    xs.push_back(x_lo + (x_hi - x_lo) * i / (sample_count - 1));
  }
  xs.push_back(kin.x_m);
  xs.push_back(kin.x_a);
  if (prof.x_d) {
    xs.push_back(*prof.x_d);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  for (double x : xs) {
    double mu_x;
    if (x > kin.x_a) {
      mu_x = mu_bottleneck;
    } else if (x > kin.x_m) {
      const double v_q1 =
          std::min(kin.v_u, std::sqrt(kin.v_m * kin.v_m + 2.0 * kin.a_max * (x - kin.x_m)));
      mu_x = five_period_discharge(fd, demand, kin.v_m, v_q1, kin.a_max, kin.t_m).mu_eff;
    } else if (!queue_upstream || (prof.x_d && x < *prof.x_d)) {
      mu_x = fd.mu();
    } else {
      mu_x = scenario2_mu(fd, kin, x, prof.queue);
    }
    prof.points.push_back({x, mu_x});
  }
  return prof;
}

}  // namespace merge
