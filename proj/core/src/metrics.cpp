#include "merge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "merge/errors.hpp"

namespace merge {

double critical_headway(double v, const VehicleParams& params, double v_u) {
  if (v < 0.0) {
    throw DomainError("speed must be non-negative");
  }
  return params.tau + v_u / params.b_max + v / params.b_max;
}

double gap_probability(const DemandProfile& demand, double v, const VehicleParams& params,
                       double v_u, double t) {
  const double rate = demand.mainline_flow(t);
  return std::exp(-rate * critical_headway(v, params, v_u));
}

namespace {

// Exact integral of a piecewise-constant demand over [a, b].
double arrivals_between(const DemandProfile& demand, double a, double b) {
  const auto& pieces = demand.pieces();
  double total = 0.0;
  double cursor = a;
  for (std::size_t i = 0; i < pieces.size() && cursor < b; ++i) {
    const double next = i + 1 < pieces.size() ? pieces[i + 1].t_start
                                              : std::numeric_limits<double>::infinity();
    if (next <= cursor) {
      continue;
    }
    const double hi = std::min(b, next);
    total += demand.lambda(cursor) * (hi - cursor);
    cursor = hi;
  }
  return total;
}

}  // namespace

QueueProfile queue_profile(const DemandProfile& demand, const RateFunction& mu_eff, double t0,
                           double t_end, double dt) {
  if (!(dt > 0.0)) {
    throw DomainError("dt must be positive");
  }
  if (t_end < t0) {
    throw DomainError("t_end precedes t0");
  }
  QueueProfile out;
  out.t0 = t0;
  out.dt = dt;
  out.t_clear = t_end;
  const auto n = static_cast<std::size_t>(std::llround((t_end - t0) / dt));
  out.samples.reserve(n + 1);
  out.samples.push_back({t0, 0.0});

  double q = 0.0;
  bool was_positive = false;
  double mu_prev = mu_eff(t0);
  for (std::size_t i = 1; i <= n; ++i) {
    const double ta = t0 + dt * static_cast<double>(i - 1);
    const double tb = t0 + dt * static_cast<double>(i);
    const double mu_next = mu_eff(tb);
    const double served = 0.5 * (mu_prev + mu_next) * dt;
    const double raw = q + arrivals_between(demand, ta, tb) - served;
    if (raw <= 0.0) {
      if (was_positive && !out.cleared) {
        out.cleared = true;
        out.t_clear = ta + dt * q / (q - raw);
      }
      q = 0.0;
    } else {
      q = raw;
      was_positive = true;
    }
    out.samples.push_back({tb, q});
    mu_prev = mu_next;
  }
  if (!was_positive) {
    out.cleared = true;
    out.t_clear = t0;
  }
  return out;
}

DelayResult total_delay(const QueueProfile& q) {
  DelayResult r;
  r.cleared = q.cleared;
  const auto& s = q.samples;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i].t <= q.t_clear) {
      r.veh_seconds += 0.5 * (s[i - 1].q + s[i].q) * (s[i].t - s[i - 1].t);
    } else {
      // Partial step up to the crossing; the queue is linear within it.
      if (s[i - 1].t < q.t_clear) {
        r.veh_seconds += 0.5 * s[i - 1].q * (q.t_clear - s[i - 1].t);
      }
      break;
    }
  }
  return r;
}

double drac(double v_follow, double v_lead, double gap_net) {
  if (gap_net <= 0.0) {
    throw CollisionError("non-positive net gap");
  }
  const double dv = v_follow - v_lead;
  return dv > 0.0 ? dv * dv / gap_net : 0.0;
}

double crash_risk(const CrashTrace& trace, double dt) {
  double total = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    double now = 0.0;
    for (const auto& p : trace.steps[i]) {
      now += drac(p.dv, 0.0, p.gap);
    }
    if (i > 0) {
      total += 0.5 * (prev + now) * dt;
    }
    prev = now;
  }
  return total;
}

CrashTrace conflict_trace(const ConflictSetup& setup, const FundamentalDiagram& fd,
                          const VehicleParams& mainline) {
  if (!(setup.dt > 0.0) || setup.horizon < 0.0) {
    throw DomainError("conflict trace needs dt > 0 and a non-negative horizon");
  }
  const double dt = setup.dt;
  const double v_u = fd.v_u();
  const auto n_steps = static_cast<std::size_t>(std::llround(setup.horizon / dt));
  const std::size_t n_veh = setup.followers.size() + 1;

  // Vehicle 0 is the merger; history before t_m is constant speed.
  std::vector<double> x0(n_veh), v0(n_veh);
  x0[0] = setup.x_m;
  v0[0] = setup.v_m;
  for (std::size_t j = 1; j < n_veh; ++j) {
    x0[j] = setup.followers[j - 1].x;
    v0[j] = setup.followers[j - 1].v;
  }
  std::vector<std::vector<double>> xs(n_veh, std::vector<double>(n_steps + 1));
  std::vector<std::vector<double>> vs(n_veh, std::vector<double>(n_steps + 1));

  auto position = [&](std::size_t j, double t) {
    const double u = (t - setup.t_m) / dt;
    if (u <= 0.0) {
      return x0[j] + v0[j] * (t - setup.t_m);
    }
    const auto i = static_cast<std::size_t>(u);
    if (i >= n_steps) {
      return xs[j][n_steps];
    }
    const double f = u - static_cast<double>(i);
    return xs[j][i] + f * (xs[j][i + 1] - xs[j][i]);
  };

  for (std::size_t j = 0; j < n_veh; ++j) {
    xs[j][0] = x0[j];
    vs[j][0] = v0[j];
  }
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double t_next = setup.t_m + dt * static_cast<double>(i + 1);
    {
      const double v = vs[0][i];
      const double v_new = std::min(v_u, v + mainline.a_max * dt);
      xs[0][i + 1] = xs[0][i] + 0.5 * (v + v_new) * dt;
      vs[0][i + 1] = v_new;
    }
    for (std::size_t j = 1; j < n_veh; ++j) {
      const double x = xs[j][i];
      const double v = vs[j][i];
      const double shadow = position(j - 1, t_next - mainline.tau) - mainline.d_n;
      const double target = std::min(x + v_u * dt, shadow);
      const double v_des = (target - x) / dt;
      const double v_new = std::clamp(v_des, std::max(0.0, v - mainline.b_max * dt),
                                      std::min(v_u, v + mainline.a_max * dt));
      xs[j][i + 1] = x + v_new * dt;
      vs[j][i + 1] = v_new;
    }
  }

  CrashTrace trace;
  trace.t0 = setup.t_m;
  trace.dt = dt;
  trace.min_gap = std::numeric_limits<double>::infinity();
  trace.steps.resize(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    bool collided = false;
    for (std::size_t j = 1; j < n_veh; ++j) {
      const double gap = xs[j - 1][i] - xs[j][i] - mainline.length;
      if (j == 1) {
        trace.min_gap = std::min(trace.min_gap, gap);
      }
      if (gap <= 0.0) {
        collided = true;
        continue;
      }
      trace.steps[i].push_back({static_cast<int>(j - 1), static_cast<int>(j),
                                vs[j][i] - vs[j - 1][i], gap});
    }
    if (collided) {
      ++trace.collisions;
    }
  }
  for (std::size_t j = 1; j < n_veh; ++j) {
    for (std::size_t i = 0; i <= n_steps; ++i) {
      const double free_x = x0[j] + v0[j] * dt * static_cast<double>(i);
      if (free_x - xs[j][i] > 0.1) {
        ++trace.affected;
        break;
      }
    }
  }
  return trace;
}

}  // namespace merge
