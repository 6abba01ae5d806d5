#include "merge/episode_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "merge/discharge.hpp"
#include "merge/errors.hpp"

namespace merge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Time at which a sampled trajectory first reaches `x`, linearly interpolated.
std::optional<double> crossing_time(const std::vector<double>& xs, double t0, double dt,
                                    double x) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] >= x && xs[i - 1] < x) {
      const double f = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
      return t0 + dt * (static_cast<double>(i - 1) + f);
    }
  }
  if (!xs.empty() && xs.front() >= x) {
    return t0;
  }
  return std::nullopt;
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  unsigned workers = threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) {
            error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace

// ---------------------------------------------------------------------------

bool episodes_separate(const FundamentalDiagram& fd, double v_m, double ramp_flow, double a_max) {
  if (!(ramp_flow > 0.0)) {
    return true;
  }
  return pi_q1(v_m, fd.v_u(), a_max, fd.w()) <= 1.0 / ramp_flow;
}

OracleResult discharge_oracle(const FundamentalDiagram& fd, double v_m, double ramp_flow,
                              double a_max, const OracleConfig& cfg) {
  if (!(ramp_flow > 0.0)) {
    throw InfiniteEpisodeError("oracle needs a positive ramp flow");
  }
  if (cfg.episodes < 2 || !(cfg.dt > 0.0) || !(cfg.x_up < cfg.x_m)) {
    throw DomainError("oracle needs >= 2 episodes, dt > 0 and x_up < x_m");
  }
  const double v_u = fd.v_u();
  const double d_n = 1.0 / fd.k_j();
  const double tau = d_n / fd.w();
  const double h_r = 1.0 / ramp_flow;
  const auto seg = acceleration_segment(v_m, v_u, a_max);
  const double x_a = cfg.x_m + seg.distance;
  const double x_down = x_a + cfg.clearance;
  const double theta = capacity_discount(ramp_flow, v_m, v_u, a_max);
  if (theta >= 1.0) {
    throw OverSaturatedError("over-saturated episode: capacity discount >= 1");
  }

  const double horizon = cfg.warmup + (cfg.episodes + 3) * h_r + (x_down - cfg.x_up) / v_u +
                         seg.duration + 60.0;
  const auto n = static_cast<std::size_t>(std::ceil(horizon / cfg.dt)) + 1;
  const double lag = tau / cfg.dt;
  const auto lag_i = static_cast<std::size_t>(std::floor(lag));
  const double lag_f = lag - static_cast<double>(lag_i);

  std::vector<double> prev(n), cur(n), shadow(n);
  auto make_shadow = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      // Before t = 0 the leader sits at its initial position.
      double p;
      if (i < lag_i + 1) {
        p = prev[0];
      } else {
        const std::size_t j = i - lag_i;
        p = prev[j] - lag_f * (prev[j] - prev[j - 1]);
      }
      shadow[i] = p - d_n;
    }
  };

  std::vector<double> crossings;
  std::vector<bool> is_merger;
  int inserted = 0;
  const int to_insert = cfg.episodes + 2;
  double nominal = cfg.warmup + 0.5 * h_r;
  bool first = true;

  while (true) {
    bool merger = false;
    if (first) {
      for (std::size_t i = 0; i < n; ++i) {
        cur[i] = cfg.x_up + v_u * cfg.dt * static_cast<double>(i);
      }
      first = false;
    } else {
      make_shadow();
      std::optional<double> t_c;
      if (inserted < to_insert) {
        t_c = crossing_time(shadow, 0.0, cfg.dt, cfg.x_m);
      }
      if (t_c && *t_c >= nominal) {
        const double t_m = *t_c;
        for (std::size_t i = 0; i < n; ++i) {
          const double s = cfg.dt * static_cast<double>(i) - t_m;
          double g;
          if (s <= 0.0) {
            g = cfg.x_m + v_m * s;
          } else if (s <= seg.duration) {
            g = cfg.x_m + v_m * s + 0.5 * a_max * s * s;
          } else {
            g = x_a + v_u * (s - seg.duration);
          }
          cur[i] = std::min(g, shadow[i]);
        }
        merger = true;
        ++inserted;
        nominal = cfg.warmup + (inserted + 0.5) * h_r;
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          cur[i] = std::min(cfg.x_up + v_u * cfg.dt * static_cast<double>(i), shadow[i]);
        }
      }
    }
    const auto t_down = crossing_time(cur, 0.0, cfg.dt, x_down);
    if (!t_down) {
      break;
    }
    crossings.push_back(*t_down);
    is_merger.push_back(merger);
    std::swap(prev, cur);
  }

  std::vector<std::size_t> merger_idx;
  for (std::size_t i = 0; i < is_merger.size(); ++i) {
    if (is_merger[i]) {
      merger_idx.push_back(i);
    }
  }
  if (merger_idx.size() < 3) {
    throw DomainError("oracle horizon too short to observe two full episodes");
  }
  const std::size_t i1 = merger_idx[1];
  const std::size_t i2 = merger_idx.back();
  OracleResult r;
  r.vehicles = static_cast<int>(i2 - i1);
  r.duration = crossings[i2] - crossings[i1];
  r.empirical_mu = r.vehicles / r.duration;
  r.theta = theta;
  r.closed_form_mu = fd.mu() * (1.0 - theta);
  return r;
}

// ---------------------------------------------------------------------------

double merge_delay(const ExperimentConfig& cfg, double v_m) {
  const double mu_eff =
      effective_discharge_rate(cfg.fd, cfg.demand, v_m, cfg.dp.a_max, 0.0).mu_eff;
  const double dt = std::min(0.5, cfg.delay_horizon / 10.0);
  const auto q = queue_profile(
      cfg.demand, [mu_eff](double) { return mu_eff; }, 0.0, cfg.delay_horizon, dt);
  return total_delay(q).veh_seconds;
}

CostComponents merge_components(const ExperimentConfig& cfg, const GapScenario& scenario, int k,
                                const MergeState& s) {
  const double t_m = k * cfg.dp.dt;
  const double h_r = cfg.episode_length();
  ConflictSetup setup;
  setup.t_m = t_m;
  setup.x_m = s.d;
  setup.v_m = s.v;
  setup.horizon = h_r;
  setup.dt = cfg.dt_sim;
  setup.followers = scenario.lag_vehicles(t_m, s.d, cfg.fd.v_u(), h_r);
  const CrashTrace trace = conflict_trace(setup, cfg.fd, cfg.mainline);

  CostComponents c;
  c.delay = merge_delay(cfg, s.v);
  c.saturated = trace.min_gap <= cfg.risk_saturation_gap;
  c.risk = c.saturated ? 0.0 : crash_risk(trace, trace.dt);
  return c;
}

GapScenario sample_scenario(const ExperimentConfig& cfg, std::uint64_t seed) {
  const double span = cfg.dp.steps() * cfg.dp.dt + 2.0 * cfg.episode_length() + 60.0;
  return GapScenario::sample(seed, cfg.demand.mainline_flow(0.0), -60.0, span);
}

MergeProblem build_problem(const ExperimentConfig& cfg, const GapScenario& scenario) {
  // Reject the configuration up front if even the slowest merge overflows.
  effective_discharge_rate(cfg.fd, cfg.demand, cfg.dp.v0, cfg.dp.a_max, 0.0);

  const GapRule rule = cfg.gap;
  const double dt = cfg.dp.dt;
  auto gap = [scenario, rule, dt](int k, const MergeState& s) {
    return scenario.acceptable(k * dt, s.d, s.v, rule);
  };
  auto components = [cfg, scenario](int k, const MergeState& s) {
    return merge_components(cfg, scenario, k, s);
  };
  return MergeProblem(cfg.dp, gap, components);
}

// ---------------------------------------------------------------------------

namespace {

struct PlatoonVehicle {
  int id;
  bool merger;
  double t_start;  // free history x_start + v_start*(t - t_start) before this
  double x_start;
  double v_start;
};

struct PlatoonRun {
  double t0;
  double dt;
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> v;
  bool collision = false;
};

PlatoonRun run_platoon(const std::vector<PlatoonVehicle>& veh, const ExperimentConfig& cfg,
                       double t0, std::size_t steps, double a_merge) {
  const double dt = cfg.dt_sim;
  const double v_u = cfg.fd.v_u();
  const auto& p = cfg.mainline;
  PlatoonRun run{t0, dt, {}, {}, false};
  run.x.assign(veh.size(), std::vector<double>(steps + 1));
  run.v.assign(veh.size(), std::vector<double>(steps + 1));

  auto history = [&](std::size_t j, double t) {
    return veh[j].x_start + veh[j].v_start * (t - veh[j].t_start);
  };
  auto position = [&](std::size_t j, double t) {
    const double u = (t - t0) / dt;
    if (u <= 0.0) {
      return history(j, t);
    }
    const auto i = static_cast<std::size_t>(u);
    if (i >= steps) {
      return run.x[j][steps];
    }
    const double f = u - static_cast<double>(i);
    return run.x[j][i] + f * (run.x[j][i + 1] - run.x[j][i]);
  };

  for (std::size_t j = 0; j < veh.size(); ++j) {
    run.x[j][0] = history(j, t0);
    run.v[j][0] = veh[j].v_start;
  }
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = t0 + dt * static_cast<double>(i);
    const double t_next = t + dt;
    for (std::size_t j = 0; j < veh.size(); ++j) {
      if (t_next <= veh[j].t_start) {
        run.x[j][i + 1] = history(j, t_next);
        run.v[j][i + 1] = veh[j].v_start;
        continue;
      }
      const double x = run.x[j][i];
      const double v = run.v[j][i];
      const double accel = veh[j].merger ? a_merge : p.a_max;
      double target = x + v_u * dt;
      if (j > 0) {
        target = std::min(target, position(j - 1, t_next - p.tau) - p.d_n);
      }
      const double v_des = (target - x) / dt;
      const double v_new =
          std::clamp(v_des, std::max(0.0, v - p.b_max * dt), std::min(v_u, v + accel * dt));
      run.x[j][i + 1] = x + v_new * dt;
      run.v[j][i + 1] = v_new;
      if (j > 0 && position(j - 1, t_next) - run.x[j][i + 1] - p.length <= 0.0) {
        run.collision = true;
      }
    }
  }
  return run;
}

}  // namespace

EpisodeResult simulate_episode(const PolicyPath& path, const GapScenario& scenario,
                               const ExperimentConfig& cfg) {
  if (path.merge_step < 0) {
    throw DomainError("policy path contains no merge");
  }
  const double v_u = cfg.fd.v_u();
  const double h_r = cfg.episode_length();
  const double t_m = path.merge_step * cfg.dp.dt;
  const double x_m = path.merge_state.d;
  const double v_m = path.merge_state.v;
  const double x_down = cfg.geometry.x_down;

  const double t0 = t_m - 2.0 * h_r;
  const double t1 = t_m + 2.0 * h_r + x_down / v_u + 60.0;
  const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / cfg.dt_sim));

  // Mainline vehicles that are between the merge area and x_down during the episode.
  std::vector<PlatoonVehicle> mainline;
  int next_id = 0;
  for (double p : scenario.passages()) {
    if (p < t_m - 2.0 * h_r - x_down / v_u || p > t_m + 2.0 * h_r) {
      continue;
    }
    mainline.push_back({next_id++, false, t0, v_u * (t0 - p), v_u});
  }
  const double merge_shift = x_m / v_u;
  const auto lead_count = static_cast<std::size_t>(
      std::count_if(scenario.passages().begin(), scenario.passages().end(), [&](double p) {
        return p >= t_m - 2.0 * h_r - x_down / v_u && p + merge_shift <= t_m;
      }));

  std::vector<PlatoonVehicle> with_merger = mainline;
  const PlatoonVehicle merger{-1, true, t_m, x_m, v_m};
  with_merger.insert(with_merger.begin() + static_cast<std::ptrdiff_t>(lead_count), merger);

  const PlatoonRun base = run_platoon(mainline, cfg, t0, steps, cfg.dp.a_max);
  const PlatoonRun run = run_platoon(with_merger, cfg, t0, steps, cfg.dp.a_max);

  EpisodeResult out;
  out.t_m = t_m;
  out.x_m = x_m;
  out.v_m = v_m;
  out.collision = run.collision;
  out.episode_duration = h_r;

  // Delay: crossing-time differences at x_down for mainline vehicles.
  for (std::size_t j = 0; j < mainline.size(); ++j) {
    const std::size_t jr = j < lead_count ? j : j + 1;
    const auto a = crossing_time(run.x[jr], t0, cfg.dt_sim, x_down);
    const auto b = crossing_time(base.x[j], t0, cfg.dt_sim, x_down);
    if (a && b) {
      out.delay += std::max(0.0, *a - *b);
    }
  }

  // Throughput in the episode window that starts with the merger at x_down.
  const auto t_merge_down = crossing_time(run.x[lead_count], t0, cfg.dt_sim, x_down);
  if (t_merge_down) {
    for (std::size_t j = 0; j < with_merger.size(); ++j) {
      const auto c = crossing_time(run.x[j], t0, cfg.dt_sim, x_down);
      if (c && *c >= *t_merge_down && *c < *t_merge_down + h_r) {
        ++out.vehicle_count_downstream;
      }
    }
  }
  out.empirical_mu = out.vehicle_count_downstream / h_r;

  // Conflict trace: merger and its lag platoon over [t_m, t_m + h_r].
  CrashTrace trace;
  trace.t0 = t_m;
  trace.dt = cfg.dt_sim;
  const auto i_start = static_cast<std::size_t>(std::ceil((t_m - t0) / cfg.dt_sim - 1e-9));
  const auto span = static_cast<std::size_t>(std::llround(h_r / cfg.dt_sim));
  const auto i_end = std::min(steps, i_start + span);
  std::size_t last_follower = lead_count;
  for (std::size_t j = lead_count + 1; j < with_merger.size(); ++j) {
    const double pass_time = t0 - with_merger[j].x_start / v_u + merge_shift;
    if (pass_time <= t_m + h_r) {
      last_follower = j;
    }
  }
  for (std::size_t i = i_start; i <= i_end; ++i) {
    std::vector<FollowPair> pairs;
    for (std::size_t j = lead_count + 1; j <= last_follower; ++j) {
      const double gap = run.x[j - 1][i] - run.x[j][i] - cfg.mainline.length;
      if (gap > 0.0) {
        pairs.push_back({static_cast<int>(j - 1), static_cast<int>(j),
                         run.v[j][i] - run.v[j - 1][i], gap});
      } else {
        ++trace.collisions;
      }
    }
    trace.steps.push_back(std::move(pairs));
  }
  for (std::size_t j = lead_count + 1; j <= last_follower; ++j) {
    for (std::size_t i = 0; i <= steps; ++i) {
      if (std::abs(run.x[j][i] - base.x[j - 1][i]) > 0.1) {
        ++trace.affected;
        break;
      }
    }
  }
  out.affected = trace.affected;
  out.risk = crash_risk(trace, cfg.dt_sim);

  for (std::size_t j = 0; j < with_merger.size(); ++j) {
    out.trajectories.push_back(
        {with_merger[j].id, with_merger[j].merger, Trajectory(t0, cfg.dt_sim, run.x[j])});
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::dp:
      return "dp";
    case PolicyKind::early:
      return "early";
    case PolicyKind::late:
      return "late";
  }
  return "?";
}

PolicyKind policy_from_string(const std::string& s) {
  if (s == "dp") return PolicyKind::dp;
  if (s == "early") return PolicyKind::early;
  if (s == "late") return PolicyKind::late;
  throw ConfigError("policy", "unknown policy '" + s + "'");
}

const PolicySummary& BatchSummary::summary(PolicyKind p) const {
  for (const auto& s : policies) {
    if (s.policy == p) {
      return s;
    }
  }
  throw DomainError("policy not present in batch: " + to_string(p));
}

std::uint64_t run_seed(std::uint64_t master_seed, int run) {
  // splitmix64 over (master, run)
  std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(run) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

struct RunState {
  GapScenario scenario;
  MergeProblem problem;
  PolicyPath early;
  PolicyPath late;
  PolicyPath dp;
};

// Both components have a natural zero, so only the upper bounds are pooled.
// Saturated risks are excluded from the bound and score above 1.
Normalization pooled_bounds(const std::vector<const CostComponents*>& pool, double cap) {
  Normalization n;
  n.risk_cap = cap;
  n.w_lo = n.s_lo = 0.0;
  n.w_hi = n.s_hi = 0.0;
  for (const auto* c : pool) {
    n.w_hi = std::max(n.w_hi, c->delay);
    if (!c->saturated) {
      n.s_hi = std::max(n.s_hi, c->risk);
    }
  }
  if (!(n.w_hi > 0.0)) n.w_hi = 1.0;
  if (!(n.s_hi > 0.0)) n.s_hi = 1.0;
  return n;
}

double risk_cap(const std::vector<RunState>& runs, const ExperimentConfig& cfg) {
  std::vector<double> risks;
  for (const auto& r : runs) {
    for (const auto* p : {&r.early, &r.late}) {
      if (!p->components.saturated) {
        risks.push_back(p->components.risk);
      }
    }
  }
  double q = 0.0;
  if (!risks.empty()) {
    std::sort(risks.begin(), risks.end());
    const auto rank = static_cast<std::size_t>(
        std::ceil(cfg.risk_cap_quantile * static_cast<double>(risks.size())));
    q = risks[std::clamp<std::size_t>(rank, 1, risks.size()) - 1];
  }
  if (!(q > 0.0)) {
    q = 1.0;
  }
  return cfg.risk_cap_factor * q;
}

}  // namespace

std::vector<BatchSummary> monte_carlo(const std::vector<PolicyKind>& policies, int runs,
                                      std::uint64_t master_seed, const std::vector<double>& phis,
                                      const ExperimentConfig& cfg) {
  if (runs < 1) {
    throw ConfigError("runs", "must be at least 1");
  }
  if (policies.empty()) {
    throw ConfigError("policy", "no policies requested");
  }
  for (double phi : phis) {
    CostWeights{phi}.validate();
  }

  const auto n_runs = static_cast<std::size_t>(runs);
  std::vector<std::optional<RunState>> slots(n_runs);
  const CostWeights neutral{0.5};
  const Normalization unit{};
  parallel_for(n_runs, cfg.threads, [&](std::size_t i) {
    GapScenario sc = sample_scenario(cfg, run_seed(master_seed, static_cast<int>(i)));
    MergeProblem prob = build_problem(cfg, sc);
    PolicyPath e = early_merge_policy(prob, neutral, unit);
    PolicyPath l = late_merge_policy(prob, neutral, unit);
    slots[i].emplace(RunState{std::move(sc), std::move(prob), std::move(e), std::move(l), {}});
  });
  std::vector<RunState> state;
  state.reserve(n_runs);
  for (auto& s : slots) {
    state.push_back(std::move(*s));
  }
  const double cap = risk_cap(state, cfg);

  std::vector<BatchSummary> out;
  for (double phi : phis) {
    const CostWeights w{phi};
    std::vector<const CostComponents*> pool;
    for (const auto& r : state) {
      pool.push_back(&r.early.components);
      pool.push_back(&r.late.components);
    }
    Normalization norm = pooled_bounds(pool, cap);
    int rounds = 0;
    while (true) {
      ++rounds;
      parallel_for(n_runs, cfg.threads, [&](std::size_t i) {
        state[i].dp = solve_backward(state[i].problem, w, norm).path;
      });
      std::vector<const CostComponents*> all = pool;
      for (const auto& r : state) {
        all.push_back(&r.dp.components);
      }
      const Normalization next = pooled_bounds(all, cap);
      if (next == norm || rounds >= cfg.max_normalization_rounds) {
        break;
      }
      norm = next;
    }

    BatchSummary b;
    b.phi = phi;
    b.runs = runs;
    b.master_seed = master_seed;
    b.normalization = norm;
    b.normalization_rounds = rounds;
    for (PolicyKind kind : policies) {
      PolicySummary s{kind, 0.0, 0.0, 0.0};
      b.policies.push_back(s);
    }
    for (std::size_t i = 0; i < n_runs; ++i) {
      const auto& r = state[i];
      for (std::size_t pi = 0; pi < policies.size(); ++pi) {
        const PolicyPath& path = policies[pi] == PolicyKind::dp      ? r.dp
                                 : policies[pi] == PolicyKind::early ? r.early
                                                                     : r.late;
        RunRecord rec;
        rec.run = static_cast<int>(i);
        rec.policy = policies[pi];
        rec.t_m = path.merge_step * cfg.dp.dt;
        rec.x_m = path.merge_state.d;
        rec.v_m = path.merge_state.v;
        rec.components = path.components;
        rec.weighted_cost = norm.weighted(path.components, w);
        rec.scenario_hash = r.scenario.hash();
        b.records.push_back(rec);
        auto& s = b.policies[pi];
        s.mean_delay += rec.components.delay;
        s.mean_risk += norm.effective_risk(rec.components);
        s.mean_cost += rec.weighted_cost;
      }
    }
    for (auto& s : b.policies) {
      s.mean_delay /= runs;
      s.mean_risk /= runs;
      s.mean_cost /= runs;
    }
    out.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------------------

SweepParam sweep_param_from_string(const std::string& s) {
  if (s == "demand") return SweepParam::demand;
  if (s == "aux_length") return SweepParam::aux_length;
  if (s == "ramp_ratio") return SweepParam::ramp_ratio;
  throw ConfigError("param", "unknown sweep parameter '" + s + "'");
}

std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::demand:
      return "demand";
    case SweepParam::aux_length:
      return "aux_length";
    case SweepParam::ramp_ratio:
      return "ramp_ratio";
  }
  return "?";
}

ExperimentConfig with_param(const ExperimentConfig& cfg, SweepParam p, double value) {
  ExperimentConfig out = cfg;
  switch (p) {
    case SweepParam::demand:
      out.demand = DemandProfile(value, cfg.demand.rho_r());
      break;
    case SweepParam::aux_length:
      out.dp.aux_length = value;
      out.geometry.aux_length = value;
      out.geometry.validate();
      break;
    case SweepParam::ramp_ratio:
      out.demand = DemandProfile(cfg.arrival_rate(), value);
      break;
  }
  return out;
}

std::vector<double> sweep_grid(double from, double to, double step) {
  if (!(step > 0.0) || to < from) {
    throw ConfigError("step", "sweep needs step > 0 and to >= from");
  }
  std::vector<double> out;
  const auto n = static_cast<long long>(std::floor((to - from) / step + 1e-9));
  for (long long i = 0; i <= n; ++i) {
    out.push_back(from + step * static_cast<double>(i));
  }
  return out;
}

double reduction(double benchmark, double proposed) {
  if (benchmark == 0.0) {
    return 0.0;
  }
  return (benchmark - proposed) / benchmark;
}

std::vector<SweepRow> sensitivity_sweep(SweepParam param, const std::vector<double>& values,
                                        int runs, std::uint64_t master_seed,
                                        const std::vector<double>& phis,
                                        const ExperimentConfig& cfg) {
  std::vector<SweepRow> rows;
  for (double value : values) {
    SweepRow row{value, true, phis, {}, {}, {}, {}, {}};
    try {
      const ExperimentConfig c = with_param(cfg, param, value);
      const auto batches = monte_carlo({PolicyKind::dp, PolicyKind::early, PolicyKind::late},
                                       runs, master_seed, phis, c);
      for (const auto& b : batches) {
        const double dp = b.summary(PolicyKind::dp).mean_cost;
        const double early = b.summary(PolicyKind::early).mean_cost;
        const double late = b.summary(PolicyKind::late).mean_cost;
        row.dp_cost.push_back(dp);
        row.early_cost.push_back(early);
        row.late_cost.push_back(late);
        row.vs_early.push_back(reduction(early, dp));
        row.vs_late.push_back(reduction(late, dp));
      }
    } catch (const InfeasibleError&) {
      row.feasible = false;
    } catch (const InfiniteEpisodeError&) {
      row.feasible = false;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace merge
