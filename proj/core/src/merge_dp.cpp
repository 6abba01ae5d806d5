#include "merge/merge_dp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>

#include "merge/errors.hpp"

namespace merge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSpeedTol = 1e-9;

}  // namespace

void CostWeights::validate() const {
  if (!(phi >= 0.0 && phi <= 1.0)) {
    throw DomainError("phi must lie in [0, 1]");
  }
}

MergeState transition(const MergeState& s, const Decision& dec, double dt, double v_u,
                      double a_max) {
  if (dec.a < -kSpeedTol || dec.a > a_max + kSpeedTol) {
    throw DomainError("acceleration outside [0, a_max]");
  }
  if (dec.m != 0 && dec.m != 1) {
    throw DomainError("merge flag must be 0 or 1");
  }
  if (s.lane == kMainLane && dec.m == 1) {
    throw DomainError("constraint violation: already on the mainline");
  }
  MergeState out = s;
  out.lane = s.lane + dec.m;
  const double a = s.v >= v_u - kSpeedTol ? 0.0 : dec.a;
  const double v_free = s.v + a * dt;
  if (v_free <= v_u || a == 0.0) {
    out.v = v_free;
    out.d = s.d + s.v * dt + 0.5 * a * dt * dt;
  } else {
    const double t_cap = (v_u - s.v) / a;
    out.v = v_u;
    out.d = s.d + s.v * t_cap + 0.5 * a * t_cap * t_cap + v_u * (dt - t_cap);
  }
  return out;
}

GapScenario::GapScenario(std::vector<double> passages, std::uint64_t seed)
    : passages_(std::move(passages)), seed_(seed) {
  std::sort(passages_.begin(), passages_.end());
}

GapScenario GapScenario::sample(std::uint64_t seed, double rate, double t_begin, double t_end) {
  std::vector<double> out;
  if (rate > 0.0) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> headway(rate);
    double t = t_begin + headway(rng);
    while (t <= t_end) {
      out.push_back(t);
      t += headway(rng);
    }
  }
  return GapScenario(std::move(out), seed);
}

std::uint64_t GapScenario::hash() const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(passages_.size());
  for (double p : passages_) {
    mix(std::bit_cast<std::uint64_t>(p));
  }
  return h;
}

bool GapScenario::acceptable(double t, double d, double v, const GapRule& rule) const {
  const double shift = d / rule.v_u;
  // First passage strictly after t at position d.
  auto it = std::upper_bound(passages_.begin(), passages_.end(), t - shift);
  if (it != passages_.end()) {
    const double lag_gap = *it + shift - t;
    if (lag_gap < rule.tau + rule.v_u / rule.b_max) {
      return false;
    }
  }
  if (it != passages_.begin()) {
    const double lead_gap = t - (*std::prev(it) + shift);
    if (lead_gap < v / rule.b_max) {
      return false;
    }
  }
  return true;
}

std::vector<LagVehicle> GapScenario::lag_vehicles(double t, double d, double v_u,
                                                  double window) const {
  std::vector<LagVehicle> out;
  const double shift = d / v_u;
  auto it = std::upper_bound(passages_.begin(), passages_.end(), t - shift);
  for (; it != passages_.end() && *it + shift <= t + window; ++it) {
    out.push_back({v_u * (t - *it), v_u});
  }
  return out;
}

void DpConfig::validate() const {
  if (!(dt > 0.0) || !(v_step > 0.0) || !(d_step > 0.0)) {
    throw DomainError("dp grid steps must be positive");
  }
  if (accel_levels.empty()) {
    throw DomainError("at least one acceleration level is required");
  }
  for (double f : accel_levels) {
    if (f < 0.0 || f > 1.0) {
      throw DomainError("acceleration levels are fractions of a_max in [0, 1]");
    }
  }
  if (!(v0 > 0.0) || v0 > v_u) {
    throw DomainError("initial speed must lie in (0, v_u]");
  }
  if (!(a_max > 0.0) || !(aux_length > 0.0) || !(vehicle_length > 0.0)) {
    throw DomainError("a_max, aux_length and vehicle_length must be positive");
  }
  if (horizon_steps < 0) {
    throw DomainError("horizon_steps must be non-negative");
  }
}

int DpConfig::steps() const {
  if (horizon_steps > 0) {
    return horizon_steps;
  }
  const double cruise = std::ceil(aux_length / (v0 * dt));
  const double accel = std::ceil((v_u - v0) / (a_max * dt));
  const double clear = std::ceil((vehicle_length + 2.0 * d_step) / (v0 * dt));
  return static_cast<int>(cruise + accel + clear) + 2;
}

double Normalization::weighted(const CostComponents& c, const CostWeights& w) const noexcept {
  const double nw = w_hi > w_lo ? (c.delay - w_lo) / (w_hi - w_lo) : 0.0;
  const double r = effective_risk(c);
  const double ns = s_hi > s_lo ? (r - s_lo) / (s_hi - s_lo) : 0.0;
  return w.phi * nw + (1.0 - w.phi) * ns;
}

MergeProblem::MergeProblem(DpConfig cfg, GapFn gap, ComponentFn components)
    : cfg_(std::move(cfg)), gap_(std::move(gap)), component_fn_(std::move(components)) {
  cfg_.validate();
  const int regular = static_cast<int>(std::floor((cfg_.v_u - cfg_.v0) / cfg_.v_step + 1e-9)) + 1;
  const double top = cfg_.v0 + (regular - 1) * cfg_.v_step;
  v_count_ = top >= cfg_.v_u - kSpeedTol ? regular : regular + 1;
  if (v_count_ >= 2048) {
    throw DomainError("speed grid too fine");
  }
}

int MergeProblem::speed_index(double v) const {
  if (v >= cfg_.v_u - kSpeedTol) {
    return v_count_ - 1;
  }
  const auto i = static_cast<int>(std::lround((v - cfg_.v0) / cfg_.v_step));
  return std::clamp(i, 0, v_count_ - 1);
}

std::uint64_t MergeProblem::key(const MergeState& s) const {
  const auto lane = static_cast<std::uint64_t>(s.lane - 1);
  const auto vi = static_cast<std::uint64_t>(speed_index(s.v));
  const auto di = static_cast<std::uint64_t>(std::llround(s.d / cfg_.d_step));
  return lane | (vi << 1) | (di << 12);
}

MergeState MergeProblem::from_key(std::uint64_t key) const {
  MergeState s;
  s.lane = static_cast<int>(key & 1U) + 1;
  const auto vi = static_cast<int>((key >> 1) & 0x7ffU);
  s.v = vi == v_count_ - 1 ? cfg_.v_u : cfg_.v0 + vi * cfg_.v_step;
  s.d = static_cast<double>(key >> 12) * cfg_.d_step;
  return s;
}

MergeState MergeProblem::initial() const { return from_key(key({kAuxLane, cfg_.v0, 0.0})); }

bool MergeProblem::terminal(const MergeState& s) const {
  return s.lane == kMainLane && s.v >= cfg_.v_u - kSpeedTol &&
         s.d >= cfg_.aux_length + cfg_.vehicle_length - 1e-9;
}

bool MergeProblem::merge_forced(const MergeState& s) const {
  return s.lane == kAuxLane && s.d + s.v * cfg_.dt >= cfg_.aux_length;
}

bool MergeProblem::merge_allowed(int k, const MergeState& s) const {
  return s.lane == kAuxLane && (merge_forced(s) || gap_(k, s));
}

std::vector<Decision> MergeProblem::decisions(int k, const MergeState& s) const {
  if (terminal(s)) {
    return {{0, 0.0}};
  }
  std::vector<double> accels;
  if (s.v >= cfg_.v_u - kSpeedTol) {
    accels.push_back(0.0);
  } else {
    for (double f : cfg_.accel_levels) {
      accels.push_back(f * cfg_.a_max);
    }
    std::sort(accels.begin(), accels.end());
    accels.erase(std::unique(accels.begin(), accels.end()), accels.end());
  }
  std::vector<Decision> out;
  const bool forced = merge_forced(s);
  if (!forced) {
    for (double a : accels) {
      out.push_back({0, a});
    }
  }
  if (merge_allowed(k, s)) {
    for (double a : accels) {
      out.push_back({1, a});
    }
  }
  return out;
}

MergeState MergeProblem::next(const MergeState& s, const Decision& dec) const {
  return from_key(key(transition(s, dec, cfg_.dt, cfg_.v_u, cfg_.a_max)));
}

const CostComponents& MergeProblem::components(int k, const MergeState& s) const {
  const std::uint64_t mk = key(s) | (static_cast<std::uint64_t>(k) << 48);
  auto it = memo_.find(mk);
  if (it == memo_.end()) {
    it = memo_.emplace(mk, component_fn_(k, s)).first;
  }
  return it->second;
}

bool MergeProblem::can_finish(int k, const MergeState& s) const {
  const int steps = cfg_.steps();
  if (terminal(s)) {
    return true;
  }
  if (k >= steps) {
    return false;
  }
  const std::uint64_t mk = key(s) | (static_cast<std::uint64_t>(k) << 48);
  if (auto it = finish_memo_.find(mk); it != finish_memo_.end()) {
    return it->second;
  }
  const double a_top = *std::max_element(cfg_.accel_levels.begin(), cfg_.accel_levels.end());
  MergeState cur = s;
  bool ok = false;
  for (int j = k; j < steps; ++j) {
    const double a = cur.v >= cfg_.v_u - kSpeedTol ? 0.0 : a_top * cfg_.a_max;
    cur = next(cur, {0, a});
    if (terminal(cur)) {
      ok = true;
      break;
    }
  }
  finish_memo_.emplace(mk, ok);
  return ok;
}

Decision MergeProblem::main_lane_decision(int k, const MergeState& s) const {
  for (const auto& dec : decisions(k, s)) {
    if (can_finish(k + 1, next(s, dec))) {
      return dec;
    }
  }
  throw InfeasibleError("main-lane state cannot reach the terminal state");
}

const std::vector<std::vector<std::uint64_t>>& MergeProblem::aux_layers() const {
  if (!aux_layers_.empty()) {
    return aux_layers_;
  }
  const int steps = cfg_.steps();
  std::vector<std::vector<std::uint64_t>> layers(static_cast<std::size_t>(steps) + 1);
  layers[0].push_back(key(initial()));
  for (int k = 0; k < steps; ++k) {
    std::unordered_set<std::uint64_t> seen;
    auto& out = layers[static_cast<std::size_t>(k) + 1];
    for (std::uint64_t kk : layers[static_cast<std::size_t>(k)]) {
      const MergeState s = from_key(kk);
      for (const auto& dec : decisions(k, s)) {
        if (dec.m == 1) {
          continue;
        }
        const std::uint64_t nk = key(next(s, dec));
        if (seen.insert(nk).second) {
          out.push_back(nk);
        }
      }
    }
    std::sort(out.begin(), out.end());
  }
  aux_layers_ = std::move(layers);
  return aux_layers_;
}

double MergeProblem::stage_cost(int k, const MergeState& s, const Decision& dec,
                                const CostWeights& w, const Normalization& n) const {
  if (dec.m == 0) {
    return 0.0;
  }
  return n.weighted(components(k, s), w);
}

std::optional<ValueEntry> ValueTable::find(int k, std::uint64_t key) const {
  const auto& layer = layers_.at(static_cast<std::size_t>(k));
  auto it = layer.find(key);
  if (it == layer.end()) {
    return std::nullopt;
  }
  return it->second;
}

void ValueTable::set(int k, std::uint64_t key, ValueEntry e) {
  layers_.at(static_cast<std::size_t>(k))[key] = e;
}

std::size_t ValueTable::size() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    n += l.size();
  }
  return n;
}

namespace {

PolicyPath follow(const MergeProblem& problem, const CostWeights& w, const Normalization& n,
                  const std::function<Decision(int, const MergeState&)>& choose) {
  PolicyPath path;
  const int steps = problem.config().steps();
  MergeState s = problem.initial();
  int k = 0;
  for (; k < steps && !problem.terminal(s); ++k) {
    const Decision dec = choose(k, s);
    const double c = problem.stage_cost(k, s, dec, w, n);
    path.steps.push_back({k, s, dec, c});
    if (dec.m == 1) {
      path.merge_step = k;
      path.merge_state = s;
      path.components = problem.components(k, s);
    }
    path.total_cost += c;
    s = problem.next(s, dec);
  }
  path.reached_terminal = problem.terminal(s);
  if (!path.reached_terminal) {
    path.total_cost = kInf;
  }
  return path;
}

}  // namespace

Solution solve_backward(const MergeProblem& problem, const CostWeights& w, const Normalization& n) {
  w.validate();
  const int steps = problem.config().steps();
  const auto& layers = problem.aux_layers();

  Solution sol{PolicyPath{}, 0.0, ValueTable(steps)};
  for (std::uint64_t key : layers[static_cast<std::size_t>(steps)]) {
    sol.table.set(steps, key, {kInf, {0, 0.0}});
  }
  for (int k = steps - 1; k >= 0; --k) {
    for (std::uint64_t key : layers[static_cast<std::size_t>(k)]) {
      const MergeState s = problem.from_key(key);
      ValueEntry best{kInf, {0, 0.0}};
      for (const auto& dec : problem.decisions(k, s)) {
        const MergeState nxt = problem.next(s, dec);
        double future = kInf;
        if (nxt.lane == kMainLane) {
          future = problem.can_finish(k + 1, nxt) ? 0.0 : kInf;
        } else {
          future = sol.table.find(k + 1, problem.key(nxt))->value;
        }
        const double total = problem.stage_cost(k, s, dec, w, n) + future;
        if (total < best.value) {
          best = {total, dec};
        }
      }
      sol.table.set(k, key, best);
    }
  }

  const auto root = sol.table.find(0, problem.key(problem.initial()));
  if (!root || !std::isfinite(root->value)) {
    throw InfeasibleError("no feasible path reaches the terminal state");
  }
  sol.total_cost = root->value;
  sol.path = follow(problem, w, n, [&](int k, const MergeState& s) {
    if (s.lane == kMainLane) {
      return problem.main_lane_decision(k, s);
    }
    return sol.table.find(k, problem.key(s))->best;
  });
  return sol;
}

PolicyPath rollout(const MergeProblem& problem, const PolicyRule& rule, const CostWeights& w,
                   const Normalization& n) {
  w.validate();
  return follow(problem, w, n, [&](int k, const MergeState& s) {
    const Decision dec = rule(problem, k, s);
    if (dec.m == 1 && !problem.merge_allowed(k, s)) {
      throw DomainError("policy merged without an acceptable gap");
    }
    if (dec.m == 0 && problem.merge_forced(s)) {
      throw DomainError("policy skipped a forced merge");
    }
    return dec;
  });
}

namespace {

double full_accel(const MergeProblem& p, const MergeState& s) {
  const auto& cfg = p.config();
  if (s.v >= cfg.v_u - kSpeedTol) {
    return 0.0;
  }
  return *std::max_element(cfg.accel_levels.begin(), cfg.accel_levels.end()) * cfg.a_max;
}

}  // namespace

PolicyRule early_merge_rule() {
  return [](const MergeProblem& p, int k, const MergeState& s) {
    const int m = p.merge_allowed(k, s) ? 1 : 0;
    return Decision{m, full_accel(p, s)};
  };
}

PolicyRule late_merge_rule() {
  return [](const MergeProblem& p, int, const MergeState& s) {
    const int m = p.merge_forced(s) ? 1 : 0;
    return Decision{m, full_accel(p, s)};
  };
}

PolicyPath early_merge_policy(const MergeProblem& problem, const CostWeights& w,
                              const Normalization& n) {
  return rollout(problem, early_merge_rule(), w, n);
}

PolicyPath late_merge_policy(const MergeProblem& problem, const CostWeights& w,
                             const Normalization& n) {
  return rollout(problem, late_merge_rule(), w, n);
}

}  // namespace merge
