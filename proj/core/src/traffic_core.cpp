#include "merge/traffic_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "merge/errors.hpp"

namespace merge {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(name) + " must be positive and finite");
  }
}

}  // namespace

double FundamentalDiagram::apex_capacity(double w, double k_j, double v_u) {
  return w * k_j * v_u / (v_u + w);
}

FundamentalDiagram FundamentalDiagram::from_wave(double w, double k_j, double v_u) {
  require_positive(w, "w");
  require_positive(k_j, "k_j");
  require_positive(v_u, "v_u");
  return FundamentalDiagram(apex_capacity(w, k_j, v_u), w, k_j, v_u);
}

FundamentalDiagram FundamentalDiagram::with_capacity(double mu, double w, double k_j, double v_u) {
  require_positive(mu, "mu");
  require_positive(w, "w");
  require_positive(k_j, "k_j");
  require_positive(v_u, "v_u");
  if (mu > k_j * v_u) {
    throw DomainError("mu exceeds k_j*v_u");
  }
  const double apex = apex_capacity(w, k_j, v_u);
  if (std::abs(mu - apex) > 0.01 * apex) {
    throw DomainError("supplied mu disagrees with the triangular apex by more than 1%");
  }
  return FundamentalDiagram(mu, w, k_j, v_u);
}

double FundamentalDiagram::congested_density(double v) const {
  if (v < 0.0) {
    throw DomainError("speed must be non-negative");
  }
  return w_ * k_j_ / (v + w_);
}

double FundamentalDiagram::congested_flow(double v) const { return v * congested_density(v); }

void VehicleParams::validate() const {
  require_positive(tau, "tau");
  require_positive(d_n, "d_n");
  require_positive(a_max, "a_max");
  require_positive(b_max, "b_max");
  require_positive(length, "length");
}

VehicleParams VehicleParams::newell_from(const FundamentalDiagram& fd, double a_max, double b_max,
                                         double length) {
  VehicleParams p;
  p.d_n = 1.0 / fd.k_j();
  p.tau = p.d_n / fd.w();
  p.a_max = a_max;
  p.b_max = b_max;
  p.length = length;
  p.validate();
  return p;
}

DemandProfile::DemandProfile(double constant_rate, double rho_r)
    : DemandProfile(std::vector<Piece>{{0.0, constant_rate}}, rho_r) {}

DemandProfile::DemandProfile(std::vector<Piece> pieces, double rho_r)
    : pieces_(std::move(pieces)), rho_r_(rho_r) {
  if (pieces_.empty()) {
    throw DomainError("demand profile needs at least one piece");
  }
  if (!(rho_r_ >= 0.0 && rho_r_ <= 1.0)) {
    throw DomainError("rho_r must lie in [0, 1]");
  }
  std::sort(pieces_.begin(), pieces_.end(),
            [](const Piece& a, const Piece& b) { return a.t_start < b.t_start; });
  for (const auto& p : pieces_) {
    if (!(p.rate >= 0.0) || !std::isfinite(p.rate)) {
      throw DomainError("arrival rate must be non-negative");
    }
  }
}

double DemandProfile::lambda(double t) const {
  // The first piece extends backwards to -inf.
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double value, const Piece& p) { return value < p.t_start; });
  if (it == pieces_.begin()) {
    return pieces_.front().rate;
  }
  return std::prev(it)->rate;
}

DemandProfile DemandProfile::scaled(double factor) const {
  auto pieces = pieces_;
  for (auto& p : pieces) {
    p.rate *= factor;
  }
  return DemandProfile(std::move(pieces), rho_r_);
}

void MergeGeometry::validate() const {
  if (!(aux_length > 0.0) || !(aux_length <= x_down)) {
    throw DomainError("geometry requires 0 < aux_length <= x_down");
  }
}

Trajectory::Trajectory(double t0, double dt, std::vector<double> x)
    : t0_(t0), dt_(dt), x_(std::move(x)) {
  require_positive(dt_, "dt");
  if (x_.empty()) {
    throw DomainError("trajectory needs at least one sample");
  }
}

Trajectory Trajectory::constant_speed(double t0, double t1, double dt, double x0, double v) {
  const auto n = static_cast<std::size_t>(std::llround((t1 - t0) / dt)) + 1;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = x0 + v * dt * static_cast<double>(i);
  }
  return Trajectory(t0, dt, std::move(x));
}

double Trajectory::t_end() const noexcept {
  return t0_ + dt_ * static_cast<double>(x_.size() - 1);
}

bool Trajectory::covers(double t) const noexcept {
  const double eps = 1e-9 * dt_;
  return t >= t0_ - eps && t <= t_end() + eps;
}

double Trajectory::position(double t) const {
  if (!covers(t)) {
    throw DomainError("query time outside trajectory domain");
  }
  const double u = std::clamp((t - t0_) / dt_, 0.0, static_cast<double>(x_.size() - 1));
  const auto i = static_cast<std::size_t>(std::floor(u));
  if (i + 1 >= x_.size()) {
    return x_.back();
  }
  const double frac = u - static_cast<double>(i);
  return x_[i] + frac * (x_[i + 1] - x_[i]);
}

double newell_position(const Trajectory& leader, const VehicleParams& follower, double t) {
  return leader.position(t - follower.tau) - follower.d_n;
}

std::pair<double, double> headways(const VehicleParams& follower, double v) {
  if (!(v > 0.0)) {
    throw DomainError("headways need a positive speed");
  }
  return {follower.tau + follower.d_n / v, follower.d_n + follower.tau * v};
}

double episode_headway(const DemandProfile& demand, double t) {
  const double ramp = demand.ramp_flow(t);
  if (!(ramp > 0.0)) {
    throw InfiniteEpisodeError("zero ramp flow gives an infinite episode");
  }
  return 1.0 / ramp;
}

double shockwave_speed(const FlowState& upstream, const FlowState& downstream) {
  const double dk = upstream.density - downstream.density;
  if (dk == 0.0) {
    throw UndefinedWaveError("equal densities do not define a wave");
  }
  return (upstream.flow - downstream.flow) / dk;
}

WaveCrossing shockwave_intersection(const ShockwaveLine& a, const ShockwaveLine& b) {
  const double ds = a.speed - b.speed;
  if (ds == 0.0) {
    throw NoIntersectionError("parallel shockwaves never intersect");
  }
  const double t = (b.x0 - a.x0 + a.speed * a.t0 - b.speed * b.t0) / ds;
  const double x = a.position(t);
  return {t, x, !(t < a.t0 && t < b.t0)};
}

AccelerationSegment acceleration_segment(double v_m, double v_u, double a_max) {
  require_positive(a_max, "a_max");
  if (v_m < 0.0 || v_m > v_u) {
    throw DomainError("merge speed must lie in [0, v_u]");
  }
  return {(v_u - v_m) / a_max, (v_u * v_u - v_m * v_m) / (2.0 * a_max)};
}

}  // namespace merge
