#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace merge {

/// Triangular fundamental diagram. All quantities SI.
class FundamentalDiagram {
public:
  /// Capacity derived from the triangle apex: mu = w*k_j*v_u/(v_u + w).
  static FundamentalDiagram from_wave(double w, double k_j, double v_u);

  /// Capacity supplied externally. Rejected if it disagrees with the
  /// triangle apex by more than 1% or exceeds k_j*v_u.
  static FundamentalDiagram with_capacity(double mu, double w, double k_j, double v_u);

  double mu() const noexcept { return mu_; }
  double w() const noexcept { return w_; }
  double k_j() const noexcept { return k_j_; }
  double v_u() const noexcept { return v_u_; }

  /// Density at the apex.
  double critical_density() const noexcept { return mu_ / v_u_; }

  /// Congested-branch state at speed v: density w*k_j/(v + w), flow v*density.
  double congested_density(double v) const;
  double congested_flow(double v) const;

  static double apex_capacity(double w, double k_j, double v_u);

private:
  FundamentalDiagram(double mu, double w, double k_j, double v_u)
      : mu_(mu), w_(w), k_j_(k_j), v_u_(v_u) {}

  double mu_;
  double w_;
  double k_j_;
  double v_u_;
};

/// Per-vehicle parameters. `tau`/`d_n` are Newell shifts; `a_max` and `b_max`
/// are separate (acceleration vs. braking magnitude).
struct VehicleParams {
  double tau = 1.5;
  double d_n = 7.0;
  double a_max = 2.0;
  double b_max = 6.0;
  double length = 5.0;

  void validate() const;

  /// Newell shifts consistent with the diagram: d_n = 1/k_j, tau = d_n/w.
  static VehicleParams newell_from(const FundamentalDiagram& fd, double a_max, double b_max,
                                   double length);
};

/// Piecewise-constant arrival rate with a constant ramp share.
class DemandProfile {
public:
  struct Piece {
    double t_start;
    double rate;  // veh/s
  };

  DemandProfile(double constant_rate, double rho_r);
  DemandProfile(std::vector<Piece> pieces, double rho_r);

  double lambda(double t) const;
  double rho_r() const noexcept { return rho_r_; }
  double rho_m() const noexcept { return 1.0 - rho_r_; }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }

  double ramp_flow(double t) const { return lambda(t) * rho_r_; }
  double mainline_flow(double t) const { return lambda(t) * rho_m(); }

  /// Same profile with every rate multiplied by `factor`.
  DemandProfile scaled(double factor) const;

private:
  std::vector<Piece> pieces_;
  double rho_r_;
};

struct MergeGeometry {
  double aux_length = 150.0;  // x_P; the entrance O sits at x = 0
  double x_down = 600.0;

  void validate() const;
};

/// Position samples on a uniform time grid, linearly interpolated.
class Trajectory {
public:
  Trajectory(double t0, double dt, std::vector<double> x);

  /// Constant-speed trajectory over [t0, t1].
  static Trajectory constant_speed(double t0, double t1, double dt, double x0, double v);

  double t0() const noexcept { return t0_; }
  double dt() const noexcept { return dt_; }
  double t_end() const noexcept;
  const std::vector<double>& samples() const noexcept { return x_; }

  bool covers(double t) const noexcept;
  /// Throws DomainError outside [t0, t_end].
  double position(double t) const;

private:
  double t0_;
  double dt_;
  std::vector<double> x_;
};

struct FlowState {
  double flow;     // veh/s
  double density;  // veh/m
};

struct ShockwaveLine {
  double t0;
  double x0;
  double speed;  // signed; negative travels upstream

  double position(double t) const noexcept { return x0 + speed * (t - t0); }
};

struct WaveCrossing {
  double t;
  double x;
  /// False when the crossing lies before both line origins.
  bool within_episode;
};

struct AccelerationSegment {
  double duration;
  double distance;
};

/// Follower position at t: x_{n-1}(t - tau) - d_n.
double newell_position(const Trajectory& leader, const VehicleParams& follower, double t);

/// (time headway, space headway) at steady speed v.
std::pair<double, double> headways(const VehicleParams& follower, double v);

/// h_r = 1/(lambda(t)*rho_r).
double episode_headway(const DemandProfile& demand, double t);

double shockwave_speed(const FlowState& upstream, const FlowState& downstream);

WaveCrossing shockwave_intersection(const ShockwaveLine& a, const ShockwaveLine& b);

AccelerationSegment acceleration_segment(double v_m, double v_u, double a_max);

}  // namespace merge
