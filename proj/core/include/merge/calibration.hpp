#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace merge {

struct TrajectoryRecord {
  long long vehicle_id;
  double t;  // s
  double x;  // m
  int lane;
  double v;  // m/s
  double length;  // m

  bool operator==(const TrajectoryRecord&) const = default;
};

/// Units of the x, v and length columns. Time is always seconds.
enum class UnitProfile { si, ngsim_imperial };
UnitProfile unit_profile_from_string(const std::string& s);

inline constexpr const char* kTrajectoryHeader = "vehicle_id,t_s,x_m,lane,v_mps,length_m";

/// Parses the canonical trajectory CSV. Rows are converted to SI, filtered to
/// `lanes` (all lanes when empty) and sorted by (vehicle_id, t).
std::vector<TrajectoryRecord> parse_trajectories(std::istream& in, const std::set<int>& lanes = {},
                                                 UnitProfile units = UnitProfile::si);
std::vector<TrajectoryRecord> load_trajectories(const std::filesystem::path& path,
                                                const std::set<int>& lanes = {},
                                                UnitProfile units = UnitProfile::si);

/// Writes SI records with round-trip precision.
void write_trajectories(std::ostream& out, const std::vector<TrajectoryRecord>& records);
void save_trajectories(const std::filesystem::path& path,
                       const std::vector<TrajectoryRecord>& records);

inline constexpr double kStoppedSpeed = 2.0;  // m/s

struct WaveEstimate {
  double speed;                   // m/s, positive magnitude
  std::vector<double> per_wave;   // m/s
};

/// Chains stop-front events of successive vehicles into backward waves and
/// averages their fitted slopes.
WaveEstimate estimate_wave_speed(const std::vector<TrajectoryRecord>& records,
                                 double stopped_threshold = kStoppedSpeed);

/// Mean inverse front-to-front spacing of adjacent stopped vehicles, veh/m.
double estimate_jam_density(const std::vector<TrajectoryRecord>& records,
                            double stopped_threshold = kStoppedSpeed);

/// Percentile of moving speeds, m/s.
double estimate_cruise_speed(const std::vector<TrajectoryRecord>& records,
                             double percentile = 0.85, double stopped_threshold = kStoppedSpeed);

/// Pre-extracted aggregates of one observation period. Rates in veh/h and
/// speeds in km/h, as they are usually reported.
struct Aggregates {
  double mu_vph;
  double ramp_flow_vph;
  double v_u_kmh;
  double v_m_kmh;
  double a_mps2;
  double ground_truth_vph;
  std::optional<double> arrival_vph;  // mainline plus ramp, upstream of the merge
  std::optional<std::string> label;

  static Aggregates from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

Aggregates load_aggregates(const std::filesystem::path& path);

struct CalibrationReport {
  std::optional<double> w_est;
  std::optional<double> k_j_est;
  std::optional<double> v_u_est;
  double mu_derived;
  double v_m_est;
  double a_est;
  std::optional<double> arrival_rate;
  double ramp_flow;
  double ground_truth_rate;
  double theta;
  double mu_eff;
  double ape_mu_eff;  // percent
  double ape_mu_max;  // percent

  nlohmann::json to_json() const;
};

/// theta, mu' and both APEs from aggregates. Throws OverSaturatedError when
/// theta >= 1.
CalibrationReport validate_discharge(const Aggregates& agg);

struct TrajectoryCalibrationOptions {
  int aux_lane = 7;
  int main_lane = 6;
  double x_count;               // ground-truth counting position, m
  double accel_window = 3.0;    // s after the lane switch
  double stopped_threshold = kStoppedSpeed;
  double cruise_percentile = 0.85;
};

/// Full estimation from trajectories: diagram from waves/jams/free flow, merge
/// speed and acceleration at aux-to-main lane switches, ramp flow from the
/// switch count and ground truth from main-lane crossings of x_count.
CalibrationReport calibrate_trajectories(const std::vector<TrajectoryRecord>& records,
                                         const TrajectoryCalibrationOptions& opts);

}  // namespace merge
