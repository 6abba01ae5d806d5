#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "merge/episode_sim.hpp"

namespace merge {

/// User-facing run description. Units are the ones in the key names.
struct RunConfig {
  double demand_vph = 1600.0;
  double ramp_ratio = 0.15;
  double v_cruise_kmh = 105.0;
  double v_ramp_limit_kmh = 56.0;
  double a_max_mps2 = 2.0;
  double b_max_mps2 = 6.0;  // braking magnitude
  double reaction_time_s = 1.5;
  double aux_length_m = 150.0;
  double study_length_m = 600.0;
  double w_kmh = 16.0;
  double kj_veh_per_km = 113.0;
  std::optional<double> mu_vph;
  double dt_dp_s = 0.5;
  double dt_sim_s = 0.1;
  std::vector<double> phi{0.0, 0.5, 1.0};
  int runs = 1000;
  std::uint64_t master_seed = 20170601;
  unsigned threads = 0;

  /// Throws ConfigError naming the first offending key.
  void validate() const;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Reads a config file and applies `overrides` on top (JSON merge patch).
/// The result is validated.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const nlohmann::json& overrides = nlohmann::json::object());

/// FNV-1a of the canonical JSON dump.
std::uint64_t config_hash(const RunConfig& cfg);
std::string hex(std::uint64_t v);

FundamentalDiagram make_diagram(const RunConfig& cfg);
ExperimentConfig make_experiment(const RunConfig& cfg);

}  // namespace merge
