#include "merge/run_config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "merge/errors.hpp"
#include "merge/units.hpp"

namespace merge {

namespace {

void require_positive(double v, const char* key) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(key, "must be a positive number");
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& prefix = {}) {
  if (!j.contains(key)) {
    return;
  }
  const auto& v = j.at(key);
  const std::string name = prefix + key;
  if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ConfigError(name, "must be a number");
  } else {
    if (!v.is_number_integer()) throw ConfigError(name, "must be an integer");
    if (std::is_unsigned_v<T> && !v.is_number_unsigned()) {
      throw ConfigError(name, "must be non-negative");
    }
  }
  out = v.get<T>();
}

}  // namespace

void RunConfig::validate() const {
  require_positive(demand_vph, "demand_vph");
  if (!(ramp_ratio > 0.0 && ramp_ratio < 1.0)) {
    throw ConfigError("ramp_ratio", "must lie in (0, 1)");
  }
  require_positive(v_cruise_kmh, "v_cruise_kmh");
  require_positive(v_ramp_limit_kmh, "v_ramp_limit_kmh");
  if (v_ramp_limit_kmh > v_cruise_kmh) {
    throw ConfigError("v_ramp_limit_kmh", "must not exceed v_cruise_kmh");
  }
  require_positive(a_max_mps2, "a_max_mps2");
  require_positive(b_max_mps2, "b_max_mps2");
  require_positive(reaction_time_s, "reaction_time_s");
  require_positive(aux_length_m, "aux_length_m");
  require_positive(study_length_m, "study_length_m");
  if (study_length_m <= aux_length_m) {
    throw ConfigError("study_length_m", "must exceed aux_length_m");
  }
  require_positive(w_kmh, "fd.w_kmh");
  require_positive(kj_veh_per_km, "fd.kj_veh_per_km");
  if (mu_vph) {
    require_positive(*mu_vph, "fd.mu_vph");
  }
  require_positive(dt_dp_s, "dt_dp_s");
  require_positive(dt_sim_s, "dt_sim_s");
  if (phi.empty()) {
    throw ConfigError("phi", "needs at least one weight");
  }
  for (double p : phi) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("phi", "weights must lie in [0, 1]");
    }
  }
  if (runs < 1) {
    throw ConfigError("runs", "must be at least 1");
  }
  try {
    make_diagram(*this);
  } catch (const DomainError& e) {
    throw ConfigError("fd.mu_vph", e.what());
  }
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("", "config must be a JSON object");
  }
  static const std::set<std::string> known{
      "demand_vph",     "ramp_ratio",     "v_cruise_kmh", "v_ramp_limit_kmh", "a_max_mps2",
      "b_max_mps2",     "reaction_time_s", "aux_length_m", "study_length_m",   "fd",
      "dt_dp_s",        "dt_sim_s",       "phi",          "runs",             "master_seed",
      "threads"};
  for (const auto& [key, value] : j.items()) {
    if (known.count(key) == 0) {
      throw ConfigError(key, "unknown key");
    }
  }

  RunConfig c;
  read(j, "demand_vph", c.demand_vph);
  read(j, "ramp_ratio", c.ramp_ratio);
  read(j, "v_cruise_kmh", c.v_cruise_kmh);
  read(j, "v_ramp_limit_kmh", c.v_ramp_limit_kmh);
  read(j, "a_max_mps2", c.a_max_mps2);
  read(j, "b_max_mps2", c.b_max_mps2);
  read(j, "reaction_time_s", c.reaction_time_s);
  read(j, "aux_length_m", c.aux_length_m);
  read(j, "study_length_m", c.study_length_m);
  read(j, "dt_dp_s", c.dt_dp_s);
  read(j, "dt_sim_s", c.dt_sim_s);
  read(j, "runs", c.runs);
  read(j, "master_seed", c.master_seed);
  read(j, "threads", c.threads);

  if (j.contains("fd")) {
    const auto& fd = j.at("fd");
    if (!fd.is_object()) {
      throw ConfigError("fd", "must be an object");
    }
    for (const auto& [key, value] : fd.items()) {
      if (key != "w_kmh" && key != "kj_veh_per_km" && key != "mu_vph") {
        throw ConfigError("fd." + key, "unknown key");
      }
    }
    read(fd, "w_kmh", c.w_kmh, "fd.");
    read(fd, "kj_veh_per_km", c.kj_veh_per_km, "fd.");
    if (fd.contains("mu_vph") && !fd.at("mu_vph").is_null()) {
      double mu = 0.0;
      read(fd, "mu_vph", mu, "fd.");
      c.mu_vph = mu;
    }
  }

  if (j.contains("phi")) {
    const auto& p = j.at("phi");
    if (p.is_number()) {
      c.phi = {p.get<double>()};
    } else if (p.is_array()) {
      c.phi.clear();
      for (const auto& v : p) {
        if (!v.is_number()) throw ConfigError("phi", "must be numbers");
        c.phi.push_back(v.get<double>());
      }
    } else {
      throw ConfigError("phi", "must be a number or an array of numbers");
    }
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json fd{{"w_kmh", w_kmh}, {"kj_veh_per_km", kj_veh_per_km}};
  fd["mu_vph"] = mu_vph ? nlohmann::json(*mu_vph) : nlohmann::json(nullptr);
  return {{"demand_vph", demand_vph},
          {"ramp_ratio", ramp_ratio},
          {"v_cruise_kmh", v_cruise_kmh},
          {"v_ramp_limit_kmh", v_ramp_limit_kmh},
          {"a_max_mps2", a_max_mps2},
          {"b_max_mps2", b_max_mps2},
          {"reaction_time_s", reaction_time_s},
          {"aux_length_m", aux_length_m},
          {"study_length_m", study_length_m},
          {"fd", fd},
          {"dt_dp_s", dt_dp_s},
          {"dt_sim_s", dt_sim_s},
          {"phi", phi},
          {"runs", runs},
          {"master_seed", master_seed},
          {"threads", threads}};
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const nlohmann::json& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) {
      throw ConfigError("config", "cannot open " + path->string());
    }
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config", e.what());
    }
    if (!j.is_object()) {
      throw ConfigError("config", "must be a JSON object");
    }
  }
  j.merge_patch(overrides);
  RunConfig c = RunConfig::from_json(j);
  c.validate();
  return c;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  nlohmann::json j = cfg.to_json();
  j.erase("threads");  // results do not depend on the worker count
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

FundamentalDiagram make_diagram(const RunConfig& cfg) {
  const double w = units::kmh_to_mps(cfg.w_kmh);
  const double k_j = units::per_km_to_per_m(cfg.kj_veh_per_km);
  const double v_u = units::kmh_to_mps(cfg.v_cruise_kmh);
  return cfg.mu_vph ? FundamentalDiagram::with_capacity(units::vph_to_vps(*cfg.mu_vph), w, k_j, v_u)
                    : FundamentalDiagram::from_wave(w, k_j, v_u);
}

ExperimentConfig make_experiment(const RunConfig& cfg) {
  cfg.validate();
  const FundamentalDiagram fd = make_diagram(cfg);
  const double v_u = fd.v_u();

  DpConfig dp;
  dp.dt = cfg.dt_dp_s;
  dp.v0 = units::kmh_to_mps(cfg.v_ramp_limit_kmh);
  dp.v_u = v_u;
  dp.a_max = cfg.a_max_mps2;
  dp.aux_length = cfg.aux_length_m;

  ExperimentConfig e{
      fd,
      DemandProfile(units::vph_to_vps(cfg.demand_vph), cfg.ramp_ratio),
      VehicleParams::newell_from(fd, cfg.a_max_mps2, cfg.b_max_mps2, dp.vehicle_length),
      GapRule{cfg.reaction_time_s, cfg.b_max_mps2, v_u},
      dp,
      MergeGeometry{cfg.aux_length_m, cfg.study_length_m},
  };
  e.dt_sim = cfg.dt_sim_s;
  e.threads = cfg.threads;
  return e;
}

}  // namespace merge
