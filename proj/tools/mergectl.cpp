#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "merge/calibration.hpp"
#include "merge/discharge.hpp"
#include "merge/episode_sim.hpp"
#include "merge/errors.hpp"
#include "merge/run_config.hpp"
#include "merge/units.hpp"
#include "output.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace merge;
using mergectl::CsvWriter;
using mergectl::num;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;

struct CommonOptions {
  std::optional<fs::path> config;
  std::optional<double> demand_vph;
  std::optional<double> ramp_ratio;
  std::optional<double> aux_length_m;
  std::optional<std::vector<double>> phi;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;

  json overrides() const {
    json j = json::object();
    if (demand_vph) j["demand_vph"] = *demand_vph;
    if (ramp_ratio) j["ramp_ratio"] = *ramp_ratio;
    if (aux_length_m) j["aux_length_m"] = *aux_length_m;
    if (phi) j["phi"] = *phi;
    if (runs) j["runs"] = *runs;
    if (seed) j["master_seed"] = *seed;
    if (threads) j["threads"] = *threads;
    return j;
  }

  RunConfig load() const { return load_run_config(config, overrides()); }
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "RunConfig JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--demand", o.demand_vph, "Arrival rate, veh/h");
  cmd->add_option("--ramp-ratio", o.ramp_ratio, "Ramp share of the demand, 0..1");
  cmd->add_option("--aux-length", o.aux_length_m, "Auxiliary lane length, m");
  cmd->add_option("--phi", o.phi, "Efficiency weights in [0, 1]");
  cmd->add_option("--runs", o.runs, "Monte Carlo runs per batch");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--threads", o.threads, "Worker threads, 0 for all cores");
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) {
    throw ConfigError("out", "cannot write " + p.string());
  }
  return out;
}

// ---------------------------------------------------------------------------

struct DischargeOptions {
  CommonOptions common;
  std::optional<double> v_merge_kmh;
  std::optional<fs::path> aggregates;
  int samples = 200;
  std::optional<fs::path> out;
};

// w from the apex relation when only mu, k_j and v_u are known.
FundamentalDiagram diagram_from_capacity(double mu, double k_j, double v_u) {
  const double denom = k_j * v_u - mu;
  if (!(denom > 0.0)) {
    throw ConfigError("mu_vph", "capacity must be below k_j*v_u");
  }
  return FundamentalDiagram::from_wave(mu * v_u / denom, k_j, v_u);
}

int cmd_discharge(const DischargeOptions& o) {
  const RunConfig rc = o.common.load();
  std::optional<FundamentalDiagram> fd;
  double v_m = 0.0;
  double a = rc.a_max_mps2;
  double ramp_flow = 0.0;
  double arrival = 0.0;
  if (o.aggregates) {
    const Aggregates agg = load_aggregates(*o.aggregates);
    fd = diagram_from_capacity(units::vph_to_vps(agg.mu_vph),
                               units::per_km_to_per_m(rc.kj_veh_per_km),
                               units::kmh_to_mps(agg.v_u_kmh));
    v_m = units::kmh_to_mps(o.v_merge_kmh.value_or(agg.v_m_kmh));
    a = agg.a_mps2;
    ramp_flow = units::vph_to_vps(agg.ramp_flow_vph);
    arrival = agg.arrival_vph ? units::vph_to_vps(*agg.arrival_vph) : ramp_flow / rc.ramp_ratio;
  } else {
    fd = make_diagram(rc);
    v_m = units::kmh_to_mps(o.v_merge_kmh.value_or(rc.v_ramp_limit_kmh));
    arrival = units::vph_to_vps(rc.demand_vph);
    ramp_flow = arrival * rc.ramp_ratio;
  }
  if (v_m < 0.0 || v_m > fd->v_u() + 1e-9) {
    throw ConfigError("v-merge", "must lie in [0, v_cruise]");
  }
  v_m = std::min(v_m, fd->v_u());
  if (o.samples < 2) {
    throw ConfigError("samples", "must be at least 2");
  }
  if (!(ramp_flow > 0.0)) {
    throw ConfigError("ramp_flow_vph", "must be positive for a discharge profile");
  }
  const DemandProfile demand(arrival, ramp_flow / arrival);
  const DischargeResult r = effective_discharge_rate(*fd, demand, v_m, a, 0.0);
  const auto kin = EpisodeKinematics::from_merge(0.0, 0.0, v_m, fd->v_u(), a, 1.0 / ramp_flow);
  const DischargeProfile profile = discharge_profile(*fd, demand, kin, o.samples);

  std::cout << "theta: " << num(r.theta) << '\n'
            << "mu_vph: " << num(units::vps_to_vph(fd->mu())) << '\n'
            << "mu_eff_vph: " << num(units::vps_to_vph(r.mu_eff)) << '\n';

  auto write_profile = [&](std::ostream& out) {
    CsvWriter csv(out);
    csv.row({"x_m", "mu_eff_vph"});
    for (const auto& p : profile.points) {
      csv.row({num(p.x), num(units::vps_to_vph(p.mu_eff))});
    }
  };
  if (o.out) {
    auto out = open_out(*o.out);
    write_profile(out);
    json meta = mergectl::metadata("discharge", config_hash(rc), rc.master_seed);
    meta["theta"] = r.theta;
    meta["mu_eff_vph"] = units::vps_to_vph(r.mu_eff);
    meta["v_merge_mps"] = v_m;
    meta["x_d_m"] = profile.x_d ? json(*profile.x_d) : json(nullptr);
    meta["x_a_m"] = profile.x_a;
    mergectl::write_json(mergectl::sidecar_path(*o.out), meta);
  } else {
    std::cout << '\n';
    write_profile(std::cout);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct CalibrateOptions {
  std::optional<fs::path> aggregates;
  std::optional<fs::path> trajectories;
  std::string units = "si";
  std::vector<int> lanes;
  TrajectoryCalibrationOptions traj{7, 6, 0.0};
  std::optional<fs::path> out;
};

int cmd_calibrate(const CalibrateOptions& o) {
  CalibrationReport report{};
  json source;
  if (o.aggregates) {
    const Aggregates agg = load_aggregates(*o.aggregates);
    report = validate_discharge(agg);
    source = {{"aggregates", o.aggregates->filename().string()}};
    if (agg.label) source["label"] = *agg.label;
  } else {
    const std::set<int> lanes(o.lanes.begin(), o.lanes.end());
    const auto records =
        load_trajectories(*o.trajectories, lanes, unit_profile_from_string(o.units));
    report = calibrate_trajectories(records, o.traj);
    source = {{"trajectories", o.trajectories->filename().string()},
              {"records", records.size()}};
  }
  json j = report.to_json();
  j["source"] = source;
  const std::string text = j.dump(2) + "\n";
  if (o.out) {
    auto out = open_out(*o.out);
    out << text;
  } else {
    std::cout << text;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct OptimizeOptions {
  CommonOptions common;
  std::string policy = "all";
  fs::path out;
};

fs::path batch_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".batch.json");
  return p;
}

json normalization_json(const Normalization& n) {
  return {{"delay_lo", n.w_lo}, {"delay_hi", n.w_hi}, {"risk_lo", n.s_lo},
          {"risk_hi", n.s_hi},  {"risk_cap", n.risk_cap}};
}

int cmd_optimize(const OptimizeOptions& o) {
  const RunConfig rc = o.common.load();
  std::vector<PolicyKind> policies;
  if (o.policy == "all") {
    policies = {PolicyKind::dp, PolicyKind::early, PolicyKind::late};
  } else {
    policies = {policy_from_string(o.policy)};
  }
  const ExperimentConfig cfg = make_experiment(rc);
  const auto batches = monte_carlo(policies, rc.runs, rc.master_seed, rc.phi, cfg);

  auto out = open_out(o.out);
  CsvWriter csv(out);
  csv.row({"run_id", "phi", "policy", "t_M", "x_M", "v_M", "delay", "risk", "saturated",
           "weighted_cost", "scenario_hash"});
  json batch = mergectl::metadata("optimize", config_hash(rc), rc.master_seed);
  batch["runs"] = rc.runs;
  batch["config"] = rc.to_json();
  batch["config"].erase("threads");
  batch["batches"] = json::array();
  for (const auto& b : batches) {
    for (const auto& r : b.records) {
      csv.row({std::to_string(r.run), num(b.phi), to_string(r.policy), num(r.t_m), num(r.x_m),
               num(r.v_m), num(r.components.delay), num(r.components.risk),
               r.components.saturated ? "1" : "0", num(r.weighted_cost),
               hex(r.scenario_hash)});
    }
    json jb{{"phi", b.phi},
            {"normalization", normalization_json(b.normalization)},
            {"normalization_rounds", b.normalization_rounds},
            {"policies", json::array()}};
    for (const auto& s : b.policies) {
      jb["policies"].push_back({{"policy", to_string(s.policy)},
                                {"mean_delay", s.mean_delay},
                                {"mean_risk", s.mean_risk},
                                {"mean_cost", s.mean_cost}});
    }
    if (policies.size() == 3) {
      const double dp = b.summary(PolicyKind::dp).mean_cost;
      jb["reduction_vs_early"] = reduction(b.summary(PolicyKind::early).mean_cost, dp);
      jb["reduction_vs_late"] = reduction(b.summary(PolicyKind::late).mean_cost, dp);
    }
    batch["batches"].push_back(jb);
  }
  out.close();
  mergectl::write_json(mergectl::sidecar_path(o.out),
                       mergectl::metadata("optimize", config_hash(rc), rc.master_seed));
  mergectl::write_json(batch_path(o.out), batch);
  std::cout << "wrote " << o.out.string() << " and " << batch_path(o.out).string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct SweepOptions {
  CommonOptions common;
  std::string param;
  double from = 0.0;
  double to = 0.0;
  double step = 0.0;
  fs::path out;
};

// Sweep bounds are given in veh/h, m and percent respectively.
double natural_unit(SweepParam p, double v) {
  switch (p) {
    case SweepParam::demand:
      return units::vph_to_vps(v);
    case SweepParam::aux_length:
      return v;
    case SweepParam::ramp_ratio:
      return v / 100.0;
  }
  return v;
}

int cmd_sweep(const SweepOptions& o) {
  const RunConfig rc = o.common.load();
  const SweepParam param = sweep_param_from_string(o.param);
  const auto grid = sweep_grid(o.from, o.to, o.step);
  std::vector<double> values;
  for (double v : grid) {
    values.push_back(natural_unit(param, v));
  }
  const ExperimentConfig cfg = make_experiment(rc);
  const auto rows = sensitivity_sweep(param, values, rc.runs, rc.master_seed, rc.phi, cfg);

  auto out = open_out(o.out);
  CsvWriter csv(out);
  std::vector<std::string> header{"value", "feasible"};
  for (const char* prefix : {"vs_early", "vs_late"}) {
    for (double phi : rc.phi) {
      header.push_back(std::string(prefix) + "_phi" + num(phi));
    }
  }
  for (const char* prefix : {"dp_cost", "early_cost", "late_cost"}) {
    for (double phi : rc.phi) {
      header.push_back(std::string(prefix) + "_phi" + num(phi));
    }
  }
  csv.row(header);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::vector<std::string> f{num(grid[i]), r.feasible ? "1" : "0"};
    for (const auto* col : {&r.vs_early, &r.vs_late, &r.dp_cost, &r.early_cost, &r.late_cost}) {
      for (std::size_t k = 0; k < rc.phi.size(); ++k) {
        f.push_back(r.feasible ? num(col->at(k)) : "");
      }
    }
    csv.row(f);
  }
  out.close();
  json meta = mergectl::metadata("sweep", config_hash(rc), rc.master_seed);
  meta["param"] = o.param;
  meta["from"] = o.from;
  meta["to"] = o.to;
  meta["step"] = o.step;
  meta["runs"] = rc.runs;
  mergectl::write_json(mergectl::sidecar_path(o.out), meta);
  std::cout << "wrote " << o.out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Freeway on-ramp merge analysis"};
  app.set_version_flag("--version", MERGECTL_VERSION);
  app.require_subcommand(1);

  DischargeOptions dis;
  auto* c_dis = app.add_subcommand("discharge", "Effective discharge rate and its profile");
  add_common(c_dis, dis.common);
  c_dis->add_option("--v-merge", dis.v_merge_kmh, "Merge speed, km/h");
  c_dis->add_option("--aggregates", dis.aggregates, "Aggregates JSON")->check(CLI::ExistingFile);
  c_dis->add_option("--samples", dis.samples, "Profile sample count");
  c_dis->add_option("--out", dis.out, "Profile CSV (stdout when omitted)");

  CalibrateOptions cal;
  auto* c_cal = app.add_subcommand("calibrate", "Validate the discharge model against data");
  auto* src = c_cal->add_option_group("source");
  src->add_option("--aggregates", cal.aggregates, "Aggregates JSON")->check(CLI::ExistingFile);
  src->add_option("--trajectories", cal.trajectories, "Trajectory CSV")
      ->check(CLI::ExistingFile);
  src->require_option(1);
  c_cal->add_option("--units", cal.units, "si or ngsim-imperial");
  c_cal->add_option("--lanes", cal.lanes, "Lanes to keep")->delimiter(',');
  c_cal->add_option("--aux-lane", cal.traj.aux_lane, "Auxiliary lane id");
  c_cal->add_option("--main-lane", cal.traj.main_lane, "Mainline lane id");
  c_cal->add_option("--x-count", cal.traj.x_count, "Counting position for ground truth, m");
  c_cal->add_option("--out", cal.out, "Report JSON (stdout when omitted)");

  OptimizeOptions opt;
  auto* c_opt = app.add_subcommand("optimize", "Monte Carlo comparison of merge policies");
  add_common(c_opt, opt.common);
  c_opt->add_option("--policy", opt.policy, "dp, early, late or all")
      ->check(CLI::IsMember({"dp", "early", "late", "all"}));
  c_opt->add_option("--out", opt.out, "Per-run CSV")->required();

  SweepOptions swp;
  auto* c_swp = app.add_subcommand("sweep", "Sensitivity of cost reductions to one parameter");
  add_common(c_swp, swp.common);
  c_swp->add_option("--param", swp.param, "demand (veh/h), aux_length (m) or ramp_ratio (%)")
      ->required()
      ->check(CLI::IsMember({"demand", "aux_length", "ramp_ratio"}));
  c_swp->add_option("--from", swp.from)->required();
  c_swp->add_option("--to", swp.to)->required();
  c_swp->add_option("--step", swp.step)->required();
  c_swp->add_option("--out", swp.out, "Sweep CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (c_dis->parsed()) return cmd_discharge(dis);
    if (c_cal->parsed()) return cmd_calibrate(cal);
    if (c_opt->parsed()) return cmd_optimize(opt);
    if (c_swp->parsed()) return cmd_sweep(swp);
  } catch (const OverSaturatedError& e) {
    std::cerr << "error: over-saturated: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "error: parse: " << e.what() << '\n';
    return kExitConfig;
  } catch (const EstimationError& e) {
    std::cerr << "error: estimation: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: model: " << e.what() << '\n';
    return kExitInfeasible;
  }
  return kExitConfig;
}
