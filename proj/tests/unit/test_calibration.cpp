#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "merge/calibration.hpp"
#include "merge/errors.hpp"
#include "merge/traffic_core.hpp"
#include "merge/units.hpp"
#include "synthetic.hpp"

using namespace merge;

namespace {

std::string header() { return std::string(kTrajectoryHeader) + "\n"; }

Aggregates dataset(const char* name) {
  return load_aggregates(std::string(MERGE_TEST_DATA) + "/" + name);
}

}  // namespace

TEST(TrajectoryCsv, EmptyFileWithHeader) {
  std::istringstream in(header());
  EXPECT_TRUE(parse_trajectories(in).empty());
}

TEST(TrajectoryCsv, SortsAndFilters) {
  std::ostringstream csv;
  csv << header();
  for (int frame = 9; frame >= 0; --frame) {
    for (int id : {3, 1, 2}) {
      csv << id << ',' << frame * 0.1 << ',' << 10 * id + frame << ',' << (id == 2 ? 7 : 6)
          << ",12.5,4.5\n";
    }
  }
  std::istringstream in(csv.str());
  const auto all = parse_trajectories(in);
  ASSERT_EQ(all.size(), 30u);
  for (std::size_t i = 1; i < all.size(); ++i) {
    EXPECT_TRUE(std::tie(all[i - 1].vehicle_id, all[i - 1].t) <
                std::tie(all[i].vehicle_id, all[i].t));
  }
  std::istringstream again(csv.str());
  EXPECT_EQ(parse_trajectories(again, {7}).size(), 10u);
}

TEST(TrajectoryCsv, ImperialUnits) {
  std::istringstream in(header() + "1,0.5,100,6,10,15\n");
  const auto r = parse_trajectories(in, {}, UnitProfile::ngsim_imperial);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_NEAR(r[0].x, 30.48, 1e-12);
  EXPECT_NEAR(r[0].v, 3.048, 1e-12);
  EXPECT_NEAR(r[0].length, 4.572, 1e-12);
  EXPECT_EQ(r[0].t, 0.5);
  EXPECT_THROW(unit_profile_from_string("furlongs"), ConfigError);
}

TEST(TrajectoryCsv, Diagnostics) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      parse_trajectories(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("id,t\n"), 1u);
  EXPECT_EQ(line_of(header() + "1,0,0,6,1,4\n1,0.1,abc,6,1,4\n"), 3u);
  EXPECT_EQ(line_of(header() + "1,0,0,6,1\n"), 2u);
  EXPECT_EQ(line_of(header() + "1,0,0,6,1,4\n2,0,0,6,1,4\n1,0,5,6,1,4\n"), 4u);
}

TEST(TrajectoryCsv, RoundTripIsIdempotent) {
  const auto recs = test::synthetic_trajectories({});
  std::stringstream buf;
  write_trajectories(buf, recs);
  const auto back = parse_trajectories(buf);
  EXPECT_EQ(back, recs);
}

TEST(Estimation, WaveSpeedFromKnownWave) {
  const test::SyntheticSetup setup;
  const auto recs = test::synthetic_trajectories(setup);
  const auto est = estimate_wave_speed(recs);
  EXPECT_EQ(est.per_wave.size(), 2u);
  EXPECT_LE(std::abs(est.speed - setup.w) / setup.w, 0.05);
  EXPECT_NEAR(units::mps_to_kmh(est.speed), 19.0, 19.0 * 0.05);
}

TEST(Estimation, WaveSpeedIsTranslationInvariant) {
  test::SyntheticSetup setup;
  const auto base = estimate_wave_speed(test::synthetic_trajectories(setup)).speed;
  setup.t_offset = 437.25;
  EXPECT_NEAR(estimate_wave_speed(test::synthetic_trajectories(setup)).speed, base, 1e-9);
}

TEST(Estimation, FreeFlowHasNoWaves) {
  test::SyntheticSetup setup;
  setup.dwell = 0.0;
  setup.decel = 1e-3;
  EXPECT_THROW(estimate_wave_speed(test::synthetic_trajectories(setup)), EstimationError);
}

TEST(Estimation, JamDensityAndCruiseSpeed) {
  const test::SyntheticSetup setup;
  const auto recs = test::synthetic_trajectories(setup);
  EXPECT_NEAR(units::per_m_to_per_km(estimate_jam_density(recs)), 113.0, 113.0 * 0.02);
  EXPECT_NEAR(units::mps_to_kmh(estimate_cruise_speed(recs)), 48.0, 48.0 * 0.02);

  std::vector<TrajectoryRecord> single;
  for (const auto& r : recs) {
    if (r.vehicle_id == 1) single.push_back(r);
  }
  EXPECT_THROW(estimate_jam_density(single), EstimationError);
}

TEST(Validation, DatasetOne) {
  const auto r = validate_discharge(dataset("dataset1_aggregates.json"));
  const double theta = (768.0 / 3600.0) * std::pow((48.0 - 24.0) / 3.6, 2) / (2 * 1.5 * 48.0 / 3.6);
  const double mu_eff = 1538.0 * (1 - theta);
  EXPECT_NEAR(r.theta, theta, 1e-12);
  EXPECT_NEAR(units::vps_to_vph(r.mu_eff), mu_eff, 1e-9);
  EXPECT_NEAR(r.ape_mu_eff, 100 * std::abs(mu_eff - 1120.0) / 1120.0, 1e-9);
  EXPECT_NEAR(r.ape_mu_max, 100 * (1538.0 - 1120.0) / 1120.0, 1e-9);
  EXPECT_LE(r.mu_eff, r.mu_derived);
}

TEST(Validation, DatasetTwo) {
  const auto r = validate_discharge(dataset("dataset2_aggregates.json"));
  const double theta = (798.0 / 3600.0) * std::pow((48.0 - 26.0) / 3.6, 2) / (2 * 1.5 * 48.0 / 3.6);
  const double mu_eff = 1538.0 * (1 - theta);
  EXPECT_NEAR(units::vps_to_vph(r.mu_eff), mu_eff, 1e-9);
  EXPECT_NEAR(r.ape_mu_eff, 100 * std::abs(mu_eff - 1294.0) / 1294.0, 1e-9);
  EXPECT_NEAR(r.ape_mu_max, 100 * (1538.0 - 1294.0) / 1294.0, 1e-9);
}

TEST(Validation, ExactGroundTruthGivesZeroError) {
  auto agg = dataset("dataset1_aggregates.json");
  agg.ground_truth_vph = units::vps_to_vph(validate_discharge(agg).mu_eff);
  EXPECT_NEAR(validate_discharge(agg).ape_mu_eff, 0.0, 1e-9);
}

TEST(Validation, ErrorsInvariantUnderCapacityScale) {
  auto agg = dataset("dataset1_aggregates.json");
  const auto base = validate_discharge(agg);
  agg.mu_vph *= 3.6;
  agg.ground_truth_vph *= 3.6;
  const auto scaled = validate_discharge(agg);
  EXPECT_NEAR(scaled.ape_mu_eff, base.ape_mu_eff, 1e-9);
  EXPECT_NEAR(scaled.ape_mu_max, base.ape_mu_max, 1e-9);
}

TEST(Validation, OverSaturated) {
  auto agg = dataset("dataset1_aggregates.json");
  agg.v_m_kmh = 0.0;
  agg.ramp_flow_vph = 3000.0;
  agg.arrival_vph.reset();
  EXPECT_THROW(validate_discharge(agg), OverSaturatedError);
}

TEST(Aggregates, SchemaChecks) {
  nlohmann::json j = dataset("dataset1_aggregates.json").to_json();
  EXPECT_EQ(Aggregates::from_json(j).to_json(), j);
  auto missing = j;
  missing.erase("mu_vph");
  try {
    Aggregates::from_json(missing);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "mu_vph");
  }
  auto bad = j;
  bad["arrival_vph"] = 10.0;
  EXPECT_THROW(Aggregates::from_json(bad), ConfigError);
  EXPECT_THROW(load_aggregates("/nonexistent/aggregates.json"), ConfigError);
}

TEST(Calibration, SyntheticPipeline) {
  const test::SyntheticSetup setup;
  const auto recs = test::synthetic_trajectories(setup);
  TrajectoryCalibrationOptions opts;
  opts.x_count = 1500.0;
  const auto r = calibrate_trajectories(recs, opts);

  EXPECT_NEAR(*r.w_est, setup.w, setup.w * 0.05);
  EXPECT_NEAR(r.v_m_est, setup.v_m, 1e-9);
  EXPECT_NEAR(r.a_est, setup.accel, 1e-6);
  EXPECT_NEAR(r.ramp_flow, setup.mergers / setup.t_end, 1e-12);

  // Main-lane crossings of x_count, counted directly.
  int crossings = 0;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const auto& a = recs[i - 1];
    const auto& b = recs[i];
    if (a.vehicle_id == b.vehicle_id && a.lane == 6 && b.lane == 6 && a.x < 1500.0 &&
        b.x >= 1500.0) {
      ++crossings;
    }
  }
  EXPECT_NEAR(r.ground_truth_rate, crossings / setup.t_end, 1e-12);
  EXPECT_NEAR(r.mu_derived,
              FundamentalDiagram::apex_capacity(*r.w_est, *r.k_j_est, *r.v_u_est), 1e-12);
  EXPECT_NEAR(r.mu_eff, r.mu_derived * (1 - r.theta), 1e-12);
}
