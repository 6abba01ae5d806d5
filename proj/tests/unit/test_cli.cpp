#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "merge/calibration.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(MERGECTL_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string data(const char* name) { return std::string(MERGE_TEST_DATA) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

double field(const std::string& out, const std::string& key) {
  for (const auto& l : lines(out)) {
    if (l.rfind(key + ": ", 0) == 0) return std::stod(l.substr(key.size() + 2));
  }
  return -1.0;
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("mergectl_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, DischargeAtCruiseSpeed) {
  const auto r = run("discharge --v-merge 105");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(field(r.out, "theta"), 0.0);
  EXPECT_EQ(field(r.out, "mu_eff_vph"), field(r.out, "mu_vph"));
}

TEST_F(Cli, DischargeFromAggregates) {
  const auto r = run("discharge --aggregates " + data("dataset1_aggregates.json") + " --out " +
                     path("profile.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(field(r.out, "mu_eff_vph"), 1173.4, 0.1);
  const auto rows = lines(slurp(path("profile.csv")));
  ASSERT_GT(rows.size(), 100u);
  EXPECT_EQ(rows.front(), "x_m,mu_eff_vph");
  EXPECT_TRUE(fs::exists(path("profile.csv.meta.json")));
}

TEST_F(Cli, ConfigErrorNamesKey) {
  std::ofstream(path("bad.json")) << R"({"fd": {"w_kmh": -3}})";
  const auto r = run("discharge --config " + path("bad.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("fd.w_kmh"), std::string::npos) << r.out;
}

TEST_F(Cli, OverSaturatedExitsWithTwo) {
  const auto r = run("discharge --v-merge 1 --demand 9000 --ramp-ratio 0.5");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("over-saturated"), std::string::npos);
}

TEST_F(Cli, CalibrateAggregates) {
  auto r = run("calibrate --aggregates " + data("dataset1_aggregates.json") + " --out " +
               path("report.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto report = nlohmann::json::parse(slurp(path("report.json")));
  EXPECT_NEAR(report.at("ape_mu_eff_pct").get<double>(), 4.77, 0.01);
  EXPECT_NEAR(report.at("ape_mu_max_pct").get<double>(), 37.32, 0.01);

  r = run("calibrate --aggregates " + data("dataset2_aggregates.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(nlohmann::json::parse(r.out).at("ape_mu_eff_pct").get<double>(), 5.74, 0.01);
}

TEST_F(Cli, CalibrateTrajectories) {
  merge::save_trajectories(path("traj.csv"), merge::test::synthetic_trajectories({}));
  const auto r = run("calibrate --trajectories " + path("traj.csv") + " --x-count 1500");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("w_est_mps").get<double>(), 19.0 / 3.6, 19.0 / 3.6 * 0.05);
}

TEST_F(Cli, CalibrateInputErrors) {
  EXPECT_NE(run("calibrate --aggregates " + path("missing.json")).code, 0);
  EXPECT_EQ(run("calibrate").code, 1);
  std::ofstream(path("broken.csv")) << merge::kTrajectoryHeader << "\n1,0,0,6\n";
  const auto r = run("calibrate --trajectories " + path("broken.csv") + " --x-count 10");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("line 2"), std::string::npos) << r.out;
}

TEST_F(Cli, OptimizeRejectsZeroRuns) {
  const auto r = run("optimize --runs 0 --out " + path("o.csv"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("runs"), std::string::npos);
}

TEST_F(Cli, OptimizeIsByteReproducible) {
  const std::string common = " --policy all --runs 4 --seed 77 --threads ";
  ASSERT_EQ(run("optimize" + common + "1 --out " + path("a.csv")).code, 0);
  ASSERT_EQ(run("optimize" + common + "3 --out " + path("b.csv")).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(slurp(path("a.batch.json")), slurp(path("b.batch.json")));
  const auto rows = lines(slurp(path("a.csv")));
  EXPECT_EQ(rows.front(),
            "run_id,phi,policy,t_M,x_M,v_M,delay,risk,saturated,weighted_cost,scenario_hash");
  EXPECT_EQ(rows.size(), 1u + 4 * 3 * 3);
  const auto meta = nlohmann::json::parse(slurp(path("a.csv.meta.json")));
  EXPECT_EQ(meta.at("master_seed").get<std::uint64_t>(), 77u);
  EXPECT_TRUE(meta.contains("config_hash"));
}

TEST_F(Cli, SweepRowCounts) {
  auto r = run("sweep --param aux_length --from 100 --to 200 --step 10 --runs 1 --phi 1 --out " +
               path("aux.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(lines(slurp(path("aux.csv"))).size(), 12u);

  r = run("sweep --param ramp_ratio --from 5 --to 20 --step 5 --runs 1 --phi 1 --out " +
          path("ramp.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(lines(slurp(path("ramp.csv"))).size(), 5u);

  r = run("sweep --param demand --from 1200 --to 2200 --step 100 --runs 1 --out " +
          path("demand.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rows = lines(slurp(path("demand.csv")));
  ASSERT_EQ(rows.size(), 12u);
  int reduction_cols = 0;
  std::istringstream header(rows.front());
  for (std::string col; std::getline(header, col, ',');) {
    if (col.rfind("vs_", 0) == 0) ++reduction_cols;
  }
  EXPECT_EQ(reduction_cols, 6);
}
