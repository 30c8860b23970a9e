#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "heatalloc/io.hpp"

namespace fs = std::filesystem;
using heatalloc::cli::kExitComputation;
using heatalloc::cli::kExitOk;
using heatalloc::cli::kExitUsage;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"heatalloc"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = heatalloc::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("heatalloc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& name) const { return (root_ / name).string(); }

  std::string write_config(const std::string& name, const std::string& json) const {
    std::ofstream(root_ / name) << json;
    return path(name);
  }

  std::string small_config() const {
    return write_config("small.json",
                        R"({"duration_days": 4, "radiator_count": 6, "floors": 2, "step_s": 120,)"
                        R"( "heater_off_margin_h": 2, "noise": {"stv_temperature_sd": 0.1}})");
  }

  fs::path root_;
};

}  // namespace

TEST_F(Cli, MissingConfigIsUsageErrorNamingPath) {
  const auto r = run({"simulate", "--config", path("nope.json"), "--out", path("x")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find(path("nope.json")), std::string::npos) << r.err;
}

TEST_F(Cli, InvalidConfigNamesField) {
  const auto cfg = write_config("bad.json", R"({"loss_fraction": 2})");
  const auto r = run({"simulate", "--config", cfg, "--out", path("x")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("loss_fraction"), std::string::npos) << r.err;
}

TEST_F(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(run({"simulate", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
}

TEST_F(Cli, SimulateIsDeterministic) {
  const auto cfg = small_config();
  ASSERT_EQ(run({"simulate", "--config", cfg, "--seed", "42", "--out", path("a")}).code, kExitOk);
  ASSERT_EQ(run({"simulate", "--config", cfg, "--seed", "42", "--out", path("b")}).code, kExitOk);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(path("a"))) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), path("a"));
    EXPECT_EQ(slurp(e.path()), slurp(fs::path(path("b")) / rel)) << rel;
  }
  EXPECT_GT(files, 12u);
  ASSERT_EQ(run({"simulate", "--config", cfg, "--seed", "43", "--out", path("c")}).code, kExitOk);
  EXPECT_NE(slurp(fs::path(path("a")) / "dataset.json"), slurp(fs::path(path("c")) / "dataset.json"));
}

TEST_F(Cli, EstimateEvaluatePipeline) {
  const auto cfg = small_config();
  ASSERT_EQ(run({"simulate", "--config", cfg, "--out", path("d")}).code, kExitOk);
  auto r = run({"estimate", "--data", path("d"), "--method", "hca", "--lambda", "auto", "--lcurve",
                "--out", path("e")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(fs::path(path("e")) / "estimate_hca.json"));
  const std::string lcurve = slurp(fs::path(path("e")) / "lcurve_hca.csv");
  EXPECT_FALSE(lcurve.empty());

  r = run({"estimate", "--data", path("d"), "--method", "stv", "--lambda", "0.01", "--out", path("e")});
  ASSERT_EQ(r.code, kExitOk) << r.err;

  r = run({"evaluate", "--data", path("d"), "--estimates", path("e") + "/estimate_hca.json",
           path("e") + "/estimate_stv.json", "--out", path("r")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("hca_improved"), std::string::npos);
  EXPECT_NE(r.out.find("stv_improved"), std::string::npos);
  const auto reports = heatalloc::io::read_report_json(fs::path(path("r")) / "report.json");
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(*reports[0].indicators.delta_e_hca, 0.0);  // nominal vs itself
  EXPECT_EQ(*reports[0].indicators.p_l, 0.0);
  EXPECT_TRUE(fs::exists(fs::path(path("r")) / "budget.json"));

  r = run({"report", "--reports", path("r") + "/report.json"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("hca_nominal"), std::string::npos);
}

TEST_F(Cli, SelfBaseline) {
  ASSERT_EQ(run({"simulate", "--config", small_config(), "--out", path("d")}).code, kExitOk);
  ASSERT_EQ(run({"estimate", "--data", path("d"), "--lambda", "0.05", "--out", path("e")}).code, kExitOk);
  const auto r = run({"evaluate", "--data", path("d"), "--estimates", path("e") + "/estimate_hca.json",
                      "--baseline", "hca_improved", "--out", path("r")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto reports = heatalloc::io::read_report_json(fs::path(path("r")) / "report.json");
  EXPECT_EQ(reports[1].method, "hca_improved");
  EXPECT_EQ(*reports[1].indicators.delta_e_hca, 0.0);
  EXPECT_EQ(*reports[1].indicators.p_l, 0.0);
}

TEST_F(Cli, EightSubsetReportOnFortyRadiators) {
  const auto cfg = write_config("forty.json", R"({"duration_days": 23, "step_s": 120})");
  auto r = run({"simulate", "--config", cfg, "--out", path("d")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("40 radiators"), std::string::npos) << r.out;
  r = run({"evaluate", "--data", path("d"), "--subsets", "registry", "--out", path("r")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto reports = heatalloc::io::read_report_json(fs::path(path("r")) / "report.json");
  ASSERT_EQ(reports[0].rows.size(), 8u);
  double total = 0.0;
  for (const auto& row : reports[0].rows) total += row.fraction;
  EXPECT_NEAR(total, 100.0, 1e-9);
}

TEST_F(Cli, DegenerateLCurveSurfaced) {
  // A noiseless, exactly modelled season is well-posed: the L-curve has no corner.
  const auto cfg = write_config(
      "exact.json",
      R"({"duration_days": 4, "radiator_count": 4, "floors": 2, "step_s": 120, "heater_off_margin_h": 2,)"
      R"( "inertia_time_constant_min": 0, "outdoor_noise_sd": 0, "hca_counts_per_unit_hour": 1e9,)"
      R"( "physics": "stv_matched"})");
  ASSERT_EQ(run({"simulate", "--config", cfg, "--out", path("d")}).code, kExitOk);
  const auto r = run({"estimate", "--data", path("d"), "--method", "stv", "--out", path("e")});
  EXPECT_EQ(r.code, kExitComputation);
  EXPECT_NE(r.err.find("degenerate"), std::string::npos) << r.err;
}

TEST_F(Cli, UnknownSubsetRadiatorFails) {
  ASSERT_EQ(run({"simulate", "--config", small_config(), "--out", path("d")}).code, kExitOk);
  const auto subsets = write_config("subsets.json", R"({"X": ["R999"]})");
  const auto r = run({"evaluate", "--data", path("d"), "--subsets", subsets, "--out", path("r")});
  EXPECT_NE(r.code, kExitOk);
  EXPECT_NE(r.err.find("R999"), std::string::npos) << r.err;
}

TEST_F(Cli, SensitivitySmoke) {
  const auto r = run({"sensitivity", "--config", small_config(), "--axis", "prior_offset", "--levels",
                      "0,0.1", "--lambda", "0.05", "--out", path("s")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(fs::path(path("s")) / "sensitivity_prior_offset.csv"));
}
