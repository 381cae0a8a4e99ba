#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "recoilfree/cli.hpp"
#include "recoilfree/experiments.hpp"
#include "recoilfree/io.hpp"

using namespace recoilfree;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("recoilfree_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const std::string& text) {
  const auto path = dir / "config.json";
  write_text_file(path, text);
  return path.string();
}

double field(const std::string& text, const std::string& key) {
  const auto at = text.find(key + ": ");
  if (at == std::string::npos) return -1.0;
  return std::stod(text.substr(at + key.size() + 2));
}

}  // namespace

TEST(Seeds, Parsing) {
  EXPECT_EQ(cli::parse_seeds("1..4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
  EXPECT_EQ(cli::parse_seeds("7"), (std::vector<std::uint64_t>{7}));
  EXPECT_EQ(cli::parse_seeds("3,1,9"), (std::vector<std::uint64_t>{3, 1, 9}));
  EXPECT_THROW(cli::parse_seeds(""), ConfigError);
  EXPECT_THROW(cli::parse_seeds("4..2"), ConfigError);
  EXPECT_THROW(cli::parse_seeds("1,x"), ConfigError);
  EXPECT_THROW(cli::parse_seeds("-1"), ConfigError);
}

TEST(Simulate, DecoupledRabiPulseIsExact) {
  const auto dir = scratch_dir("simulate");
  const auto config = write_config(dir, R"({"model": {"eta": 0, "omega_max_over_omega0": 1}})");
  const auto result = invoke({"simulate", "--config", config, "--builtin", "rabi", "--out", (dir / "run").string()});
  ASSERT_EQ(result.code, cli::kOk) << result.err;
  EXPECT_LT(field(result.out, "infidelity"), 1e-8);
  EXPECT_NEAR(field(result.out, "pulse_area"), 3.14159265359, 1e-9);
  EXPECT_TRUE(fs::exists(dir / "run" / "result.json"));
  EXPECT_TRUE(fs::exists(dir / "run" / "provenance.json"));

  // A provenance record replays as a configuration.
  const auto replay = invoke({"simulate", "--config", (dir / "run" / "provenance.json").string()});
  ASSERT_EQ(replay.code, cli::kOk) << replay.err;
  EXPECT_EQ(field(replay.out, "infidelity"), field(result.out, "infidelity"));
  fs::remove_all(dir);
}

TEST(Simulate, CompensatedBenchmarkAndCsv) {
  const auto dir = scratch_dir("benchmark");
  const auto config = write_config(dir, R"({"model": {"omega_max_over_omega0": 20}})");
  const auto result =
      invoke({"simulate", "--config", config, "--builtin", "recoil-compensated", "--emit-csv", dir.string()});
  ASSERT_EQ(result.code, cli::kOk) << result.err;
  EXPECT_NEAR(field(result.out, "infidelity"), 8.61e-4, 5e-6);
  EXPECT_NEAR(field(result.out, "normalized_impulse"), -0.505, 1e-9);
  EXPECT_TRUE(fs::exists(dir / "protocol.csv"));
  EXPECT_TRUE(fs::exists(dir / "quadratures.csv"));
  fs::remove_all(dir);
}

TEST(Errors, ExitCodes) {
  const auto dir = scratch_dir("errors");
  EXPECT_EQ(invoke({"simulate"}).code, cli::kConfigError);
  EXPECT_EQ(invoke({"simulate", "--config", (dir / "missing.json").string()}).code, cli::kConfigError);
  EXPECT_EQ(invoke({}).code, cli::kConfigError);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kConfigError);
  const auto bad = write_config(dir, R"({"model": {"omega_max_over_omega0": -3}})");
  EXPECT_EQ(invoke({"simulate", "--config", bad}).code, cli::kConfigError);
  const auto broken = write_config(dir, "{ not json");
  EXPECT_EQ(invoke({"simulate", "--config", broken}).code, cli::kConfigError);
  const auto good = write_config(dir, R"({"model": {"omega_max_over_omega0": 1}})");
  EXPECT_EQ(invoke({"simulate", "--config", good, "--builtin", "square"}).code, cli::kConfigError);
  EXPECT_EQ(invoke({"sweep", "--config", good}).code, cli::kConfigError);
  EXPECT_EQ(invoke({"optimize", "--config", good, "--seeds", "2..1"}).code, cli::kConfigError);
  fs::remove_all(dir);
}

TEST(Optimize, ZeroIterationsAndDeterministicFiles) {
  const auto dir = scratch_dir("optimize");
  const auto config = write_config(dir, R"({"model": {"omega_max_over_omega0": 0.428},
                                            "optimizer": {"n_it": 0}})");
  const auto zero = invoke({"optimize", "--config", config, "--seeds", "1,2", "--out", (dir / "zero").string()});
  ASSERT_EQ(zero.code, cli::kOk) << zero.err;
  EXPECT_TRUE(fs::exists(dir / "zero" / "trajectory_seed1.json"));
  EXPECT_TRUE(fs::exists(dir / "zero" / "trajectory_seed2.json"));
  EXPECT_TRUE(fs::exists(dir / "zero" / "best_protocol.json"));

  const std::vector<std::string> common{"optimize", "--config", config, "--n-it", "30", "--seeds", "3",
                                        "--tf-pulse-area", "1.5"};
  auto first = common;
  first.insert(first.end(), {"--out", (dir / "a").string()});
  auto second = common;
  second.insert(second.end(), {"--out", (dir / "b").string(), "--workers", "2"});
  ASSERT_EQ(invoke(first).code, cli::kOk);
  ASSERT_EQ(invoke(second).code, cli::kOk);
  EXPECT_EQ(read_text_file(dir / "a" / "trajectory_seed3.json"), read_text_file(dir / "b" / "trajectory_seed3.json"));
  const auto best = protocol_from_json(read_text_file(dir / "a" / "best_protocol.json"));
  EXPECT_NEAR(best.t_f, 1.5 * 3.14159265358979 / 0.428, 1e-9);
  fs::remove_all(dir);
}

TEST(Sweep, ResumeRecomputesNothing) {
  const auto dir = scratch_dir("sweep");
  const auto config = write_config(dir, R"({
    "model": {"omega_max_over_omega0": 1},
    "optimizer": {"n_it": 10, "eval_stride": 5},
    "experiment": {"grid": {"omega_max_over_omega0": [0.5, 5], "tf_omega_max_over_pi": [0.5, 2]}}})");
  const auto out = (dir / "results").string();
  const auto csv = (dir / "csv").string();
  const auto first = invoke({"sweep", "--config", config, "--out", out, "--seeds", "1", "--emit-csv", csv});
  ASSERT_EQ(first.code, cli::kOk) << first.err;
  EXPECT_NE(first.out.find("cells: 2 recomputed: 2 reused: 0"), std::string::npos) << first.out;
  EXPECT_TRUE(fs::exists(dir / "csv" / "regime_grid.csv"));
  EXPECT_TRUE(fs::exists(dir / "csv" / "impulse_map.csv"));
  EXPECT_TRUE(fs::exists(dir / "csv" / "lab_time.csv"));

  const auto again = invoke({"sweep", "--config", config, "--out", out, "--seeds", "1", "--resume"});
  ASSERT_EQ(again.code, cli::kOk) << again.err;
  EXPECT_NE(again.out.find("cells: 2 recomputed: 0 reused: 2"), std::string::npos) << again.out;
  EXPECT_EQ(load_cells(out).size(), 2u);
  fs::remove_all(dir);
}

TEST(ProjectForce, ThreeModes) {
  const auto dir = scratch_dir("project");
  const auto config = write_config(dir, R"({"model": {"omega_max_over_omega0": 20}})");
  const auto result = invoke({"project-force", "--config", config, "--out", dir.string(), "--emit-csv", dir.string()});
  ASSERT_EQ(result.code, cli::kOk) << result.err;
  const auto projected = protocol_from_json(read_text_file(dir / "projected_protocol.json"));
  ASSERT_EQ(projected.n_f(), 3);
  // The first-order force pushes against the recoil, so its leading mode is negative.
  EXPECT_LT(projected.theta_f[0], 0.0);
  EXPECT_TRUE(fs::exists(dir / "projected_force.csv"));
  fs::remove_all(dir);
}

TEST(Studies, ShortStroboAndPhaseSpace) {
  const auto dir = scratch_dir("studies");
  const auto strobo = invoke({"strobo", "--repetitions", "4", "--emit-csv", dir.string()});
  ASSERT_EQ(strobo.code, cli::kOk) << strobo.err;
  EXPECT_NEAR(field(strobo.out, "initial_rabi_infidelity"), 0.2255, 5e-4);
  EXPECT_TRUE(fs::exists(dir / "strobo.csv"));
  const auto phase = invoke({"phase-space", "--omega-max", "20"});
  ASSERT_EQ(phase.code, cli::kOk) << phase.err;
  EXPECT_GT(field(phase.out, "momentum_ratio"), 1.0);
  fs::remove_all(dir);
}

TEST(Version, PrintsProvenance) {
  const auto result = invoke({"--version"});
  EXPECT_EQ(result.code, cli::kOk);
  EXPECT_NE(result.out.find("recoilfree"), std::string::npos);
}
