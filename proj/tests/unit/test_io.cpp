#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "recoilfree/io.hpp"

using namespace recoilfree;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("recoilfree_io_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Protocol, JsonRoundTripIsBitExact) {
  SineModeProtocol p(7.123456789012345, 3, 2);
  p.theta_x = {0.1, -1.0 / 3.0, 1e-17};
  p.theta_y = {2.0 / 7.0, 0.0, -5e300};
  p.theta_f = {std::nextafter(1.0, 2.0), -0.505};
  EXPECT_EQ(protocol_from_json(protocol_to_json(p)), p);
}

TEST(Protocol, MalformedInputsAreConfigErrors) {
  EXPECT_THROW(protocol_from_json("not json"), ConfigError);
  EXPECT_THROW(protocol_from_json(R"({"t_f": 1.0})"), ConfigError);
  EXPECT_THROW(protocol_from_json(
                   R"({"t_f": 1, "n_omega": 2, "n_f": 0, "theta_x": [1], "theta_y": [0, 0], "theta_f": []})"),
               ConfigError);
  EXPECT_THROW(protocol_from_json(
                   R"({"t_f": 1, "n_omega": 1, "n_f": 0, "theta_x": ["a"], "theta_y": [0], "theta_f": []})"),
               ConfigError);
  EXPECT_THROW(protocol_from_json(
                   R"({"t_f": -1, "n_omega": 1, "n_f": 0, "theta_x": [1], "theta_y": [0], "theta_f": []})"),
               ConfigError);
}

TEST(Model, JsonRoundTrip) {
  ModelConfig config;
  config.eta = 0.3;
  config.omega_max = 12.5;
  config.gamma_z = 1e-3;
  config.n_max = 5;
  config.v_max_dimless = 100.0;
  const auto back = model_config_from_json(model_config_to_json(config));
  EXPECT_EQ(back.eta, config.eta);
  EXPECT_EQ(back.omega_max, config.omega_max);
  EXPECT_EQ(back.gamma_z, config.gamma_z);
  EXPECT_EQ(back.n_max, config.n_max);
  EXPECT_EQ(back.v_max_dimless, config.v_max_dimless);
}

TEST(Model, NestedBlockAndDefaults) {
  const auto config = model_config_from_json(R"({"model": {"omega_max_over_omega0": 2}})");
  EXPECT_EQ(config.omega_max, 2.0);
  EXPECT_EQ(config.eta, ModelConfig{}.eta);
  EXPECT_EQ(config.n_max, 3);
  EXPECT_EQ(config.gamma_z, 0.0);
}

TEST(Model, PhysicalBlockDerivesEtaAndVelocityBound) {
  const auto config = model_config_from_json(R"({
    "omega_max_over_omega0": 1,
    "physical": {"mass_u": 171, "omega0_over_2pi_hz": 50000, "wavelength_nm": 302, "v_max_m_per_s": 500}
  })");
  EXPECT_NEAR(config.eta, 0.5058, 1e-3);
  EXPECT_NEAR(config.v_max_dimless, ModelConfig{}.v_max_dimless, 1e-6 * config.v_max_dimless);

  // Without a wavelength eta is taken as given.
  const auto pinned = model_config_from_json(R"({
    "omega_max_over_omega0": 1, "eta": 0.505,
    "physical": {"mass_u": 171, "omega0_over_2pi_hz": 50000, "v_max_m_per_s": 500}
  })");
  EXPECT_EQ(pinned.eta, 0.505);
  EXPECT_NEAR(pinned.v_max_dimless, ModelConfig{}.v_max_dimless, 1e-6 * pinned.v_max_dimless);

  // A wavelength fixes eta, so a conflicting value is rejected.
  EXPECT_THROW(model_config_from_json(R"({
    "omega_max_over_omega0": 1, "eta": 0.3,
    "physical": {"mass_u": 171, "omega0_over_2pi_hz": 50000, "wavelength_nm": 302, "v_max_m_per_s": 500}
  })"),
               ConfigError);
}

TEST(Model, InvalidConfigurationsAreRejected) {
  EXPECT_THROW(model_config_from_json("{"), ConfigError);
  EXPECT_THROW(model_config_from_json(R"({"eta": 0.5})"), ConfigError);
  EXPECT_THROW(model_config_from_json(R"({"omega_max_over_omega0": -1})"), ConfigError);
  EXPECT_THROW(model_config_from_json(R"({"omega_max_over_omega0": 1, "n_max": 0})"), ConfigError);
  EXPECT_THROW(model_config_from_json(R"({"omega_max_over_omega0": "fast"})"), ConfigError);
  EXPECT_THROW(model_config_from_json(R"({"omega_max_over_omega0": 1, "gamma_z_over_omega0_div_2pi": -1})"),
               ConfigError);
}

TEST(Hyperparams, RoundTripAndDefaults) {
  OptimizerHyperparams hyper;
  hyper.alpha_dr = 0.41;
  hyper.alpha_tw = 1.61;
  hyper.n_it = 1234;
  hyper.n_omega = 9;
  hyper.n_f = 4;
  hyper.seed = 77;
  hyper.eval_stride = 10;
  hyper.stall_window = 500;
  hyper.propagation.substeps_per_period = 400;
  const auto back = hyperparams_from_json("{\"optimizer\": " + hyperparams_to_json(hyper) + "}");
  EXPECT_EQ(back.alpha_dr, hyper.alpha_dr);
  EXPECT_EQ(back.alpha_tw, hyper.alpha_tw);
  EXPECT_EQ(back.n_it, hyper.n_it);
  EXPECT_EQ(back.n_omega, hyper.n_omega);
  EXPECT_EQ(back.n_f, hyper.n_f);
  EXPECT_EQ(back.seed, hyper.seed);
  EXPECT_EQ(back.eval_stride, hyper.eval_stride);
  EXPECT_EQ(back.stall_window, hyper.stall_window);
  EXPECT_EQ(back.propagation.substeps_per_period, 400);

  EXPECT_EQ(hyperparams_from_json("{}").n_it, OptimizerHyperparams{}.n_it);
  EXPECT_THROW(hyperparams_from_json(R"({"optimizer": {"alpha_dr": -1}})"), ConfigError);
  EXPECT_THROW(hyperparams_from_json(R"({"optimizer": {"n_it": "many"}})"), ConfigError);
}

TEST(Files, AtomicWriteReplacesAndLeavesNoTemporary) {
  const auto dir = scratch_dir("atomic");
  const auto path = dir / "nested" / "record.json";
  write_text_file(path, "first");
  write_text_file(path, "second");
  EXPECT_EQ(read_text_file(path), "second");
  std::size_t entries = 0;
  for (const auto& entry : std::filesystem::directory_iterator(path.parent_path())) {
    ++entries;
    EXPECT_EQ(entry.path().extension(), ".json");
  }
  EXPECT_EQ(entries, 1u);
  EXPECT_THROW(read_text_file(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Csv, TwelveSignificantDigits) {
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(123456.7890123456), "123456.789012");
  EXPECT_EQ(format_number(2.0), "2");
  std::ostringstream out;
  CsvWriter csv(out, {"a", "b"});
  csv.row({1.0 / 7.0, -2.5e-11});
  EXPECT_EQ(out.str(), "a,b\n0.142857142857,-2.5e-11\n");
  EXPECT_THROW(csv.row({1.0}), std::logic_error);
}

TEST(Csv, ProtocolTimeseries) {
  SineModeProtocol p(2.0, 1, 1);
  p.theta_x[0] = 1.0;
  p.theta_f[0] = 0.5;
  std::ostringstream out;
  write_protocol_timeseries_csv(out, Schedule(p), 3);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,abs_omega,arg_omega,f_tw");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0,0,0");
  std::getline(in, line);
  EXPECT_EQ(line, "1,1,0,0.5");
}

TEST(Provenance, NamesTheLibrary) { EXPECT_EQ(build_provenance().rfind("recoilfree ", 0), 0u); }
