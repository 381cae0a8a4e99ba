#include "recoilfree/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "recoilfree/dynamics.hpp"
#include "recoilfree/experiments.hpp"
#include "recoilfree/io.hpp"
#include "recoilfree/pepr.hpp"
#include "recoilfree/protocols.hpp"

namespace recoilfree::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kPi = std::numbers::pi;

// Thrown for problems the user can fix by changing arguments or files.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Resolved configuration document. A provenance record is accepted as well:
// its "config" member is the document that produced it.
struct RunConfig {
  json document = json::object();
  ModelConfig model;
  OptimizerHyperparams optimizer;
  bool explicit_iterations = false;
};

json experiment_block(const RunConfig& config, const char* key) {
  const auto& experiment = config.document.value("experiment", json::object());
  return experiment.value(key, json::object());
}

RunConfig load_config(const std::optional<std::string>& path, bool full_scale) {
  RunConfig config;
  if (path) {
    if (!fs::exists(*path)) throw UsageError("config file not found: " + *path);
    try {
      config.document = json::parse(read_text_file(*path));
    } catch (const json::parse_error& error) {
      throw ConfigError(std::string("malformed config: ") + error.what());
    }
    if (config.document.contains("config") && config.document.contains("arguments")) {
      config.document = json(config.document.at("config"));
    }
  }
  if (!config.document.is_object()) throw ConfigError("config must be a JSON object");
  auto& document = config.document;
  if (!document.contains("model")) document["model"] = json::parse(model_config_to_json(config.model));
  config.model = model_config_from_json(document.at("model").dump());

  OptimizerHyperparams defaults;
  defaults.n_it = full_scale ? kFullScaleIterations : kDeskIterations;
  config.explicit_iterations = document.contains("optimizer") && document["optimizer"].contains("n_it");
  config.optimizer = hyperparams_from_json(document.dump(), defaults);
  return config;
}

// Configuration as it was actually used, in the input schema.
json resolved_config(const RunConfig& config) {
  json document = config.document;
  document["model"] = json::parse(model_config_to_json(config.model));
  document["optimizer"] = json::parse(hyperparams_to_json(config.optimizer));
  return document;
}

void write_provenance(const fs::path& dir, const std::vector<std::string>& args, const RunConfig& config,
                      const json& extra = json::object()) {
  json record{{"tool", build_provenance()}, {"arguments", args}, {"config", resolved_config(config)}};
  for (const auto& [key, value] : extra.items()) record[key] = value;
  write_text_file(dir / "provenance.json", record.dump(2));
}

template <typename Writer>
void write_csv(const fs::path& path, Writer&& writer) {
  std::ostringstream buffer;
  writer(buffer);
  write_text_file(path, buffer.str());
}

std::vector<double> number_list(const json& node, const char* key, std::vector<double> fallback) {
  if (!node.contains(key)) return fallback;
  try {
    return node.at(key).get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(key) + " must be a list of numbers");
  }
}

void print_populations(std::ostream& out, const DensityOperator& rho) {
  out << "motional_populations:";
  for (double p : motional_populations(rho)) out << ' ' << format_number(p);
  out << '\n';
}

// Common options shared by most subcommands.
struct Common {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::string> emit_csv;
  std::string seeds;
  int workers = 1;
  bool full_scale = false;
};

void add_common(CLI::App* command, Common& common, bool seeds, const std::string& default_seeds = "1") {
  command->add_option("--config", common.config, "JSON configuration file");
  command->add_option("--out", common.out, "output directory");
  command->add_option("--emit-csv", common.emit_csv, "directory for CSV output");
  command->add_option("--workers", common.workers, "worker threads")->check(CLI::PositiveNumber);
  command->add_flag("--full-scale", common.full_scale, "n_it = 1e5 unless the config sets it");
  if (seeds) {
    common.seeds = default_seeds;
    command->add_option("--seeds", common.seeds, "seed list: 1..8 or 1,2,5")->capture_default_str();
  }
}

std::optional<fs::path> csv_dir(const Common& common) {
  if (common.emit_csv) return fs::path(*common.emit_csv);
  return std::nullopt;
}

// --- subcommands ----------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::optional<std::string> protocol;
  std::string builtin = "rabi";
  std::optional<double> omega_max;
  int n_f = 3;
};

int simulate(const SimulateArgs& a, const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  if (!a.common.config) throw UsageError("simulate requires --config");
  auto config = load_config(a.common.config, a.common.full_scale);
  if (a.omega_max) {
    config.model.omega_max = *a.omega_max;
    config.model.validate();
  }
  const auto& model_config = config.model;

  std::optional<Schedule> schedule;
  if (a.protocol) {
    schedule.emplace(protocol_from_json(read_text_file(*a.protocol)));
  } else if (a.builtin == "rabi") {
    schedule.emplace(rabi_protocol(model_config.omega_max));
  } else if (a.builtin == "recoil-compensated") {
    schedule.emplace(recoil_compensated_protocol(model_config, a.n_f).exact);
  } else if (a.builtin == "recoil-compensated-projected") {
    schedule.emplace(recoil_compensated_protocol(model_config, a.n_f).projected);
  } else {
    throw UsageError("unknown builtin protocol " + a.builtin);
  }

  const auto report = check_constraints(schedule->protocol(), model_config);
  if (!report.amplitude_ok) {
    err << "warning: |Omega| reaches " << format_number(report.worst_amplitude) << " > Omega_max\n";
  }
  if (!report.velocity_ok && !schedule->has_force_curve()) {
    err << "warning: |df/dt| reaches " << format_number(report.worst_velocity) << " >= v_max\n";
  }

  const Model model(model_config);
  const auto settings = config.optimizer.propagation;
  const auto rho = evolve(model, *schedule, DensityOperator::initial(model_config), 0.0,
                          schedule->duration(), settings);
  const double value = infidelity(rho, DensityOperator::target(model_config));
  const double area = pulse_area(schedule->protocol());
  const double impulse = normalized_impulse(*schedule);

  out << "protocol: " << (a.protocol ? *a.protocol : a.builtin) << '\n';
  out << "t_f_omega0: " << format_number(schedule->duration()) << '\n';
  out << "infidelity: " << format_number(value) << '\n';
  out << "pulse_area: " << format_number(area) << '\n';
  out << "normalized_impulse: " << format_number(impulse) << '\n';
  print_populations(out, rho);

  if (a.common.out) {
    const fs::path dir(*a.common.out);
    json result{{"infidelity", value},
                {"pulse_area", area},
                {"normalized_impulse", impulse},
                {"motional_populations", motional_populations(rho)}};
    write_text_file(dir / "result.json", result.dump(2));
    write_provenance(dir, args, config);
  }
  if (auto dir = csv_dir(a.common)) {
    write_csv(*dir / "protocol.csv", [&](std::ostream& s) {
      write_protocol_timeseries_csv(s, *schedule, settings.observable_sample_count);
    });
    write_csv(*dir / "quadratures.csv", [&](std::ostream& s) {
      CsvWriter csv(s, {"t", "position", "momentum"});
      for (const auto& q : quadrature_trajectory(model, *schedule, DensityOperator::initial(model_config),
                                                 settings)) {
        csv.row({q.t, q.position, q.momentum});
      }
    });
  }
  return kOk;
}

json trajectory_json(const OptimizationTrajectory& trajectory, std::uint64_t seed) {
  json checkpoints = json::array();
  for (const auto& c : trajectory.checkpoints) {
    checkpoints.push_back({{"accepted", c.accepted},
                           {"proposals", c.proposals},
                           {"infidelity", c.infidelity},
                           {"alpha_dr", c.alpha_dr}});
  }
  return {{"seed", seed},
          {"checkpoints", checkpoints},
          {"best_infidelity", trajectory.best_infidelity},
          {"accepted", trajectory.accepted},
          {"rejected", trajectory.rejected},
          {"halvings", trajectory.halvings},
          {"final_alpha_dr", trajectory.final_alpha_dr},
          {"failure", trajectory.failure ? json(*trajectory.failure) : json(nullptr)},
          {"best_protocol", json::parse(protocol_to_json(trajectory.best_protocol))},
          {"final_protocol", json::parse(protocol_to_json(trajectory.final_protocol))}};
}

struct OptimizeArgs {
  Common common;
  std::optional<double> pulse_area;
  std::optional<long> n_it;
  std::optional<std::string> calibration;
};

int optimize_command(const OptimizeArgs& a, const std::vector<std::string>& args, std::ostream& out,
                     std::ostream& err) {
  if (!a.common.config) throw UsageError("optimize requires --config");
  auto config = load_config(a.common.config, a.common.full_scale);
  if (a.n_it) config.optimizer.n_it = *a.n_it;
  config.optimizer.validate();
  const double area = a.pulse_area.value_or(
      experiment_block(config, "optimize").value("tf_omega_max_over_pi", 1.5));
  if (!(area > 0.0)) throw ConfigError("tf_omega_max_over_pi must be positive");
  const double t_f = area * kPi / config.model.omega_max;
  if (a.calibration) {
    const auto rates = CalibrationTable::from_json(read_text_file(*a.calibration))
                           .lookup(config.model.omega_max, t_f);
    config.optimizer.alpha_dr = rates.alpha_dr;
    config.optimizer.alpha_tw = rates.alpha_tw;
    if (!rates.from_table) err << "warning: calibration table has no entry; default learning rates\n";
  }
  const auto seeds = parse_seeds(a.common.seeds);

  std::vector<OptimizationTrajectory> runs(seeds.size());
  run_parallel(seeds.size(), a.common.workers, [&](std::size_t k) {
    auto hyper = config.optimizer;
    hyper.seed = seeds[k];
    runs[k] = optimize(config.model, t_f, hyper);
  });

  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& run = runs[k];
    out << "seed " << seeds[k] << ": best_infidelity " << format_number(run.best_infidelity)
        << " accepted " << run.accepted << " rejected " << run.rejected << '\n';
    if (run.failure) err << "seed " << seeds[k] << " stopped early: " << *run.failure << '\n';
    if (!run.checkpoints.empty() && (!best || run.best_infidelity < runs[*best].best_infidelity)) best = k;
  }
  if (!best) {
    err << "no trajectory produced a checkpoint\n";
    return kNumericalFailure;
  }
  const auto& winner = runs[*best];
  out << "best_seed: " << seeds[*best] << '\n';
  out << "best_infidelity: " << format_number(winner.best_infidelity) << '\n';
  out << "normalized_impulse: " << format_number(normalized_impulse(winner.best_protocol)) << '\n';

  if (a.common.out) {
    const fs::path dir(*a.common.out);
    for (std::size_t k = 0; k < runs.size(); ++k) {
      write_text_file(dir / ("trajectory_seed" + std::to_string(seeds[k]) + ".json"),
                      trajectory_json(runs[k], seeds[k]).dump(2));
    }
    write_text_file(dir / "best_protocol.json", protocol_to_json(winner.best_protocol));
    write_provenance(dir, args, config, {{"seeds", seeds}, {"tf_omega_max_over_pi", area}});
  }
  if (auto dir = csv_dir(a.common)) {
    write_csv(*dir / "best_protocol.csv", [&](std::ostream& s) {
      write_protocol_timeseries_csv(s, Schedule(winner.best_protocol),
                                    config.optimizer.propagation.observable_sample_count);
    });
  }
  const bool any_failed = std::any_of(runs.begin(), runs.end(), [](const auto& r) { return r.failure; });
  return any_failed ? kNumericalFailure : kOk;
}

struct SweepArgs {
  Common common;
  bool resume = false;
  std::optional<std::string> calibration;
};

SweepOptions sweep_options(const SweepArgs& a, std::ostream& out) {
  if (!a.common.out) throw UsageError("sweeps require --out");
  SweepOptions options;
  options.out_dir = fs::path(*a.common.out);
  options.workers = a.common.workers;
  options.resume = a.resume;
  if (a.calibration) options.calibration = CalibrationTable::from_json(read_text_file(*a.calibration));
  auto lock = std::make_shared<std::mutex>();
  options.on_cell = [&out, lock](const SweepCell& cell) {
    const std::lock_guard guard(*lock);
    out << "cell " << cell.spec.key() << ": best " << format_number(cell.best_infidelity)
        << (cell.complete() ? "" : " (failures)") << '\n';
  };
  return options;
}

int finish_sweep(const SweepResult& result, std::ostream& out, std::ostream& err) {
  out << "cells: " << result.cells.size() << " recomputed: " << result.recomputed
      << " reused: " << result.reused << '\n';
  if (result.partial()) {
    for (const auto& cell : result.cells) {
      for (const auto& failure : cell.failures) err << cell.spec.key() << ": " << failure << '\n';
    }
    return kPartialSweep;
  }
  return kOk;
}

int sweep(const SweepArgs& a, const std::vector<std::string>& args, std::ostream& out,
          std::ostream& err) {
  if (!a.common.config) throw UsageError("sweep requires --config");
  const auto config = load_config(a.common.config, a.common.full_scale);
  const auto grid_node = experiment_block(config, "grid");
  auto grid = default_grid(grid_node.value("omega_points", 13), grid_node.value("area_points", 7));
  grid.omega_max = number_list(grid_node, "omega_max_over_omega0", grid.omega_max);
  grid.pulse_area = number_list(grid_node, "tf_omega_max_over_pi", grid.pulse_area);
  const auto seeds = parse_seeds(a.common.seeds);
  const auto options = sweep_options(a, out);
  write_provenance(*options.out_dir, args, config, {{"seeds", seeds}});

  const auto result = regime_sweep(config.model, grid, config.optimizer, seeds, options);
  if (auto dir = csv_dir(a.common)) {
    write_csv(*dir / "regime_grid.csv", [&](std::ostream& s) { write_sweep_csv(s, result.cells); });
    write_csv(*dir / "impulse_map.csv",
              [&](std::ostream& s) { write_impulse_csv(s, impulse_map(result.cells, config.model.eta)); });
    write_csv(*dir / "lab_time.csv",
              [&](std::ostream& s) { write_lab_time_csv(s, lab_time_view(result.cells)); });
  }
  return finish_sweep(result, out, err);
}

int dissipation(const SweepArgs& a, const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  if (!a.common.config) throw UsageError("dissipation requires --config");
  const auto config = load_config(a.common.config, a.common.full_scale);
  const auto node = experiment_block(config, "dissipation");
  const auto omegas = number_list(node, "omega_max_over_omega0", {0.1, 1.0, 10.0});
  const auto gammas = number_list(node, "gamma_z_over_omega0_div_2pi", {0.0, 1e-3, 2e-3});
  const auto seeds = parse_seeds(a.common.seeds);
  const auto options = sweep_options(a, out);
  write_provenance(*options.out_dir, args, config, {{"seeds", seeds}});

  const auto result = dissipation_sweep(config.model, omegas, gammas, config.optimizer, seeds, options);
  if (auto dir = csv_dir(a.common)) {
    write_csv(*dir / "dissipation.csv", [&](std::ostream& s) { write_dissipation_csv(s, result.cells); });
  }
  return finish_sweep(result, out, err);
}

struct StroboArgs {
  Common common;
  int repetitions = 500;
  double omega_max = 20.0;
};

int strobo(const StroboArgs& a, const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  auto config = load_config(a.common.config, a.common.full_scale);
  config.model.omega_max = a.omega_max;
  config.model.validate();
  const auto series = strobo_run(config.model, a.repetitions, config.optimizer.propagation);

  out << "initial_rabi_infidelity: " << format_number(series.rabi.empty() ? 1.0 : series.rabi.front().infidelity)
      << '\n';
  out << "rabi_minima:";
  for (int n : local_minima(series.rabi)) out << ' ' << n;
  out << '\n';
  double bound = 0.0;
  for (const auto& r : series.compensated) bound = std::max(bound, r.infidelity);
  out << "compensated_max_infidelity: " << format_number(bound) << '\n';

  if (a.common.out) write_provenance(*a.common.out, args, config, {{"repetitions", a.repetitions}});
  if (auto dir = csv_dir(a.common)) {
    write_csv(*dir / "strobo.csv", [&](std::ostream& s) { write_strobo_csv(s, series); });
  }
  if (series.failure) {
    err << "series stopped early: " << *series.failure << '\n';
    return kNumericalFailure;
  }
  return kOk;
}

struct PhaseSpaceArgs {
  Common common;
  double omega_max = 200.0;
};

int phase_space(const PhaseSpaceArgs& a, const std::vector<std::string>& args, std::ostream& out,
                std::ostream&) {
  auto config = load_config(a.common.config, a.common.full_scale);
  config.model.omega_max = a.omega_max;
  config.model.validate();
  const auto result = phase_space_study(config.model, config.optimizer.propagation);
  for (const auto* run : {&result.constant_force, &result.compensated, &result.zero_force}) {
    out << run->label << ": max_displacement " << format_number(run->max_displacement)
        << " max_momentum " << format_number(run->max_momentum) << " impulse "
        << format_number(run->impulse) << " infidelity " << format_number(run->infidelity) << '\n';
  }
  out << "displacement_ratio: " << format_number(result.displacement_ratio) << '\n';
  out << "momentum_ratio: " << format_number(result.momentum_ratio) << '\n';
  if (a.common.out) write_provenance(*a.common.out, args, config);
  if (auto dir = csv_dir(a.common)) {
    write_csv(*dir / "phase_space.csv", [&](std::ostream& s) { write_phase_space_csv(s, result); });
  }
  return kOk;
}

int calibrate(const Common& common, const std::vector<std::string>& args, std::ostream& out,
              std::ostream&) {
  if (!common.out) throw UsageError("calibrate requires --out");
  const auto config = load_config(common.config, common.full_scale);
  const auto node = experiment_block(config, "calibration");
  CalibrationOptions options;
  options.omega_max = number_list(node, "omega_max_over_omega0", default_grid().omega_max);
  options.pulse_areas = number_list(node, "tf_omega_max_over_pi", options.pulse_areas);
  options.rates = number_list(node, "learning_rates", options.rates);
  options.n_it = node.value("n_it", options.n_it);
  options.workers = common.workers;
  options.seeds = parse_seeds(common.seeds);
  const auto table = calibrate_learning_rates(config.model, config.optimizer, options);
  const fs::path dir(*common.out);
  write_text_file(dir / "calibration.json", table.to_json());
  write_provenance(dir, args, config, {{"seeds", options.seeds}});
  for (const auto& entry : table.entries) {
    out << "omega_max " << format_number(entry.omega_max) << " area " << format_number(entry.pulse_area)
        << ": alpha_dr " << format_number(entry.alpha_dr) << " alpha_tw " << format_number(entry.alpha_tw)
        << (entry.fallback ? " (fallback)" : "") << '\n';
  }
  return kOk;
}

struct ProjectArgs {
  Common common;
  std::optional<std::string> protocol;
  std::optional<double> omega_max;
  int n_f = 3;
  int samples = 2001;
};

int project_force(const ProjectArgs& a, const std::vector<std::string>& args, std::ostream& out,
                  std::ostream&) {
  auto config = load_config(a.common.config, a.common.full_scale);
  if (a.omega_max) config.model.omega_max = *a.omega_max;
  config.model.validate();
  if (a.samples < 3) throw UsageError("--samples must be at least 3");
  const auto protocol =
      a.protocol ? protocol_from_json(read_text_file(*a.protocol)) : rabi_protocol(config.model.omega_max);
  const auto amplitude = sample_amplitude(protocol, a.samples);
  const auto force = first_order_force(amplitude, config.model.eta, protocol.t_f);
  const auto theta_f = projected_force(amplitude, config.model.eta, protocol.t_f, a.n_f);

  out << "theta_f:";
  for (double value : theta_f) out << ' ' << format_number(value);
  out << '\n';
  if (a.common.out) {
    auto projected = protocol;
    projected.theta_f = theta_f;
    write_text_file(fs::path(*a.common.out) / "projected_protocol.json", protocol_to_json(projected));
    write_provenance(*a.common.out, args, config);
  }
  if (auto dir = csv_dir(a.common)) {
    write_csv(*dir / "projected_force.csv", [&](std::ostream& s) {
      CsvWriter csv(s, {"t", "f_first_order", "f_projected"});
      for (std::size_t k = 0; k < force.size(); ++k) {
        const double t = protocol.t_f * static_cast<double>(k) / static_cast<double>(force.size() - 1);
        csv.row({t, force[k], sine_series(theta_f, t, protocol.t_f)});
      }
    });
  }
  return kOk;
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  auto parse_one = [&](const std::string& token) -> std::uint64_t {
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("invalid seed list: " + text);
    }
    return std::stoull(token);
  };
  std::vector<std::uint64_t> seeds;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto first = parse_one(text.substr(0, dots));
    const auto last = parse_one(text.substr(dots + 2));
    if (last < first || last - first > 100000) throw ConfigError("invalid seed range: " + text);
    for (auto s = first; s <= last; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) seeds.push_back(parse_one(token));
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal control of a two-level atom with quantized motion in an optical tweezer",
               "recoilfree"};
  app.require_subcommand(1);
  app.set_version_flag("--version", build_provenance());

  SimulateArgs simulate_args;
  auto* simulate_cmd = app.add_subcommand("simulate", "propagate one protocol and report 1 - F");
  add_common(simulate_cmd, simulate_args.common, false);
  simulate_cmd->add_option("--protocol", simulate_args.protocol, "protocol JSON file");
  simulate_cmd->add_option("--builtin", simulate_args.builtin,
                           "rabi | recoil-compensated | recoil-compensated-projected")
      ->capture_default_str();
  simulate_cmd->add_option("--omega-max", simulate_args.omega_max, "override Omega_max / omega0");
  simulate_cmd->add_option("--n-f", simulate_args.n_f, "force modes of the projected protocol");

  OptimizeArgs optimize_args;
  auto* optimize_cmd = app.add_subcommand("optimize", "run PEPR for one or more seeds");
  add_common(optimize_cmd, optimize_args.common, true);
  optimize_cmd->add_option("--tf-pulse-area", optimize_args.pulse_area, "t_f Omega_max / pi");
  optimize_cmd->add_option("--n-it", optimize_args.n_it, "accepted updates per trajectory");
  optimize_cmd->add_option("--calibration", optimize_args.calibration, "learning-rate table");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "regime grid over Omega_max and pulse area");
  add_common(sweep_cmd, sweep_args.common, true, "1..8");
  sweep_cmd->add_flag("--resume", sweep_args.resume, "reuse completed cells in --out");
  sweep_cmd->add_option("--calibration", sweep_args.calibration, "learning-rate table");

  SweepArgs dissipation_args;
  auto* dissipation_cmd = app.add_subcommand("dissipation", "dephasing comparison at pulse area 3.5");
  add_common(dissipation_cmd, dissipation_args.common, true, "1..8");
  dissipation_cmd->add_flag("--resume", dissipation_args.resume, "reuse completed cells in --out");
  dissipation_cmd->add_option("--calibration", dissipation_args.calibration, "learning-rate table");

  StroboArgs strobo_args;
  auto* strobo_cmd = app.add_subcommand("strobo", "repeated forward and force-reversed pulses");
  add_common(strobo_cmd, strobo_args.common, false);
  strobo_cmd->add_option("--repetitions", strobo_args.repetitions, "number of odd pulses")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  strobo_cmd->add_option("--omega-max", strobo_args.omega_max, "Omega_max / omega0")->capture_default_str();

  PhaseSpaceArgs phase_args;
  auto* phase_cmd = app.add_subcommand("phase-space", "quadratures under constant and compensating force");
  add_common(phase_cmd, phase_args.common, false);
  phase_cmd->add_option("--omega-max", phase_args.omega_max, "Omega_max / omega0")->capture_default_str();

  Common calibrate_args;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "learning-rate scan");
  add_common(calibrate_cmd, calibrate_args, true, "1,2");

  ProjectArgs project_args;
  auto* project_cmd = app.add_subcommand("project-force", "project the first-order force on sine modes");
  add_common(project_cmd, project_args.common, false);
  project_cmd->add_option("--protocol", project_args.protocol, "protocol JSON file (default: Rabi pulse)");
  project_cmd->add_option("--omega-max", project_args.omega_max, "override Omega_max / omega0");
  project_cmd->add_option("--n-f", project_args.n_f, "number of force modes")->capture_default_str();
  project_cmd->add_option("--samples", project_args.samples, "grid points on [0, t_f]")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate_cmd) return simulate(simulate_args, args, out, err);
    if (*optimize_cmd) return optimize_command(optimize_args, args, out, err);
    if (*sweep_cmd) return sweep(sweep_args, args, out, err);
    if (*dissipation_cmd) return dissipation(dissipation_args, args, out, err);
    if (*strobo_cmd) return strobo(strobo_args, args, out, err);
    if (*phase_cmd) return phase_space(phase_args, args, out, err);
    if (*calibrate_cmd) return calibrate(calibrate_args, args, out, err);
    if (*project_cmd) return project_force(project_args, args, out, err);
  } catch (const UsageError& error) {
    err << "error: " << error.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& error) {
    err << "configuration error: " << error.what() << '\n';
    return kConfigError;
  } catch (const IntegrationError& error) {
    err << "numerical failure: " << error.what() << '\n';
    return kNumericalFailure;
  } catch (const std::out_of_range& error) {
    err << "configuration error: " << error.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace recoilfree::cli
