#include "recoilfree/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "recoilfree/io.hpp"

namespace recoilfree {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string short_number(double value) {
  std::ostringstream out;
  out << std::setprecision(6) << value;
  return out.str();
}

json number_or_null(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

double number_or_nan(const json& node) { return node.is_null() ? kNaN : node.get<double>(); }

}  // namespace

void run_parallel(std::size_t tasks, int workers, const std::function<void(std::size_t)>& fn) {
  if (tasks == 0) return;
  const auto threads = static_cast<std::size_t>(std::clamp<long>(workers, 1, static_cast<long>(tasks)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      try {
        fn(task);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
}

GridSpec default_grid(int omega_points, int area_points) {
  if (omega_points < 1 || area_points < 1) throw ConfigError("grid needs at least one point per axis");
  GridSpec grid;
  const double lo = std::log10(1e-2);
  const double hi = std::log10(2e2);
  for (int k = 0; k < omega_points; ++k) {
    const double s = omega_points == 1 ? 0.0 : static_cast<double>(k) / (omega_points - 1);
    grid.omega_max.push_back(std::pow(10.0, lo + s * (hi - lo)));
  }
  for (int k = 0; k < area_points; ++k) {
    const double s = area_points == 1 ? 0.0 : static_cast<double>(k) / (area_points - 1);
    grid.pulse_area.push_back(1.0 + 3.0 * s);
  }
  return grid;
}

double CellSpec::duration() const { return pulse_area * kPi / omega_max; }

std::string CellSpec::key() const {
  return "cell_om" + short_number(omega_max) + "_pa" + short_number(pulse_area) + "_gz" +
         short_number(gamma_z);
}

bool SweepResult::partial() const {
  return std::any_of(cells.begin(), cells.end(), [](const SweepCell& cell) { return !cell.complete(); });
}

std::string cell_to_json(const SweepCell& cell) {
  json seed_best = json::array();
  for (double value : cell.seed_best) seed_best.push_back(number_or_null(value));
  json document{
      {"omega_max_over_omega0", cell.spec.omega_max},
      {"tf_omega_max_over_pi", cell.spec.pulse_area},
      {"gamma_z_over_omega0_div_2pi", cell.spec.gamma_z},
      {"t_f_omega0", cell.spec.duration()},
      {"model", json::parse(model_config_to_json(cell.config))},
      {"optimizer", json::parse(hyperparams_to_json(cell.hyper))},
      {"seeds", cell.seeds},
      {"seed_best_infidelity", seed_best},
      {"infidelity_rabi", cell.infidelity_rabi},
      {"infidelity_compensated", cell.infidelity_compensated},
      {"best_infidelity", number_or_null(cell.best_infidelity)},
      {"best_seed", cell.best_seed ? json(*cell.best_seed) : json(nullptr)},
      {"best_protocol", json::parse(protocol_to_json(cell.best_protocol))},
      {"normalized_impulse", cell.impulse},
      {"alpha_dr", cell.alpha_dr},
      {"alpha_tw", cell.alpha_tw},
      {"rates_from_table", cell.rates_from_table},
      {"n_it", cell.n_it},
      {"failures", cell.failures},
      {"wall_seconds", cell.wall_seconds},
  };
  return document.dump(2);
}

SweepCell cell_from_json(const std::string& text) {
  SweepCell cell;
  try {
    const auto document = json::parse(text);
    cell.spec.omega_max = document.at("omega_max_over_omega0").get<double>();
    cell.spec.pulse_area = document.at("tf_omega_max_over_pi").get<double>();
    cell.spec.gamma_z = document.at("gamma_z_over_omega0_div_2pi").get<double>();
    cell.config = model_config_from_json(document.at("model").dump());
    cell.hyper = hyperparams_from_json(json{{"optimizer", document.at("optimizer")}}.dump());
    cell.seeds = document.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& value : document.at("seed_best_infidelity")) {
      cell.seed_best.push_back(number_or_nan(value));
    }
    cell.infidelity_rabi = document.at("infidelity_rabi").get<double>();
    cell.infidelity_compensated = document.at("infidelity_compensated").get<double>();
    cell.best_infidelity = number_or_nan(document.at("best_infidelity"));
    if (!document.at("best_seed").is_null()) cell.best_seed = document.at("best_seed").get<std::uint64_t>();
    const auto& protocol = document.at("best_protocol");
    if (protocol.at("t_f").get<double>() > 0.0) cell.best_protocol = protocol_from_json(protocol.dump());
    cell.impulse = document.at("normalized_impulse").get<double>();
    cell.alpha_dr = document.at("alpha_dr").get<double>();
    cell.alpha_tw = document.at("alpha_tw").get<double>();
    cell.rates_from_table = document.at("rates_from_table").get<bool>();
    cell.n_it = document.at("n_it").get<long>();
    cell.failures = document.at("failures").get<std::vector<std::string>>();
    cell.wall_seconds = document.value("wall_seconds", 0.0);
  } catch (const json::exception& error) {
    throw ConfigError(std::string("malformed cell record: ") + error.what());
  }
  return cell;
}

namespace {

std::filesystem::path cell_path(const std::filesystem::path& dir, const CellSpec& spec) {
  return dir / (spec.key() + ".json");
}

std::optional<SweepCell> try_reuse(const std::filesystem::path& path, const CellSpec& spec,
                                   const OptimizerHyperparams& hyper,
                                   const std::vector<std::uint64_t>& seeds) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    auto cell = cell_from_json(read_text_file(path));
    if (cell.spec.key() != spec.key() || cell.seeds != seeds || cell.n_it != hyper.n_it ||
        !cell.complete()) {
      return std::nullopt;
    }
    return cell;
  } catch (const ConfigError&) {
    return std::nullopt;
  }
}

void write_manifest(const std::filesystem::path& dir, const std::vector<SweepCell>& cells) {
  json entries = json::array();
  for (const auto& cell : cells) {
    entries.push_back({{"file", cell.spec.key() + ".json"},
                       {"omega_max_over_omega0", cell.spec.omega_max},
                       {"tf_omega_max_over_pi", cell.spec.pulse_area},
                       {"gamma_z_over_omega0_div_2pi", cell.spec.gamma_z},
                       {"complete", cell.complete()}});
  }
  write_text_file(dir / "manifest.json", json{{"provenance", build_provenance()}, {"cells", entries}}.dump(2));
}

struct PendingCell {
  std::size_t slot = 0;
  SweepCell cell;
  std::vector<OptimizationTrajectory> runs;
  std::atomic<std::size_t> remaining{0};
  std::chrono::steady_clock::time_point started;
  std::mutex mutex;
};

void finalize(SweepCell& cell, const std::vector<OptimizationTrajectory>& runs) {
  cell.seed_best.assign(runs.size(), kNaN);
  cell.best_infidelity = kNaN;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& run = runs[k];
    if (run.failure) cell.failures.push_back("seed " + std::to_string(cell.seeds[k]) + ": " + *run.failure);
    if (run.checkpoints.empty()) continue;
    cell.seed_best[k] = run.best_infidelity;
    if (!std::isfinite(cell.best_infidelity) || run.best_infidelity < cell.best_infidelity) {
      cell.best_infidelity = run.best_infidelity;
      cell.best_seed = cell.seeds[k];
      cell.best_protocol = run.best_protocol;
    }
  }
  if (cell.best_seed) cell.impulse = normalized_impulse(cell.best_protocol);
}

}  // namespace

SweepResult run_cells(const ModelConfig& base, const std::vector<CellSpec>& cells,
                      const OptimizerHyperparams& hyper, const std::vector<std::uint64_t>& seeds,
                      const SweepOptions& options) {
  hyper.validate();
  if (seeds.empty()) throw ConfigError("a sweep needs at least one seed");

  SweepResult result;
  result.cells.resize(cells.size());
  std::vector<std::unique_ptr<PendingCell>> pending;

  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& spec = cells[k];
    if (!(spec.omega_max > 0.0) || !(spec.pulse_area > 0.0) || spec.gamma_z < 0.0) {
      throw ConfigError("invalid sweep cell " + spec.key());
    }
    if (options.out_dir && options.resume) {
      if (auto reused = try_reuse(cell_path(*options.out_dir, spec), spec, hyper, seeds)) {
        result.cells[k] = std::move(*reused);
        ++result.reused;
        continue;
      }
    }
    auto item = std::make_unique<PendingCell>();
    item->slot = k;
    auto& cell = item->cell;
    cell.spec = spec;
    cell.config = base;
    cell.config.omega_max = spec.omega_max;
    cell.config.gamma_z = spec.gamma_z;
    cell.config.validate();
    cell.seeds = seeds;
    cell.n_it = hyper.n_it;
    const auto rates = options.calibration
                           ? options.calibration->lookup(spec.omega_max, spec.duration())
                           : LearningRates{hyper.alpha_dr, hyper.alpha_tw, false};
    cell.hyper = hyper;
    cell.hyper.alpha_dr = rates.alpha_dr;
    cell.hyper.alpha_tw = rates.alpha_tw;
    cell.alpha_dr = rates.alpha_dr;
    cell.alpha_tw = rates.alpha_tw;
    cell.rates_from_table = rates.from_table;
    item->runs.resize(seeds.size());
    item->remaining = seeds.size() + 1;
    pending.push_back(std::move(item));
  }

  // Task 0 of each cell computes the baselines, tasks 1..seeds run PEPR.
  const std::size_t per_cell = seeds.size() + 1;
  std::mutex write_mutex;
  run_parallel(pending.size() * per_cell, options.workers, [&](std::size_t task) {
    auto& item = *pending[task / per_cell];
    const std::size_t index = task % per_cell;
    auto& cell = item.cell;
    {
      const std::lock_guard lock(item.mutex);
      if (item.remaining == per_cell) item.started = std::chrono::steady_clock::now();
    }
    if (index == 0) {
      try {
        const Model model(cell.config);
        cell.infidelity_rabi =
            protocol_infidelity(model, rabi_protocol(cell.config.omega_max), hyper.propagation);
        cell.infidelity_compensated = protocol_infidelity(
            model, recoil_compensated_protocol(cell.config, hyper.n_f).exact, hyper.propagation);
      } catch (const std::exception& error) {
        const std::lock_guard lock(item.mutex);
        cell.failures.push_back(std::string("baseline: ") + error.what());
      }
    } else {
      auto run_hyper = cell.hyper;
      run_hyper.seed = cell.seeds[index - 1];
      try {
        item.runs[index - 1] = optimize(cell.config, cell.spec.duration(), run_hyper);
      } catch (const std::exception& error) {
        item.runs[index - 1].failure = error.what();
      }
    }
    if (--item.remaining == 0) {
      finalize(cell, item.runs);
      cell.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - item.started).count();
      if (options.out_dir) {
        const std::lock_guard lock(write_mutex);
        write_text_file(cell_path(*options.out_dir, cell.spec), cell_to_json(cell));
      }
      if (options.on_cell) options.on_cell(cell);
    }
  });

  for (auto& item : pending) {
    result.cells[item->slot] = std::move(item->cell);
    ++result.recomputed;
  }
  if (options.out_dir) write_manifest(*options.out_dir, result.cells);
  return result;
}

std::vector<CellSpec> regime_cells(const GridSpec& grid, double gamma_z) {
  std::vector<CellSpec> cells;
  for (double omega : grid.omega_max) {
    for (double area : grid.pulse_area) {
      if (area < 1.0) continue;
      cells.push_back({omega, area, gamma_z});
    }
  }
  return cells;
}

SweepResult regime_sweep(const ModelConfig& base, const GridSpec& grid,
                         const OptimizerHyperparams& hyper, const std::vector<std::uint64_t>& seeds,
                         const SweepOptions& options) {
  return run_cells(base, regime_cells(grid, base.gamma_z), hyper, seeds, options);
}

SweepResult dissipation_sweep(const ModelConfig& base, const std::vector<double>& omega_max,
                              const std::vector<double>& gamma_z,
                              const OptimizerHyperparams& hyper,
                              const std::vector<std::uint64_t>& seeds,
                              const SweepOptions& options) {
  std::vector<CellSpec> cells;
  for (double omega : omega_max) {
    for (double gamma : gamma_z) cells.push_back({omega, kDissipationPulseArea, gamma});
  }
  return run_cells(base, cells, hyper, seeds, options);
}

std::vector<SweepCell> load_cells(const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(out_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("cell_") && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<SweepCell> cells;
  for (const auto& file : files) cells.push_back(cell_from_json(read_text_file(file)));
  return cells;
}

bool trajectory_unstable(const OptimizationTrajectory& trajectory) {
  const auto& points = trajectory.checkpoints;
  if (points.empty()) return false;
  for (std::size_t k = 1; k < points.size(); ++k) {
    if (points[k].infidelity > 10.0 * points[k - 1].infidelity) return true;
  }
  return points.back().infidelity > 10.0 * trajectory.best_infidelity;
}

CalibrationTable calibrate_learning_rates(const ModelConfig& base,
                                          const OptimizerHyperparams& hyper,
                                          const CalibrationOptions& options) {
  if (options.rates.empty() || options.seeds.empty() || options.pulse_areas.empty()) {
    throw ConfigError("calibration needs rates, seeds and pulse areas");
  }
  if (options.n_it < 1) throw ConfigError("calibration runs need n_it >= 1");

  struct Cell {
    double omega;
    double area;
  };
  std::vector<Cell> cells;
  for (double omega : options.omega_max) {
    for (double area : options.pulse_areas) cells.push_back({omega, area});
  }
  const std::size_t rates = options.rates.size();
  const std::size_t pairs = rates * rates;
  const std::size_t seeds = options.seeds.size();
  const std::size_t per_cell = pairs * seeds;

  std::vector<double> best(cells.size() * per_cell, kNaN);
  std::vector<char> unstable(cells.size() * per_cell, 0);

  run_parallel(cells.size() * per_cell, options.workers, [&](std::size_t task) {
    const auto& cell = cells[task / per_cell];
    const std::size_t pair = (task % per_cell) / seeds;
    const std::size_t seed = task % seeds;
    ModelConfig config = base;
    config.omega_max = cell.omega;
    auto run_hyper = hyper;
    run_hyper.alpha_dr = options.rates[pair / rates];
    run_hyper.alpha_tw = options.rates[pair % rates];
    run_hyper.n_it = options.n_it;
    run_hyper.eval_stride = std::max(1L, options.n_it / 10);
    run_hyper.stall_window = 0;
    run_hyper.seed = options.seeds[seed];
    try {
      const auto run = optimize(config, cell.area * kPi / cell.omega, run_hyper);
      if (!run.failure && std::isfinite(run.best_infidelity)) best[task] = run.best_infidelity;
      unstable[task] = static_cast<char>(trajectory_unstable(run) || run.failure.has_value());
    } catch (const std::exception&) {
      unstable[task] = 1;
    }
  });

  CalibrationTable table;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    LearningRateEntry entry;
    entry.omega_max = cells[c].omega;
    entry.pulse_area = cells[c].area;
    entry.alpha_dr = kDefaultLearningRate;
    entry.alpha_tw = kDefaultLearningRate;
    entry.best_infidelity = kNaN;
    for (std::size_t pair = 0; pair < pairs; ++pair) {
      double pair_best = kNaN;
      bool pair_unstable = false;
      for (std::size_t s = 0; s < seeds; ++s) {
        const std::size_t index = c * per_cell + pair * seeds + s;
        if (std::isfinite(best[index]) && !(best[index] >= pair_best)) pair_best = best[index];
        pair_unstable = pair_unstable || unstable[index];
      }
      entry.unstable_pairs += pair_unstable ? 1 : 0;
      if (std::isfinite(pair_best) && !(pair_best >= entry.best_infidelity)) {
        entry.best_infidelity = pair_best;
        entry.alpha_dr = options.rates[pair / rates];
        entry.alpha_tw = options.rates[pair % rates];
      }
    }
    entry.fallback = !std::isfinite(entry.best_infidelity);
    if (entry.fallback) entry.best_infidelity = 1.0;
    table.entries.push_back(entry);
  }
  return table;
}

}  // namespace recoilfree
