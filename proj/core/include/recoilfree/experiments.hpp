#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "recoilfree/dynamics.hpp"
#include "recoilfree/pepr.hpp"
#include "recoilfree/protocols.hpp"

namespace recoilfree {

/// Runs fn(0..tasks-1) on a local pool of `workers` threads. Every task runs
/// even if another throws; the first exception is rethrown after joining.
void run_parallel(std::size_t tasks, int workers, const std::function<void(std::size_t)>& fn);

/// Desk-scale defaults; full scale uses n_it = 1e5.
inline constexpr long kDeskIterations = 20000;
inline constexpr long kFullScaleIterations = 100000;
inline constexpr int kDeskEnsemble = 8;

struct GridSpec {
  std::vector<double> omega_max;      ///< Omega_max / omega0
  std::vector<double> pulse_area;     ///< t_f Omega_max / pi
};

/// Omega_max log-spaced over [1e-2, 2e2], t_f Omega_max / pi linear over [1, 4].
GridSpec default_grid(int omega_points = 13, int area_points = 7);

/// One point of a sweep: model parameters plus available pulse area.
struct CellSpec {
  double omega_max = 1.0;
  double pulse_area = 1.5;
  double gamma_z = 0.0;

  double duration() const;
  /// File stem identifying the cell inside a results directory.
  std::string key() const;
};

struct SweepCell {
  CellSpec spec;
  ModelConfig config;
  OptimizerHyperparams hyper;
  std::vector<std::uint64_t> seeds;
  std::vector<double> seed_best;         ///< best infidelity per seed (NaN if failed)
  double infidelity_rabi = 1.0;          ///< 1 - F_0
  double infidelity_compensated = 1.0;   ///< 1 - F_f
  double best_infidelity = 1.0;          ///< 1 - F_theta* over the ensemble
  std::optional<std::uint64_t> best_seed;
  SineModeProtocol best_protocol;
  double impulse = 0.0;
  double alpha_dr = 0.0;
  double alpha_tw = 0.0;
  bool rates_from_table = false;
  long n_it = 0;
  std::vector<std::string> failures;
  double wall_seconds = 0.0;  ///< not part of the deterministic result

  bool complete() const { return failures.empty(); }
};

std::string cell_to_json(const SweepCell& cell);
SweepCell cell_from_json(const std::string& text);

struct SweepOptions {
  std::optional<std::filesystem::path> out_dir;
  int workers = 1;
  bool resume = true;
  std::optional<CalibrationTable> calibration;
  /// Called after each cell finishes (from the finishing worker thread).
  std::function<void(const SweepCell&)> on_cell;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::size_t recomputed = 0;
  std::size_t reused = 0;
  bool partial() const;
};

/// Baselines and a seed ensemble of PEPR runs for each cell. Cells already on
/// disk are reused when resuming; per-cell failures are recorded.
SweepResult run_cells(const ModelConfig& base, const std::vector<CellSpec>& cells,
                      const OptimizerHyperparams& hyper, const std::vector<std::uint64_t>& seeds,
                      const SweepOptions& options = {});

/// Cells of `grid` with pulse area >= 1.
std::vector<CellSpec> regime_cells(const GridSpec& grid, double gamma_z = 0.0);

SweepResult regime_sweep(const ModelConfig& base, const GridSpec& grid,
                         const OptimizerHyperparams& hyper, const std::vector<std::uint64_t>& seeds,
                         const SweepOptions& options = {});

/// Pulse area fixed at 3.5; gamma_z in units of omega0 / (2 pi).
inline constexpr double kDissipationPulseArea = 3.5;

SweepResult dissipation_sweep(const ModelConfig& base, const std::vector<double>& omega_max,
                              const std::vector<double>& gamma_z,
                              const OptimizerHyperparams& hyper,
                              const std::vector<std::uint64_t>& seeds,
                              const SweepOptions& options = {});

/// Loads every cell record of a results directory.
std::vector<SweepCell> load_cells(const std::filesystem::path& out_dir);

struct ImpulseMap {
  struct Point {
    double omega_max;
    double pulse_area;
    double impulse;
  };
  std::vector<Point> grid;
  std::vector<Point> slice;  ///< cells nearest to the 3.5 pulse-area slice
  double reference = 0.0;    ///< -eta
};

ImpulseMap impulse_map(const std::vector<SweepCell>& cells, double eta,
                       double slice_area = kDissipationPulseArea);

struct PhaseSpaceRun {
  std::string label;
  std::vector<QuadratureSample> samples;
  double max_displacement = 0.0;
  double max_momentum = 0.0;
  double impulse = 0.0;
  double infidelity = 0.0;
};

struct PhaseSpaceResult {
  PhaseSpaceRun constant_force;
  PhaseSpaceRun compensated;
  PhaseSpaceRun zero_force;
  double displacement_ratio = 0.0;  ///< constant / compensated
  double momentum_ratio = 0.0;
};

/// Sine Rabi pulse at Omega_max with (i) f = -eta / t_f, (ii) the
/// recoil-compensated curve and (iii) no force.
PhaseSpaceResult phase_space_study(const ModelConfig& config,
                                   const PropagationSettings& settings = {});

struct StroboRecord {
  int n = 1;
  double infidelity = 0.0;  ///< after pulse 2n - 1
  std::string family;
};

struct StroboSeries {
  std::vector<StroboRecord> rabi;
  std::vector<StroboRecord> compensated;
  std::optional<std::string> failure;
};

/// Alternates forward and force-reversed pulses without resetting the state
/// and records the infidelity after every odd pulse.
StroboSeries strobo_run(const ModelConfig& config, int repetitions,
                        const PropagationSettings& settings = {});

/// Strict local minima of a series (1-based repetition numbers).
std::vector<int> local_minima(const std::vector<StroboRecord>& series);

struct LabTimeRow {
  double omega_max;
  double lab_time;  ///< t_f omega0 / pi
  double best_infidelity;
};

std::vector<LabTimeRow> lab_time_view(const std::vector<SweepCell>& cells);

struct CalibrationOptions {
  std::vector<double> omega_max;
  std::vector<double> pulse_areas = calibration_pulse_areas();
  std::vector<double> rates = learning_rate_grid();
  std::vector<std::uint64_t> seeds{1, 2};
  long n_it = 300;
  int workers = 1;
};

/// Learning-rate pair with the lowest ensemble-best infidelity per
/// (Omega_max, pulse area) cell.
CalibrationTable calibrate_learning_rates(const ModelConfig& base,
                                          const OptimizerHyperparams& hyper,
                                          const CalibrationOptions& options);

/// A run is unstable when its instantaneous infidelity ends a decade above
/// its best or jumps up by a decade between checkpoints.
bool trajectory_unstable(const OptimizationTrajectory& trajectory);

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells);
void write_dissipation_csv(std::ostream& out, const std::vector<SweepCell>& cells);
void write_impulse_csv(std::ostream& out, const ImpulseMap& map);
void write_strobo_csv(std::ostream& out, const StroboSeries& series);
void write_phase_space_csv(std::ostream& out, const PhaseSpaceResult& result);
void write_lab_time_csv(std::ostream& out, const std::vector<LabTimeRow>& rows);

}  // namespace recoilfree
