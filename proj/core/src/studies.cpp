#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "recoilfree/experiments.hpp"
#include "recoilfree/io.hpp"

namespace recoilfree {

namespace {

constexpr double kPi = std::numbers::pi;

PhaseSpaceRun trace_run(const Model& model, const Schedule& schedule, std::string label,
                        const PropagationSettings& settings) {
  PhaseSpaceRun run;
  run.label = std::move(label);
  run.samples = quadrature_trajectory(model, schedule, DensityOperator::initial(model.config()), settings);
  for (const auto& sample : run.samples) {
    run.max_displacement = std::max(run.max_displacement, std::abs(sample.position));
    run.max_momentum = std::max(run.max_momentum, std::abs(sample.momentum));
  }
  run.impulse = normalized_impulse(schedule);
  run.infidelity = protocol_infidelity(model, schedule, settings);
  return run;
}

double reference_area(const SweepCell& cell) { return cell.spec.pulse_area; }

}  // namespace

ImpulseMap impulse_map(const std::vector<SweepCell>& cells, double eta, double slice_area) {
  ImpulseMap map;
  map.reference = -eta;
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& cell : cells) {
    map.grid.push_back({cell.spec.omega_max, cell.spec.pulse_area, cell.impulse});
    nearest = std::min(nearest, std::abs(reference_area(cell) - slice_area));
  }
  for (const auto& point : map.grid) {
    if (std::abs(std::abs(point.pulse_area - slice_area) - nearest) < 1e-12) map.slice.push_back(point);
  }
  std::sort(map.slice.begin(), map.slice.end(),
            [](const auto& a, const auto& b) { return a.omega_max < b.omega_max; });
  return map;
}

PhaseSpaceResult phase_space_study(const ModelConfig& config, const PropagationSettings& settings) {
  config.validate();
  auto traced = settings;
  traced.observable_sample_count = std::max(settings.observable_sample_count, 401);
  const Model model(config);

  const auto pulse = rabi_protocol(config.omega_max);
  const double t_f = pulse.t_f;
  const double eta = config.eta;
  const double omega = config.omega_max;

  PhaseSpaceResult result;
  result.constant_force = trace_run(
      model, Schedule(pulse, [eta, t_f](double) { return -eta / t_f; }, "constant"), "constant",
      traced);
  result.compensated = trace_run(
      model,
      Schedule(pulse,
               [eta, omega, t_f](double t) { return recoil_compensated_force(eta, omega, t_f, t); },
               "recoil-compensated"),
      "recoil-compensated", traced);
  result.zero_force = trace_run(model, Schedule(pulse), "zero", traced);
  result.displacement_ratio = result.constant_force.max_displacement / result.compensated.max_displacement;
  result.momentum_ratio = result.constant_force.max_momentum / result.compensated.max_momentum;
  return result;
}

StroboSeries strobo_run(const ModelConfig& config, int repetitions, const PropagationSettings& settings) {
  if (repetitions < 1) throw ConfigError("strobo needs at least one repetition");
  config.validate();
  const Model model(config);
  const Schedule rabi(rabi_protocol(config.omega_max));
  const auto compensated = recoil_compensated_protocol(config).exact;
  const auto reversed = compensated.with_force_scale(-1.0);

  StroboSeries series;
  auto run_family = [&](const Schedule& forward, const Schedule& backward, const std::string& family,
                        std::vector<StroboRecord>& out) {
    Matrix rho = DensityOperator::initial(config).matrix();
    const int pulses = 2 * repetitions - 1;
    for (int pulse = 1; pulse <= pulses; ++pulse) {
      const auto& schedule = pulse % 2 == 1 ? forward : backward;
      rho = propagate(model, schedule, std::move(rho), 0.0, schedule.duration(), settings);
      if (pulse % 2 == 1) out.push_back({(pulse + 1) / 2, 1.0 - rho(0, 0).real(), family});
    }
  };
  try {
    run_family(rabi, rabi, "rabi", series.rabi);
    run_family(compensated, reversed, "recoil-compensated", series.compensated);
  } catch (const std::exception& error) {
    series.failure = error.what();
  }
  return series;
}

std::vector<int> local_minima(const std::vector<StroboRecord>& series) {
  std::vector<int> minima;
  for (std::size_t k = 1; k + 1 < series.size(); ++k) {
    if (series[k].infidelity < series[k - 1].infidelity &&
        series[k].infidelity < series[k + 1].infidelity) {
      minima.push_back(series[k].n);
    }
  }
  return minima;
}

std::vector<LabTimeRow> lab_time_view(const std::vector<SweepCell>& cells) {
  std::vector<LabTimeRow> rows;
  rows.reserve(cells.size());
  for (const auto& cell : cells) {
    rows.push_back({cell.spec.omega_max, cell.spec.pulse_area / cell.spec.omega_max, cell.best_infidelity});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells) {
  CsvWriter csv(out, {"omega_max_over_omega0", "tf_omega_max_over_pi", "log10_infidelity_rabi",
                      "log10_infidelity_compensated", "log10_infidelity_optimized", "normalized_impulse"});
  for (const auto& cell : cells) {
    csv.row({cell.spec.omega_max, cell.spec.pulse_area, std::log10(cell.infidelity_rabi),
             std::log10(cell.infidelity_compensated), std::log10(cell.best_infidelity), cell.impulse});
  }
}

void write_dissipation_csv(std::ostream& out, const std::vector<SweepCell>& cells) {
  CsvWriter csv(out, {"omega_max_over_omega0", "gamma_z_over_omega0_div_2pi", "infidelity_compensated",
                      "infidelity_optimized"});
  for (const auto& cell : cells) {
    csv.row({cell.spec.omega_max, cell.spec.gamma_z, cell.infidelity_compensated, cell.best_infidelity});
  }
}

void write_impulse_csv(std::ostream& out, const ImpulseMap& map) {
  CsvWriter csv(out, {"omega_max_over_omega0", "tf_omega_max_over_pi", "normalized_impulse",
                      "reference_minus_eta", "on_slice"});
  for (const auto& point : map.grid) {
    const bool on_slice = std::any_of(map.slice.begin(), map.slice.end(), [&](const auto& s) {
      return s.omega_max == point.omega_max && s.pulse_area == point.pulse_area;
    });
    csv.row({point.omega_max, point.pulse_area, point.impulse, map.reference, on_slice ? 1.0 : 0.0});
  }
}

void write_strobo_csv(std::ostream& out, const StroboSeries& series) {
  CsvWriter csv(out, {"n", "infidelity_rabi", "infidelity_compensated"});
  const std::size_t rows = std::max(series.rabi.size(), series.compensated.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < rows; ++k) {
    csv.row({static_cast<double>(k + 1), k < series.rabi.size() ? series.rabi[k].infidelity : nan,
             k < series.compensated.size() ? series.compensated[k].infidelity : nan});
  }
}

void write_phase_space_csv(std::ostream& out, const PhaseSpaceResult& result) {
  CsvWriter csv(out, {"t", "position_constant", "momentum_constant", "position_compensated",
                      "momentum_compensated", "position_zero", "momentum_zero"});
  const auto& a = result.constant_force.samples;
  const auto& b = result.compensated.samples;
  const auto& c = result.zero_force.samples;
  for (std::size_t k = 0; k < std::min({a.size(), b.size(), c.size()}); ++k) {
    csv.row({a[k].t, a[k].position, a[k].momentum, b[k].position, b[k].momentum, c[k].position,
             c[k].momentum});
  }
}

void write_lab_time_csv(std::ostream& out, const std::vector<LabTimeRow>& rows) {
  CsvWriter csv(out, {"omega_max_over_omega0", "tf_omega0_over_pi", "log10_infidelity_optimized"});
  for (const auto& row : rows) csv.row({row.omega_max, row.lab_time, std::log10(row.best_infidelity)});
}

}  // namespace recoilfree
