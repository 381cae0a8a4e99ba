#include "recoilfree/pepr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <nlohmann/json.hpp>

namespace recoilfree {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxInitHalvings = 64;

}  // namespace

void OptimizerHyperparams::validate() const {
  if (!(alpha_dr > 0.0) || !(alpha_tw > 0.0)) throw ConfigError("learning rates must be positive");
  if (n_it < 0) throw ConfigError("n_it must be non-negative");
  if (n_omega < 1 || n_f < 0) throw ConfigError("invalid mode counts");
  if (eval_stride < 1) throw ConfigError("eval_stride must be at least 1");
  if (stall_window < 0) throw ConfigError("stall_window must be non-negative");
  if (max_proposal_factor < 1) throw ConfigError("max_proposal_factor must be at least 1");
  propagation.validate();
}

SineModeProtocol init_parameters(const ModelConfig& config, double t_f,
                                 const OptimizerHyperparams& hyper, Rng& rng) {
  SineModeProtocol protocol(t_f, hyper.n_omega, hyper.n_f);
  double scale = 1.0;
  for (int attempt = 0; attempt <= kMaxInitHalvings; ++attempt) {
    for (auto* coefficients : {&protocol.theta_x, &protocol.theta_y}) {
      for (int l = 1; l <= hyper.n_omega; ++l) {
        const double deviation =
            scale * config.omega_max / (hyper.n_omega * std::sqrt(static_cast<double>(l)));
        boost::random::normal_distribution<double> normal(0.0, deviation);
        (*coefficients)[static_cast<std::size_t>(l - 1)] = normal(rng);
      }
    }
    if (satisfies_constraints(protocol, config)) return protocol;
    scale *= 0.5;
  }
  throw ConfigError("could not sample a protocol satisfying the constraints");
}

Susceptibility susceptibility(const Model& model, const Schedule& schedule, Channel channel,
                              double t_r, const Matrix& rho_at_t_r,
                              const PropagationSettings& settings) {
  // i [G, rho] is Hermitian, which lets the propagation take the cheaper path;
  // chi = Re Tr(rho_* i drho(t_f)) by linearity.
  const Matrix& generator = model.generator(channel);
  Matrix perturbation = Complex{0.0, 1.0} * (generator * rho_at_t_r - rho_at_t_r * generator);
  perturbation = 0.5 * (perturbation + perturbation.adjoint()).eval();
  perturbation = propagate(model, schedule, std::move(perturbation), t_r, schedule.duration(),
                           settings);
  const auto target = DensityOperator::target(model.config());
  const Complex overlap = (target.matrix().adjoint() * perturbation).trace();
  Susceptibility result{overlap.real(), std::abs(overlap.imag())};
  if (result.imaginary_residual > 1e-9 * std::max(1.0, std::abs(result.value))) {
    throw IntegrationError("susceptibility acquired an imaginary part");
  }
  return result;
}

SineModeProtocol update_step(const SineModeProtocol& protocol, Channel channel, double t_r,
                             double chi, const OptimizerHyperparams& hyper) {
  SineModeProtocol updated = protocol;
  const double alpha = channel == Channel::F ? hyper.alpha_tw : hyper.alpha_dr;
  const double factor = 2.0 * alpha / protocol.t_f * chi;
  auto& coefficients = updated.coefficients(channel);
  for (std::size_t l = 0; l < coefficients.size(); ++l) {
    coefficients[l] -= factor * std::sin(kPi * static_cast<double>(l + 1) * t_r / protocol.t_f);
  }
  return updated;
}

OptimizationTrajectory optimize(const ModelConfig& config, double t_f,
                                const OptimizerHyperparams& hyper) {
  hyper.validate();
  Rng rng(hyper.seed);
  auto initial = init_parameters(config, t_f, hyper, rng);
  return optimize_from(config, std::move(initial), hyper, rng);
}

OptimizationTrajectory optimize_from(const ModelConfig& config, SineModeProtocol initial,
                                     const OptimizerHyperparams& hyper, Rng& rng) {
  hyper.validate();
  initial.validate();
  const Model model(config);
  const double t_f = initial.t_f;
  const auto rho0 = DensityOperator::initial(config);

  OptimizerHyperparams rates = hyper;
  OptimizationTrajectory trajectory;
  StallMonitor stall(hyper.stall_window);
  SineModeProtocol current = std::move(initial);
  long proposals = 0;

  auto checkpoint = [&] {
    const double value = protocol_infidelity(model, Schedule(current), hyper.propagation);
    trajectory.checkpoints.push_back(
        {trajectory.accepted, proposals, value, rates.alpha_dr, current});
    if (value < trajectory.best_infidelity || trajectory.checkpoints.size() == 1) {
      trajectory.best_infidelity = value;
      trajectory.best_protocol = current;
    }
    if (hyper.stall_window > 0 && stall.observe(trajectory.accepted, trajectory.best_infidelity)) {
      rates.alpha_dr = halve_on_stall(rates.alpha_dr);
      ++trajectory.halvings;
    }
  };

  boost::random::uniform_real_distribution<double> draw_time(0.0, t_f);
  boost::random::uniform_int_distribution<int> draw_channel(0, 2);
  const long budget = hyper.max_proposal_factor * std::max(hyper.n_it, 1L);

  try {
    checkpoint();
    while (trajectory.accepted < hyper.n_it) {
      if (proposals >= budget) {
        trajectory.failure = "proposal budget exhausted";
        break;
      }
      ++proposals;
      const double t_r = draw_time(rng);
      const auto channel = static_cast<Channel>(draw_channel(rng));

      const Schedule schedule(current);
      const Matrix rho_t_r = propagate(model, schedule, rho0.matrix(), 0.0, t_r, hyper.propagation);
      const auto chi = susceptibility(model, schedule, channel, t_r, rho_t_r, hyper.propagation);
      auto candidate = update_step(current, channel, t_r, chi.value, rates);

      if (!satisfies_constraints(candidate, config)) {
        ++trajectory.rejected;
        continue;
      }
      current = std::move(candidate);
      ++trajectory.accepted;
      if (trajectory.accepted % hyper.eval_stride == 0 || trajectory.accepted == hyper.n_it) {
        checkpoint();
      }
    }
  } catch (const IntegrationError& error) {
    trajectory.failure = error.what();
  }

  trajectory.final_protocol = current;
  trajectory.final_alpha_dr = rates.alpha_dr;
  return trajectory;
}

std::vector<double> learning_rate_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(0.01 + 0.2 * k);
  return grid;
}

std::vector<double> calibration_pulse_areas() {
  std::vector<double> areas;
  for (int k = 0; k <= 6; ++k) areas.push_back(1.0 + 0.5 * k);
  return areas;
}

LearningRates CalibrationTable::lookup(double omega_max, double t_f) const {
  LearningRates fallback{kDefaultLearningRate, kDefaultLearningRate, false};
  if (entries.empty() || !(omega_max > 0.0)) return fallback;

  double best_log_distance = std::numeric_limits<double>::infinity();
  double nearest_omega = 0.0;
  for (const auto& entry : entries) {
    const double distance = std::abs(std::log(entry.omega_max / omega_max));
    if (distance < best_log_distance) {
      best_log_distance = distance;
      nearest_omega = entry.omega_max;
    }
  }
  if (best_log_distance > std::log(1.5)) return fallback;

  const double area = t_f * omega_max / kPi;
  const LearningRateEntry* chosen = nullptr;
  double min_area = std::numeric_limits<double>::infinity();
  double max_area = -min_area;
  for (const auto& entry : entries) {
    if (entry.omega_max != nearest_omega) continue;
    min_area = std::min(min_area, entry.pulse_area);
    max_area = std::max(max_area, entry.pulse_area);
    if (!chosen || std::abs(entry.pulse_area - area) < std::abs(chosen->pulse_area - area)) {
      chosen = &entry;
    }
  }
  if (!chosen || area < min_area - 0.25 || area > max_area + 0.25 || chosen->fallback) {
    return fallback;
  }
  return {chosen->alpha_dr, chosen->alpha_tw, true};
}

std::string CalibrationTable::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& entry : entries) {
    rows.push_back({{"omega_max_over_omega0", entry.omega_max},
                    {"tf_omega_max_over_pi", entry.pulse_area},
                    {"alpha_dr", entry.alpha_dr},
                    {"alpha_tw", entry.alpha_tw},
                    {"best_infidelity", entry.best_infidelity},
                    {"fallback", entry.fallback},
                    {"unstable_pairs", entry.unstable_pairs}});
  }
  return nlohmann::json{{"entries", rows}}.dump(2);
}

CalibrationTable CalibrationTable::from_json(const std::string& text) {
  CalibrationTable table;
  try {
    const auto document = nlohmann::json::parse(text);
    for (const auto& row : document.at("entries")) {
      LearningRateEntry entry;
      entry.omega_max = row.at("omega_max_over_omega0").get<double>();
      entry.pulse_area = row.at("tf_omega_max_over_pi").get<double>();
      entry.alpha_dr = row.at("alpha_dr").get<double>();
      entry.alpha_tw = row.at("alpha_tw").get<double>();
      entry.best_infidelity = row.value("best_infidelity", 1.0);
      entry.fallback = row.value("fallback", false);
      entry.unstable_pairs = row.value("unstable_pairs", 0);
      table.entries.push_back(entry);
    }
  } catch (const nlohmann::json::exception& error) {
    throw ConfigError(std::string("malformed calibration table: ") + error.what());
  }
  return table;
}

LearningRates learning_rate_lookup(const CalibrationTable& table, double omega_max, double t_f) {
  return table.lookup(omega_max, t_f);
}

double halve_on_stall(double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("learning rate must be positive");
  return 0.5 * alpha;
}

bool StallMonitor::observe(long accepted, double best_infidelity) {
  if (best_infidelity < best_) {
    best_ = best_infidelity;
    last_improvement_ = accepted;
    return false;
  }
  if (window_ > 0 && accepted - last_improvement_ >= window_) {
    last_improvement_ = accepted;
    return true;
  }
  return false;
}

}  // namespace recoilfree
