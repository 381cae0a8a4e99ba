#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/random/mersenne_twister.hpp>

#include "recoilfree/dynamics.hpp"
#include "recoilfree/hilbert.hpp"
#include "recoilfree/protocols.hpp"

namespace recoilfree {

/// Engine shared by every stochastic routine. Boost's distributions are used
/// on top of it so draws are identical across standard libraries.
using Rng = boost::random::mt19937_64;

struct OptimizerHyperparams {
  double alpha_dr = 0.21;
  double alpha_tw = 0.21;
  long n_it = 100000;
  int n_omega = 18;
  int n_f = 3;
  std::uint64_t seed = 1;
  long eval_stride = 1000;
  /// Accepted updates without a best-infidelity improvement before alpha_dr
  /// is halved; 0 disables halving.
  long stall_window = 5000;
  /// Upper bound on proposals, as a multiple of n_it, before giving up.
  long max_proposal_factor = 100;
  PropagationSettings propagation;

  void validate() const;
};

/// Initial protocol of duration t_f: theta_{x/y,l} ~ N(0, Omega_max / (n_omega sqrt(l))),
/// resampled with a halved deviation until the constraints hold; theta_f = 0.
SineModeProtocol init_parameters(const ModelConfig& config, double t_f,
                                 const OptimizerHyperparams& hyper, Rng& rng);

struct Susceptibility {
  double value = 0.0;
  /// Imaginary part discarded when taking the real part; a health metric.
  double imaginary_residual = 0.0;
};

/// chi_j(t_r) = Re{ i Tr(rho_* drho(t_f)) } where drho(t_r) = [G_j, rho(t_r)]
/// is propagated to t_f under the same master equation and G_j = dH/du_j is
/// the control generator of channel j. chi_j equals the derivative of the
/// final infidelity with respect to a unit impulse added to u_j at t_r.
Susceptibility susceptibility(const Model& model, const Schedule& schedule, Channel channel,
                              double t_r, const Matrix& rho_at_t_r,
                              const PropagationSettings& settings = {});

/// theta_{j,l} <- theta_{j,l} - (2 alpha_j / t_f) chi sin(pi l t_r / t_f).
SineModeProtocol update_step(const SineModeProtocol& protocol, Channel channel, double t_r,
                             double chi, const OptimizerHyperparams& hyper);

struct Checkpoint {
  long accepted = 0;
  long proposals = 0;
  double infidelity = 0.0;
  double alpha_dr = 0.0;
  SineModeProtocol protocol;
};

struct OptimizationTrajectory {
  std::vector<Checkpoint> checkpoints;
  SineModeProtocol final_protocol;
  SineModeProtocol best_protocol;
  double best_infidelity = 1.0;
  double final_alpha_dr = 0.0;
  long accepted = 0;
  long rejected = 0;
  long halvings = 0;
  /// Set when the run stopped early (integration failure, proposal budget).
  std::optional<std::string> failure;
};

/// Runs PEPR for hyper.n_it accepted updates from init_parameters. The best
/// protocol is tracked at checkpoints every eval_stride accepted updates.
OptimizationTrajectory optimize(const ModelConfig& config, double t_f,
                                const OptimizerHyperparams& hyper);

/// Same loop starting from a given protocol.
OptimizationTrajectory optimize_from(const ModelConfig& config, SineModeProtocol initial,
                                     const OptimizerHyperparams& hyper, Rng& rng);

/// Learning-rate scan grid {0.01, 0.21, ..., 2.01}.
std::vector<double> learning_rate_grid();

/// Available pulse areas t_test Omega_max / pi in {1, 1.5, ..., 4}.
std::vector<double> calibration_pulse_areas();

struct LearningRateEntry {
  double omega_max = 0.0;
  double pulse_area = 0.0;  ///< t_test Omega_max / pi
  double alpha_dr = 0.21;
  double alpha_tw = 0.21;
  double best_infidelity = 1.0;
  bool fallback = false;
  /// Rate pairs whose seed ensemble spread over more than a decade.
  int unstable_pairs = 0;
};

struct LearningRates {
  double alpha_dr = 0.21;
  double alpha_tw = 0.21;
  bool from_table = false;
};

inline constexpr double kDefaultLearningRate = 0.21;

struct CalibrationTable {
  std::vector<LearningRateEntry> entries;

  /// Rates for the stored Omega_max closest in log space (within a factor of
  /// 1.5) and the closest calibrated pulse area; defaults otherwise.
  LearningRates lookup(double omega_max, double t_f) const;

  std::string to_json() const;
  static CalibrationTable from_json(const std::string& text);
};

LearningRates learning_rate_lookup(const CalibrationTable& table, double omega_max, double t_f);

double halve_on_stall(double alpha);

/// Tracks accepted updates since the last best-infidelity improvement.
class StallMonitor {
 public:
  explicit StallMonitor(long window) : window_(window) {}

  /// Records a checkpoint; returns true when the learning rate should halve.
  bool observe(long accepted, double best_infidelity);

 private:
  long window_;
  long last_improvement_ = 0;
  double best_ = 2.0;
};

}  // namespace recoilfree
