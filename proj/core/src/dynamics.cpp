#include "recoilfree/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace recoilfree {

namespace {

// Grid points closer than this fraction of a step are treated as coincident.
constexpr double kGridSnap = 1e-9;

struct Rk4Workspace {
  explicit Rk4Workspace(int dim)
      : h_start(dim, dim), h_mid(dim, dim), h_end(dim, dim), k1(dim, dim), k2(dim, dim),
        k3(dim, dim), k4(dim, dim), stage(dim, dim), scratch(dim, dim) {}

  Matrix h_start, h_mid, h_end;
  Matrix k1, k2, k3, k4, stage, scratch;
  double cached_time = std::numeric_limits<double>::quiet_NaN();
  bool hermitian = false;
};

// One classical RK4 step from t to t_next. The end-point Hamiltonian is kept
// for the next step when it starts exactly at t_next.
void rk4_step(const Model& model, const Schedule& schedule, Matrix& rho, double t, double t_next,
              Rk4Workspace& ws) {
  const double dt = t_next - t;
  if (ws.cached_time == t) {
    std::swap(ws.h_start, ws.h_end);
  } else {
    model.hamiltonian_into(schedule.at(t), ws.h_start);
  }
  model.hamiltonian_into(schedule.at(t + 0.5 * dt), ws.h_mid);
  model.hamiltonian_into(schedule.at(t_next), ws.h_end);
  ws.cached_time = t_next;

  lindblad_rhs_into(model, ws.h_start, rho, ws.scratch, ws.k1, ws.hermitian);
  ws.stage = rho + (0.5 * dt) * ws.k1;
  lindblad_rhs_into(model, ws.h_mid, ws.stage, ws.scratch, ws.k2, ws.hermitian);
  ws.stage = rho + (0.5 * dt) * ws.k2;
  lindblad_rhs_into(model, ws.h_mid, ws.stage, ws.scratch, ws.k3, ws.hermitian);
  ws.stage = rho + dt * ws.k3;
  lindblad_rhs_into(model, ws.h_end, ws.stage, ws.scratch, ws.k4, ws.hermitian);
  rho += (dt / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
}

}  // namespace

void PropagationSettings::validate() const {
  if (substeps_per_period < 10) throw ConfigError("substeps_per_period must be at least 10");
  if (observable_sample_count < 2) throw ConfigError("observable_sample_count must be at least 2");
}

DensityOperator::DensityOperator(Matrix matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
    throw ConfigError("density operator must be a non-empty square matrix");
  }
  if (hermiticity_error() > 1e-10) throw ConfigError("density operator must be Hermitian");
  if (std::abs(matrix_.trace() - Complex{1.0, 0.0}) > 1e-9) {
    throw ConfigError("density operator must have unit trace");
  }
}

DensityOperator DensityOperator::basis_state(const ModelConfig& config, int spin, int n) {
  if (spin < 0 || spin > 1 || n < 0 || n > config.n_max) {
    throw ConfigError("basis state outside the truncated space");
  }
  Matrix rho = Matrix::Zero(config.dimension(), config.dimension());
  const int k = spin * config.motional_levels() + n;
  rho(k, k) = 1.0;
  return DensityOperator(std::move(rho));
}

DensityOperator DensityOperator::maximally_mixed(const ModelConfig& config) {
  const int dim = config.dimension();
  return DensityOperator(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

double DensityOperator::purity() const { return (matrix_ * matrix_).trace().real(); }

double DensityOperator::hermiticity_error() const {
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityOperator::min_eigenvalue() const {
  const Matrix hermitian = 0.5 * (matrix_ + matrix_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

TimeGrid TimeGrid::build(const ModelConfig& config, double t_f,
                         const PropagationSettings& settings) {
  settings.validate();
  if (!(t_f > 0.0) || !std::isfinite(t_f)) throw ConfigError("duration must be positive");
  const double two_pi = 2.0 * std::numbers::pi;
  const double scale = std::min({two_pi, two_pi / config.omega_max, t_f});
  const double target = scale / settings.substeps_per_period;
  const double steps = std::ceil(t_f / target * (1.0 - 1e-12));
  if (!(steps >= 1.0) || steps > 1e9) throw IntegrationError("step size underflow");
  TimeGrid grid;
  grid.t_f = t_f;
  grid.steps = static_cast<long>(steps);
  grid.h = t_f / steps;
  return grid;
}

Matrix propagate(const Model& model, const Schedule& schedule, Matrix rho, double t0, double t1,
                 const PropagationSettings& settings) {
  if (t1 < t0) throw ConfigError("propagation end precedes start");
  const TimeGrid grid = TimeGrid::build(model.config(), schedule.duration(), settings);
  const double h = grid.h;
  if (t1 - t0 < kGridSnap * h) return rho;

  Rk4Workspace ws(model.dimension());
  // Real-coefficient RK4 stages keep an exactly Hermitian operand exactly
  // Hermitian, so the cheaper right-hand side stays valid for the whole run.
  ws.hermitian = rho == rho.adjoint();

  // Index of the first grid point at or after t0.
  const double position = t0 / h;
  long k = static_cast<long>(std::ceil(position - kGridSnap));
  double t = t0;
  if (std::abs(position - static_cast<double>(k)) < kGridSnap) {
    t = static_cast<double>(k) * h;
  } else {
    const double next = std::min(static_cast<double>(k) * h, t1);
    rk4_step(model, schedule, rho, t, next, ws);
    t = next;
    if (t >= t1) return rho;
  }

  const long last = static_cast<long>(std::floor(t1 / h + kGridSnap));
  for (; k < last; ++k) {
    const double end = static_cast<double>(k + 1) * h;
    rk4_step(model, schedule, rho, static_cast<double>(k) * h, end, ws);
    t = end;
  }
  if (t1 - t > kGridSnap * h) rk4_step(model, schedule, rho, t, t1, ws);

  if (!rho.allFinite()) throw IntegrationError("non-finite state during propagation");
  return rho;
}

DensityOperator evolve(const Model& model, const Schedule& schedule, const DensityOperator& rho0,
                       double t0, double t1, const PropagationSettings& settings) {
  Matrix rho = propagate(model, schedule, rho0.matrix(), t0, t1, settings);
  const double drift = std::abs(rho.trace() - rho0.matrix().trace());
  if (drift > 1e-6) throw IntegrationError("trace drift beyond 1e-6");
  DensityOperator result(std::move(rho), DensityOperator::Unchecked{});
  if (result.min_eigenvalue() < -1e-6) throw IntegrationError("density operator lost positivity");
  return result;
}

DensityOperator evolve(const ModelConfig& config, const Schedule& schedule,
                       const DensityOperator& rho0, double t0, double t1,
                       const PropagationSettings& settings) {
  return evolve(Model(config), schedule, rho0, t0, t1, settings);
}

double infidelity(const DensityOperator& rho, const DensityOperator& target) {
  return 1.0 - (target.matrix().adjoint() * rho.matrix()).trace().real();
}

double protocol_infidelity(const Model& model, const Schedule& schedule,
                           const PropagationSettings& settings) {
  const auto& config = model.config();
  const auto final_state =
      evolve(model, schedule, DensityOperator::initial(config), 0.0, schedule.duration(), settings);
  return infidelity(final_state, DensityOperator::target(config));
}

std::vector<QuadratureSample> quadrature_trajectory(const Model& model, const Schedule& schedule,
                                                    const DensityOperator& rho0,
                                                    const PropagationSettings& settings) {
  settings.validate();
  const int count = settings.observable_sample_count;
  const double t_f = schedule.duration();
  std::vector<QuadratureSample> samples;
  samples.reserve(static_cast<std::size_t>(count));

  Matrix rho = rho0.matrix();
  double t = 0.0;
  for (int k = 0; k < count; ++k) {
    const double next = t_f * static_cast<double>(k) / static_cast<double>(count - 1);
    rho = propagate(model, schedule, std::move(rho), t, next, settings);
    t = next;
    samples.push_back({t, (model.position_quadrature() * rho).trace().real(),
                       (model.momentum_quadrature() * rho).trace().real()});
  }
  return samples;
}

std::vector<double> motional_populations(const DensityOperator& rho) {
  const int levels = rho.dimension() / 2;
  std::vector<double> populations(static_cast<std::size_t>(levels));
  for (int n = 0; n < levels; ++n) {
    populations[static_cast<std::size_t>(n)] =
        rho.matrix()(n, n).real() + rho.matrix()(levels + n, levels + n).real();
  }
  return populations;
}

}  // namespace recoilfree
