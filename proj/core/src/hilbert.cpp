#include "recoilfree/hilbert.hpp"

#include <cmath>
#include <numbers>

namespace recoilfree {

namespace {

constexpr double kHbar = 1.054571817e-34;
constexpr double kAtomicMassUnit = 1.66053906660e-27;

Matrix lift_motional(const Matrix& motional) {
  const auto levels = motional.rows();
  Matrix full = Matrix::Zero(2 * levels, 2 * levels);
  full.topLeftCorner(levels, levels) = motional;
  full.bottomRightCorner(levels, levels) = motional;
  return full;
}

}  // namespace

double PhysicalUnits::oscillator_length() const {
  return std::sqrt(kHbar / (2.0 * mass_kg * omega0_rad_per_s));
}

PhysicalUnits ytterbium_tweezer_units() {
  PhysicalUnits units;
  units.omega0_rad_per_s = 2.0 * std::numbers::pi * 50.0e3;
  units.mass_kg = 171.0 * kAtomicMassUnit;
  units.v_max_m_per_s = 500.0;
  return units;
}

double ModelConfig::dephasing_rate() const { return gamma_z / (2.0 * std::numbers::pi); }

void ModelConfig::validate(bool allow_zero_eta) const {
  if (!std::isfinite(eta) || eta < 0.0 || (!allow_zero_eta && eta == 0.0)) {
    throw ConfigError("eta must be finite and positive");
  }
  if (n_max < 1) throw ConfigError("n_max must be at least 1");
  if (!(omega_max > 0.0) || !std::isfinite(omega_max)) {
    throw ConfigError("omega_max must be positive");
  }
  if (!(gamma_z >= 0.0) || !std::isfinite(gamma_z)) {
    throw ConfigError("gamma_z must be non-negative");
  }
  if (!(v_max_dimless > 0.0)) throw ConfigError("v_max_dimless must be positive");
  if (physical && physical->k_per_m) {
    const double expected = *physical->k_per_m * physical->oscillator_length();
    if (std::abs(eta - expected) > 1e-6 * expected) {
      throw ConfigError("eta is inconsistent with mass, trap frequency and wave vector");
    }
  }
}

ModelConfig ModelConfig::from_physical(const PhysicalUnits& units, double omega_max,
                                       double gamma_z, int n_max, std::optional<double> eta) {
  if (!(units.mass_kg > 0.0) || !(units.omega0_rad_per_s > 0.0) ||
      !(units.v_max_m_per_s > 0.0)) {
    throw ConfigError("physical units require positive mass, trap frequency and v_max");
  }
  ModelConfig config;
  const double x0 = units.oscillator_length();
  if (eta) {
    config.eta = *eta;
  } else if (units.k_per_m) {
    config.eta = *units.k_per_m * x0;
  } else {
    throw ConfigError("either the wave vector or eta must be given");
  }
  config.omega_max = omega_max;
  config.gamma_z = gamma_z;
  config.n_max = n_max;
  config.v_max_dimless = units.v_max_m_per_s / (2.0 * x0 * units.omega0_rad_per_s);
  config.physical = units;
  config.validate();
  return config;
}

std::string to_string(Channel channel) {
  switch (channel) {
    case Channel::X: return "x";
    case Channel::Y: return "y";
    case Channel::F: return "f";
  }
  return "?";
}

LadderPair build_ladder(int n_max) {
  if (n_max < 1) throw ConfigError("n_max must be at least 1");
  const int levels = n_max + 1;
  Matrix a = Matrix::Zero(levels, levels);
  for (int n = 1; n < levels; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  Matrix a_dag = a.adjoint();
  return {std::move(a), std::move(a_dag)};
}

Matrix build_displacement(double eta, int n_max) {
  const auto ladder = build_ladder(n_max);
  // The truncated quadrature is real symmetric, so exp(i eta X) = V e^{i eta Lambda} V^T.
  const Eigen::MatrixXd quadrature = (ladder.a + ladder.a_dag).real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(quadrature);
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  Eigen::VectorXcd phases(quadrature.rows());
  for (Eigen::Index k = 0; k < phases.size(); ++k) {
    phases(k) = std::polar(1.0, eta * solver.eigenvalues()(k));
  }
  return vectors.cast<Complex>() * phases.asDiagonal() * vectors.transpose().cast<Complex>();
}

const Matrix& ControlSet::operator[](Channel channel) const {
  switch (channel) {
    case Channel::X: return b_x;
    case Channel::Y: return b_y;
    case Channel::F: return b_f;
  }
  throw std::logic_error("unknown channel");
}

ControlSet build_control_set(const ModelConfig& config) {
  config.validate();
  const int levels = config.motional_levels();
  const Matrix displacement = build_displacement(config.eta, config.n_max);
  const Matrix displacement_dag = displacement.adjoint();
  const Complex i{0.0, 1.0};

  ControlSet set;
  set.b_x = Matrix::Zero(2 * levels, 2 * levels);
  set.b_x.topRightCorner(levels, levels) = displacement;
  set.b_x.bottomLeftCorner(levels, levels) = displacement_dag;

  set.b_y = Matrix::Zero(2 * levels, 2 * levels);
  set.b_y.topRightCorner(levels, levels) = -i * displacement;
  set.b_y.bottomLeftCorner(levels, levels) = i * displacement_dag;

  const auto ladder = build_ladder(config.n_max);
  set.b_f = lift_motional(ladder.a + ladder.a_dag);
  return set;
}

double ControlSample::operator[](Channel channel) const {
  switch (channel) {
    case Channel::X: return h_x;
    case Channel::Y: return h_y;
    case Channel::F: return f_tw;
  }
  return 0.0;
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  controls_ = build_control_set(config_);
  const auto ladder = build_ladder(config_.n_max);
  oscillator_ = lift_motional(ladder.a_dag * ladder.a);
  momentum_ = lift_motional(Complex{0.0, 1.0} * (ladder.a_dag - ladder.a));

  const int levels = config_.motional_levels();
  dephasing_ = Matrix::Identity(2 * levels, 2 * levels);
  dephasing_.bottomRightCorner(levels, levels) *= -1.0;

  generators_[0] = 0.5 * controls_.b_x;
  generators_[1] = 0.5 * controls_.b_y;
  generators_[2] = -controls_.b_f;
}

const Matrix& Model::generator(Channel channel) const {
  return generators_[static_cast<std::size_t>(channel)];
}

double Model::coupling(Channel channel) const { return channel == Channel::F ? -1.0 : 0.5; }

Matrix Model::hamiltonian(const ControlSample& sample) const {
  Matrix h(dimension(), dimension());
  hamiltonian_into(sample, h);
  return h;
}

void Model::hamiltonian_into(const ControlSample& sample, Matrix& out) const {
  out = oscillator_;
  out.noalias() += (0.5 * sample.h_x) * controls_.b_x;
  out.noalias() += (0.5 * sample.h_y) * controls_.b_y;
  out.noalias() -= sample.f_tw * controls_.b_f;
}

Matrix hamiltonian_at(const ModelConfig& config, const ControlSample& sample) {
  return Model(config).hamiltonian(sample);
}

Matrix lindblad_rhs(const Model& model, const Matrix& hamiltonian, const Matrix& rho) {
  Matrix scratch(rho.rows(), rho.cols());
  Matrix out(rho.rows(), rho.cols());
  lindblad_rhs_into(model, hamiltonian, rho, scratch, out);
  return out;
}

void lindblad_rhs_into(const Model& model, const Matrix& hamiltonian, const Matrix& rho,
                       Matrix& scratch, Matrix& out, bool hermitian) {
  const Complex minus_i{0.0, -1.0};
  scratch.noalias() = hamiltonian * rho;
  if (hermitian) {
    // rho H = (H rho)^dagger when both are Hermitian.
    out = minus_i * (scratch - scratch.adjoint());
  } else {
    out.noalias() = rho * hamiltonian;
    out = minus_i * (scratch - out);
  }

  const double gamma = model.config().dephasing_rate();
  if (gamma > 0.0) {
    // L rho L^dagger - rho vanishes on the spin-diagonal blocks and equals
    // -2 rho on the spin-off-diagonal blocks because L = diag(1, -1) (x) 1.
    const int levels = model.config().motional_levels();
    out.topRightCorner(levels, levels) -= (2.0 * gamma) * rho.topRightCorner(levels, levels);
    out.bottomLeftCorner(levels, levels) -= (2.0 * gamma) * rho.bottomLeftCorner(levels, levels);
  }
}

}  // namespace recoilfree
