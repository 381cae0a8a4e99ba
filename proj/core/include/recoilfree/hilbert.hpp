#pragma once

#include <array>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace recoilfree {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

/// Thrown when a model or run configuration violates its invariants.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Laboratory values used only to derive the dimensionless model parameters.
struct PhysicalUnits {
  double omega0_rad_per_s = 0.0;
  double mass_kg = 0.0;
  std::optional<double> k_per_m;  ///< laser wave vector; fixes eta when present
  double v_max_m_per_s = 0.0;

  /// Harmonic oscillator length sqrt(hbar / (2 m omega0)).
  double oscillator_length() const;
};

/// Dimensionless model parameters. Time is measured in 1/omega0 and every
/// frequency in omega0 (hbar = omega0 = 1 internally).
struct ModelConfig {
  double eta = 0.505;
  double omega_max = 1.0;
  /// Dephasing rate in units of omega0 / (2 pi).
  double gamma_z = 0.0;
  int n_max = 3;
  /// Bound on |d f_tw / dt| in units of omega0^2. The default is the
  /// ytterbium tweezer value, see ytterbium_tweezer_units().
  double v_max_dimless = 32731.400916895742;
  std::optional<PhysicalUnits> physical;

  /// Hilbert space dimension 2 (n_max + 1).
  int dimension() const { return 2 * (n_max + 1); }
  int motional_levels() const { return n_max + 1; }
  /// Dephasing rate in internal units (omega0 = 1).
  double dephasing_rate() const;

  /// Throws ConfigError on any invariant violation.
  void validate(bool allow_zero_eta = true) const;

  /// Derives eta (when the wave vector is known) and the velocity bound from
  /// laboratory values: v_max_dimless = v_max / (2 x0 omega0). An explicit eta
  /// must agree with k x0.
  static ModelConfig from_physical(const PhysicalUnits& units, double omega_max,
                                   double gamma_z, int n_max,
                                   std::optional<double> eta = std::nullopt);
};

/// Ytterbium-171 in a 50 kHz tweezer driven at 302 nm, v_max = 500 m/s.
PhysicalUnits ytterbium_tweezer_units();

enum class Channel { X = 0, Y = 1, F = 2 };
inline constexpr std::array<Channel, 3> kChannels{Channel::X, Channel::Y, Channel::F};
std::string to_string(Channel channel);

struct LadderPair {
  Matrix a;
  Matrix a_dag;
};

/// Truncated annihilation/creation operators on n = 0..n_max.
LadderPair build_ladder(int n_max);

/// exp(i eta (a + a^dagger)) from the truncated Hermitian generator. Exactly
/// unitary on the truncated space.
Matrix build_displacement(double eta, int n_max);

/// Control operators on the spin (x) motion space. Basis index is
/// spin * (n_max + 1) + n with spin 0 = up, spin 1 = down.
struct ControlSet {
  Matrix b_x;
  Matrix b_y;
  Matrix b_f;

  const Matrix& operator[](Channel channel) const;
};

ControlSet build_control_set(const ModelConfig& config);

/// Control amplitudes at one instant.
struct ControlSample {
  double h_x = 0.0;
  double h_y = 0.0;
  double f_tw = 0.0;

  double operator[](Channel channel) const;
};

/// Precomputed operators for one configuration. Immutable once built.
class Model {
 public:
  explicit Model(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  int dimension() const { return config_.dimension(); }
  const ControlSet& controls() const { return controls_; }
  const Matrix& oscillator_hamiltonian() const { return oscillator_; }
  /// sigma_z (x) 1_m.
  const Matrix& dephasing_operator() const { return dephasing_; }
  /// (a + a^dagger) lifted to the full space.
  const Matrix& position_quadrature() const { return controls_.b_f; }
  /// i (a^dagger - a) lifted to the full space.
  const Matrix& momentum_quadrature() const { return momentum_; }

  /// dH / du_j for control amplitude u_j: B_x / 2, B_y / 2, -B_f.
  const Matrix& generator(Channel channel) const;
  double coupling(Channel channel) const;

  /// a^dagger a + (h_x / 2) B_x + (h_y / 2) B_y - f_tw B_f.
  Matrix hamiltonian(const ControlSample& sample) const;
  /// Writes the Hamiltonian into an existing matrix without reallocating.
  void hamiltonian_into(const ControlSample& sample, Matrix& out) const;

  /// Basis index of |spin, n> (spin 0 = up).
  int index(int spin, int n) const { return spin * config_.motional_levels() + n; }

 private:
  ModelConfig config_;
  ControlSet controls_;
  Matrix oscillator_;
  Matrix dephasing_;
  Matrix momentum_;
  std::array<Matrix, 3> generators_;
};

Matrix hamiltonian_at(const ModelConfig& config, const ControlSample& sample);

/// -i [H, rho] + gamma (L rho L^dagger - rho) with L = sigma_z (x) 1_m.
Matrix lindblad_rhs(const Model& model, const Matrix& hamiltonian, const Matrix& rho);

/// Allocation-free variant used by the integrator. With `hermitian` set, rho
/// must be exactly Hermitian and a single matrix product is formed.
void lindblad_rhs_into(const Model& model, const Matrix& hamiltonian, const Matrix& rho,
                       Matrix& scratch, Matrix& out, bool hermitian = false);

}  // namespace recoilfree
