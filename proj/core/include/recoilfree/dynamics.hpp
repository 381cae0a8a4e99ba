#pragma once

#include <stdexcept>
#include <vector>

#include "recoilfree/hilbert.hpp"
#include "recoilfree/protocols.hpp"

namespace recoilfree {

/// Raised when the integrator cannot produce a trustworthy state: step
/// underflow, non-finite entries, trace drift or lost positivity.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PropagationSettings {
  int substeps_per_period = 200;
  int observable_sample_count = 101;

  void validate() const;
};

/// Density matrix on the spin (x) motion space.
class DensityOperator {
 public:
  /// Checks Hermiticity (1e-10) and unit trace (1e-9).
  explicit DensityOperator(Matrix matrix);

  /// |spin, n><spin, n| with spin 0 = up, 1 = down.
  static DensityOperator basis_state(const ModelConfig& config, int spin, int n);
  static DensityOperator maximally_mixed(const ModelConfig& config);
  /// |down, 0><down, 0|.
  static DensityOperator initial(const ModelConfig& config) { return basis_state(config, 1, 0); }
  /// |up, 0><up, 0|.
  static DensityOperator target(const ModelConfig& config) { return basis_state(config, 0, 0); }

  const Matrix& matrix() const { return matrix_; }
  int dimension() const { return static_cast<int>(matrix_.rows()); }
  double trace() const { return matrix_.trace().real(); }
  double purity() const;
  double hermiticity_error() const;
  double min_eigenvalue() const;

 private:
  struct Unchecked {};
  DensityOperator(Matrix matrix, Unchecked) : matrix_(std::move(matrix)) {}
  friend DensityOperator evolve(const Model&, const Schedule&, const DensityOperator&, double,
                                double, const PropagationSettings&);

  Matrix matrix_;
};

/// Uniform RK4 grid anchored at t = 0 for a schedule of duration t_f:
/// h = min(2 pi, 2 pi / Omega_max, t_f) / substeps, rounded so that an
/// integer number of steps spans [0, t_f].
struct TimeGrid {
  double t_f = 0.0;
  long steps = 0;
  double h = 0.0;

  static TimeGrid build(const ModelConfig& config, double t_f, const PropagationSettings& settings);
};

/// Integrates the master equation for an arbitrary operator (states and
/// commutator perturbations alike) from t0 to t1 along the schedule's grid.
/// No physical validity checks beyond finiteness.
Matrix propagate(const Model& model, const Schedule& schedule, Matrix rho, double t0, double t1,
                 const PropagationSettings& settings = {});

/// rho(t1) from rho(t0). Throws IntegrationError on trace drift beyond 1e-6
/// or an eigenvalue below -1e-6.
DensityOperator evolve(const Model& model, const Schedule& schedule, const DensityOperator& rho0,
                       double t0, double t1, const PropagationSettings& settings = {});

/// Convenience overload building the model from its configuration.
DensityOperator evolve(const ModelConfig& config, const Schedule& schedule,
                       const DensityOperator& rho0, double t0, double t1,
                       const PropagationSettings& settings = {});

/// 1 - Tr(target^dagger rho).
double infidelity(const DensityOperator& rho, const DensityOperator& target);

/// Infidelity of |down,0> driven to |up,0> over the full schedule.
double protocol_infidelity(const Model& model, const Schedule& schedule,
                           const PropagationSettings& settings = {});

struct QuadratureSample {
  double t = 0.0;
  double position = 0.0;  ///< <a + a^dagger>
  double momentum = 0.0;  ///< <i (a^dagger - a)>
};

/// Quadratures at observable_sample_count uniform times on [0, t_f].
std::vector<QuadratureSample> quadrature_trajectory(const Model& model, const Schedule& schedule,
                                                    const DensityOperator& rho0,
                                                    const PropagationSettings& settings = {});

/// p_n = sum_spin <spin, n| rho |spin, n>.
std::vector<double> motional_populations(const DensityOperator& rho);

}  // namespace recoilfree
