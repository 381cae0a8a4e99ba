#pragma once

#include <complex>

#include <Eigen/Dense>

#include "recoilfree/hilbert.hpp"
#include "recoilfree/protocols.hpp"

namespace recoilfree::oracle {

/// <m| exp(i eta (a + a^dagger)) |n> of the untruncated oscillator from the
/// generalized Laguerre closed form.
std::complex<double> displacement_element(double eta, int m, int n);

/// Rectangular pulse added to one control channel: amplitude height on
/// [start, start + width].
struct Rectangle {
  Channel channel = Channel::X;
  double start = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// Final infidelity from |down,0> under the schedule plus an optional
/// rectangle, integrated with piecewise-constant midpoint exponentials
/// (Hilbert space when gamma_z = 0, Liouville space otherwise). Breakpoints
/// of the rectangle are honoured exactly.
double infidelity_exponential(const Model& model, const Schedule& schedule, const Rectangle* extra,
                              int steps);

/// Central finite difference of the final infidelity with respect to an
/// impulse of size epsilon concentrated in a window of width w around t_r.
double finite_difference_gradient(const Model& model, const Schedule& schedule, Channel channel,
                                  double t_r, double width, double epsilon, int steps);

/// rho(t1) from rho(t0) for constant Hamiltonian H with dephasing, via the
/// Liouville-space matrix exponential.
Matrix liouville_step(const Model& model, const Matrix& hamiltonian, const Matrix& rho, double dt);

}  // namespace recoilfree::oracle
