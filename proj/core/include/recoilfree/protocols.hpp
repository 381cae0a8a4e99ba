#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "recoilfree/hilbert.hpp"

namespace recoilfree {

/// Control protocol expanded in sine modes sin(pi l t / t_f), l = 1..n.
///
/// h_x and h_y share n_omega modes, the tweezer force has n_f modes. Every
/// amplitude is in units of omega0 and vanishes at t = 0 and t = t_f.
struct SineModeProtocol {
  double t_f = 0.0;
  std::vector<double> theta_x;
  std::vector<double> theta_y;
  std::vector<double> theta_f;

  SineModeProtocol() = default;
  SineModeProtocol(double duration, int n_omega, int n_f);

  int n_omega() const { return static_cast<int>(theta_x.size()); }
  int n_f() const { return static_cast<int>(theta_f.size()); }

  std::vector<double>& coefficients(Channel channel);
  const std::vector<double>& coefficients(Channel channel) const;

  /// Throws ConfigError if t_f is not positive, mode counts mismatch or a
  /// coefficient is not finite.
  void validate() const;

  /// Rejects t outside [0, t_f].
  ControlSample sample(double t) const;
  /// Same closed form without the range check; used on integrator stages.
  ControlSample sample_unchecked(double t) const;
  /// Analytic d f_tw / dt.
  double force_rate(double t) const;
  /// Omega(t) = h_x + i h_y.
  std::complex<double> rabi(double t) const;

  bool operator==(const SineModeProtocol&) const = default;
};

/// Evaluates sum_l coefficients[l-1] sin(pi l t / t_f).
double sine_series(std::span<const double> coefficients, double t, double t_f);

/// Anything the dynamics can be driven with: a sine-mode protocol, optionally
/// with its force replaced by a closed-form curve and scaled by a sign.
class Schedule {
 public:
  using ForceCurve = std::function<double(double)>;

  Schedule(SineModeProtocol protocol);  // NOLINT: implicit by intent
  Schedule(SineModeProtocol protocol, ForceCurve force, std::string force_label);

  double duration() const { return protocol_.t_f; }
  const SineModeProtocol& protocol() const { return protocol_; }
  bool has_force_curve() const { return static_cast<bool>(force_); }
  const std::string& force_label() const { return force_label_; }
  double force_scale() const { return force_scale_; }

  ControlSample at(double t) const;
  double force(double t) const;

  /// Copy with the force multiplied by `scale`.
  Schedule with_force_scale(double scale) const;

 private:
  SineModeProtocol protocol_;
  ForceCurve force_;
  std::string force_label_;
  double force_scale_ = 1.0;
};

/// Omega(t) = Omega_max sin(pi t / t_f) with t_f = pi^2 / (2 Omega_max).
SineModeProtocol rabi_protocol(double omega_max);

/// t_f used by the recoil-compensated protocol: the Rabi duration stretched by
/// the Debye-Waller factor e^{eta^2 / 2} when Omega_max < omega0.
double recoil_compensated_duration(const ModelConfig& config);

/// -(eta Omega_max / 2) sin(pi t / t_f) sin(pi sin^2(pi t / (2 t_f))).
double recoil_compensated_force(double eta, double omega_max, double t_f, double t);

struct RecoilCompensatedProtocol {
  /// Sine Rabi pulse driven with the exact force curve.
  Schedule exact;
  /// The same force projected on n_f sine modes.
  SineModeProtocol projected;
};

RecoilCompensatedProtocol recoil_compensated_protocol(const ModelConfig& config, int n_f = 3);

/// f(t) = -(eta h(t) / 2) sin(int_0^t h) on the uniform grid of `h_samples`
/// spanning [0, t_f].
std::vector<double> first_order_force(std::span<const double> h_samples, double eta, double t_f);

/// Sine-mode coefficients theta_l = (2 / t_f) int_0^{t_f} sin(pi l t / t_f) f(t) dt
/// of first_order_force(h_samples). Rejects empty or negative input.
std::vector<double> projected_force(std::span<const double> h_samples, double eta, double t_f,
                                    int n_f);

/// Projects uniformly sampled values on [0, t_f] onto n sine modes.
std::vector<double> project_on_sine_modes(std::span<const double> samples, double t_f, int n);

/// |Omega(t_k)| on `count` uniform points of [0, t_f].
std::vector<double> sample_amplitude(const SineModeProtocol& protocol, int count);

/// Theta(t_f) = int_0^{t_f} |Omega| by adaptive quadrature.
double pulse_area(const SineModeProtocol& protocol);

/// j = int_0^{t_f} f_tw, closed form over the odd modes.
double normalized_impulse(const SineModeProtocol& protocol);
/// j of a schedule's (possibly closed-form) force by adaptive quadrature.
double normalized_impulse(const Schedule& schedule);

/// Rotates Omega by e^{i phi} uniformly across modes.
SineModeProtocol rotate_phase(const SineModeProtocol& protocol, double phi);

struct ConstraintReport {
  bool amplitude_ok = true;
  bool velocity_ok = true;
  double worst_amplitude = 0.0;
  double worst_velocity = 0.0;
  std::vector<double> violating_times;

  bool ok() const { return amplitude_ok && velocity_ok; }
};

inline constexpr int kConstraintIntervals = 100;

/// Checks |Omega(t_j)| <= Omega_max and |d f_tw / dt (t_j)| < v_max on
/// t_j = j t_f / 100, j = 0..100.
ConstraintReport check_constraints(const SineModeProtocol& protocol, const ModelConfig& config);

/// Cheaper yes/no variant used inside the optimizer loop.
bool satisfies_constraints(const SineModeProtocol& protocol, const ModelConfig& config);

}  // namespace recoilfree
