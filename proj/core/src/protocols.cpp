#include "recoilfree/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace recoilfree {

namespace {

constexpr double kPi = std::numbers::pi;

// Sum over modes at the normalized time s = t / t_f. sin(l x) follows from the
// three-term recurrence, so one sin/cos pair serves every mode.
double series_at_fraction(std::span<const double> coefficients, double s) {
  const double x = kPi * s;
  const double two_cos = 2.0 * std::cos(x);
  double previous = 0.0;
  double current = std::sin(x);
  double total = 0.0;
  for (double coefficient : coefficients) {
    total += coefficient * current;
    const double next = two_cos * current - previous;
    previous = current;
    current = next;
  }
  return total;
}

double derivative_at_fraction(std::span<const double> coefficients, double s, double t_f) {
  double total = 0.0;
  for (std::size_t l = 0; l < coefficients.size(); ++l) {
    const double k = kPi * static_cast<double>(l + 1);
    total += coefficients[l] * (k / t_f) * std::cos(k * s);
  }
  return total;
}

template <typename F>
double integrate_adaptive(F&& f, double a, double b) {
  using Integrator = boost::math::quadrature::gauss_kronrod<double, 61>;
  return Integrator::integrate(std::forward<F>(f), a, b, 20, 1e-13);
}

// Composite Simpson when the interval count is even, trapezoid otherwise.
double integrate_uniform(std::span<const double> values, double dt) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const std::size_t intervals = n - 1;
  if (intervals % 2 == 0) {
    double odd = 0.0;
    double even = 0.0;
    for (std::size_t k = 1; k < intervals; ++k) (k % 2 == 1 ? odd : even) += values[k];
    return dt / 3.0 * (values.front() + values.back() + 4.0 * odd + 2.0 * even);
  }
  double total = 0.5 * (values.front() + values.back());
  for (std::size_t k = 1; k < intervals; ++k) total += values[k];
  return total * dt;
}

}  // namespace

SineModeProtocol::SineModeProtocol(double duration, int n_omega, int n_f)
    : t_f(duration),
      theta_x(static_cast<std::size_t>(n_omega), 0.0),
      theta_y(static_cast<std::size_t>(n_omega), 0.0),
      theta_f(static_cast<std::size_t>(n_f), 0.0) {}

std::vector<double>& SineModeProtocol::coefficients(Channel channel) {
  switch (channel) {
    case Channel::X: return theta_x;
    case Channel::Y: return theta_y;
    case Channel::F: return theta_f;
  }
  throw std::logic_error("unknown channel");
}

const std::vector<double>& SineModeProtocol::coefficients(Channel channel) const {
  return const_cast<SineModeProtocol*>(this)->coefficients(channel);
}

void SineModeProtocol::validate() const {
  if (!(t_f > 0.0) || !std::isfinite(t_f)) throw ConfigError("t_f must be positive");
  if (theta_x.size() != theta_y.size()) {
    throw ConfigError("theta_x and theta_y must have the same number of modes");
  }
  for (const auto* coefficients : {&theta_x, &theta_y, &theta_f}) {
    for (double value : *coefficients) {
      if (!std::isfinite(value)) throw ConfigError("protocol coefficients must be finite");
    }
  }
}

double sine_series(std::span<const double> coefficients, double t, double t_f) {
  return series_at_fraction(coefficients, t / t_f);
}

ControlSample SineModeProtocol::sample(double t) const {
  const double slack = 1e-12 * t_f;
  if (t < -slack || t > t_f + slack) {
    throw std::out_of_range("sample time outside [0, t_f]");
  }
  return sample_unchecked(std::clamp(t, 0.0, t_f));
}

ControlSample SineModeProtocol::sample_unchecked(double t) const {
  const double s = t / t_f;
  return {series_at_fraction(theta_x, s), series_at_fraction(theta_y, s),
          series_at_fraction(theta_f, s)};
}

double SineModeProtocol::force_rate(double t) const {
  return derivative_at_fraction(theta_f, t / t_f, t_f);
}

std::complex<double> SineModeProtocol::rabi(double t) const {
  const auto sample = sample_unchecked(t);
  return {sample.h_x, sample.h_y};
}

Schedule::Schedule(SineModeProtocol protocol) : protocol_(std::move(protocol)) {
  protocol_.validate();
}

Schedule::Schedule(SineModeProtocol protocol, ForceCurve force, std::string force_label)
    : protocol_(std::move(protocol)), force_(std::move(force)),
      force_label_(std::move(force_label)) {
  protocol_.validate();
}

ControlSample Schedule::at(double t) const {
  ControlSample sample = protocol_.sample_unchecked(t);
  if (force_) sample.f_tw = force_(t);
  sample.f_tw *= force_scale_;
  return sample;
}

double Schedule::force(double t) const { return at(t).f_tw; }

Schedule Schedule::with_force_scale(double scale) const {
  Schedule copy = *this;
  copy.force_scale_ *= scale;
  return copy;
}

SineModeProtocol rabi_protocol(double omega_max) {
  if (!(omega_max > 0.0)) throw ConfigError("omega_max must be positive");
  SineModeProtocol protocol(kPi * kPi / (2.0 * omega_max), 1, 0);
  protocol.theta_x[0] = omega_max;
  return protocol;
}

double recoil_compensated_duration(const ModelConfig& config) {
  const double bare = kPi * kPi / (2.0 * config.omega_max);
  return config.omega_max < 1.0 ? bare * std::exp(0.5 * config.eta * config.eta) : bare;
}

double recoil_compensated_force(double eta, double omega_max, double t_f, double t) {
  const double half = std::sin(kPi * t / (2.0 * t_f));
  return -0.5 * eta * omega_max * std::sin(kPi * t / t_f) * std::sin(kPi * half * half);
}

RecoilCompensatedProtocol recoil_compensated_protocol(const ModelConfig& config, int n_f) {
  config.validate();
  if (n_f < 0) throw ConfigError("n_f must be non-negative");
  const double t_f = recoil_compensated_duration(config);
  const double eta = config.eta;
  const double omega_max = config.omega_max;

  SineModeProtocol pulse(t_f, 1, 0);
  pulse.theta_x[0] = omega_max;

  SineModeProtocol projected(t_f, 1, n_f);
  projected.theta_x[0] = omega_max;
  for (int l = 1; l <= n_f; ++l) {
    projected.theta_f[static_cast<std::size_t>(l - 1)] =
        (2.0 / t_f) * integrate_adaptive(
                          [=](double t) {
                            return std::sin(kPi * l * t / t_f) *
                                   recoil_compensated_force(eta, omega_max, t_f, t);
                          },
                          0.0, t_f);
  }

  Schedule exact(std::move(pulse),
                 [=](double t) { return recoil_compensated_force(eta, omega_max, t_f, t); },
                 "recoil-compensated");
  return {std::move(exact), std::move(projected)};
}

std::vector<double> first_order_force(std::span<const double> h_samples, double eta,
                                      double t_f) {
  if (h_samples.size() < 2) throw ConfigError("need at least two amplitude samples");
  if (!(t_f > 0.0)) throw ConfigError("t_f must be positive");
  for (double h : h_samples) {
    if (!(h >= 0.0) || !std::isfinite(h)) {
      throw ConfigError("amplitude samples must be finite and non-negative");
    }
  }
  const double dt = t_f / static_cast<double>(h_samples.size() - 1);
  std::vector<double> force(h_samples.size());
  double area = 0.0;
  for (std::size_t k = 0; k < h_samples.size(); ++k) {
    if (k > 0) area += 0.5 * dt * (h_samples[k - 1] + h_samples[k]);
    force[k] = -0.5 * eta * h_samples[k] * std::sin(area);
  }
  return force;
}

std::vector<double> project_on_sine_modes(std::span<const double> samples, double t_f, int n) {
  if (samples.size() < 2) throw ConfigError("need at least two samples");
  const double dt = t_f / static_cast<double>(samples.size() - 1);
  std::vector<double> integrand(samples.size());
  std::vector<double> coefficients(static_cast<std::size_t>(std::max(n, 0)));
  for (int l = 1; l <= n; ++l) {
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const double s = static_cast<double>(k) / static_cast<double>(samples.size() - 1);
      integrand[k] = std::sin(kPi * l * s) * samples[k];
    }
    coefficients[static_cast<std::size_t>(l - 1)] = 2.0 / t_f * integrate_uniform(integrand, dt);
  }
  return coefficients;
}

std::vector<double> projected_force(std::span<const double> h_samples, double eta, double t_f,
                                    int n_f) {
  if (h_samples.empty()) throw ConfigError("amplitude samples must not be empty");
  const auto force = first_order_force(h_samples, eta, t_f);
  return project_on_sine_modes(force, t_f, n_f);
}

std::vector<double> sample_amplitude(const SineModeProtocol& protocol, int count) {
  if (count < 2) throw ConfigError("need at least two sample points");
  std::vector<double> amplitude(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(count - 1);
    amplitude[static_cast<std::size_t>(k)] =
        std::hypot(series_at_fraction(protocol.theta_x, s), series_at_fraction(protocol.theta_y, s));
  }
  return amplitude;
}

double pulse_area(const SineModeProtocol& protocol) {
  protocol.validate();
  return integrate_adaptive([&](double t) { return std::abs(protocol.rabi(t)); }, 0.0,
                            protocol.t_f);
}

double normalized_impulse(const SineModeProtocol& protocol) {
  double j = 0.0;
  for (std::size_t l = 1; l <= protocol.theta_f.size(); l += 2) {
    j += protocol.theta_f[l - 1] * 2.0 * protocol.t_f / (kPi * static_cast<double>(l));
  }
  return j;
}

double normalized_impulse(const Schedule& schedule) {
  return integrate_adaptive([&](double t) { return schedule.force(t); }, 0.0,
                            schedule.duration());
}

SineModeProtocol rotate_phase(const SineModeProtocol& protocol, double phi) {
  SineModeProtocol rotated = protocol;
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  for (std::size_t l = 0; l < protocol.theta_x.size(); ++l) {
    rotated.theta_x[l] = c * protocol.theta_x[l] - s * protocol.theta_y[l];
    rotated.theta_y[l] = s * protocol.theta_x[l] + c * protocol.theta_y[l];
  }
  return rotated;
}

ConstraintReport check_constraints(const SineModeProtocol& protocol, const ModelConfig& config) {
  ConstraintReport report;
  const double amplitude_bound = config.omega_max * (1.0 + 1e-12);
  for (int j = 0; j <= kConstraintIntervals; ++j) {
    const double s = static_cast<double>(j) / kConstraintIntervals;
    const double amplitude = std::hypot(series_at_fraction(protocol.theta_x, s),
                                        series_at_fraction(protocol.theta_y, s));
    const double velocity = std::abs(derivative_at_fraction(protocol.theta_f, s, protocol.t_f));
    report.worst_amplitude = std::max(report.worst_amplitude, amplitude);
    report.worst_velocity = std::max(report.worst_velocity, velocity);
    const bool amplitude_violated = amplitude > amplitude_bound;
    const bool velocity_violated = !(velocity < config.v_max_dimless);
    if (amplitude_violated) report.amplitude_ok = false;
    if (velocity_violated) report.velocity_ok = false;
    if (amplitude_violated || velocity_violated) report.violating_times.push_back(s * protocol.t_f);
  }
  return report;
}

bool satisfies_constraints(const SineModeProtocol& protocol, const ModelConfig& config) {
  const double amplitude_bound = config.omega_max * (1.0 + 1e-12);
  for (int j = 0; j <= kConstraintIntervals; ++j) {
    const double s = static_cast<double>(j) / kConstraintIntervals;
    if (std::hypot(series_at_fraction(protocol.theta_x, s),
                   series_at_fraction(protocol.theta_y, s)) > amplitude_bound) {
      return false;
    }
    if (!(std::abs(derivative_at_fraction(protocol.theta_f, s, protocol.t_f)) <
          config.v_max_dimless)) {
      return false;
    }
  }
  return true;
}

}  // namespace recoilfree
