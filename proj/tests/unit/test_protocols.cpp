#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "recoilfree/protocols.hpp"

using namespace recoilfree;

namespace {

constexpr double kPi = std::numbers::pi;

SineModeProtocol random_protocol(unsigned seed, double t_f, int n_omega, int n_f, double scale) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  SineModeProtocol p(t_f, n_omega, n_f);
  for (auto* c : {&p.theta_x, &p.theta_y, &p.theta_f}) {
    for (auto& v : *c) v = u(gen);
  }
  return p;
}

// Direct evaluation with one sine call per mode.
double naive_series(const std::vector<double>& c, double t, double t_f) {
  double s = 0.0;
  for (std::size_t l = 0; l < c.size(); ++l) s += c[l] * std::sin(kPi * (l + 1.0) * t / t_f);
  return s;
}

}  // namespace

TEST(SineMode, SeriesMatchesDirectEvaluation) {
  const auto p = random_protocol(3, 2.7, 18, 3, 1.0);
  for (int k = 0; k <= 200; ++k) {
    const double t = p.t_f * k / 200.0;
    const auto s = p.sample(t);
    EXPECT_NEAR(s.h_x, naive_series(p.theta_x, t, p.t_f), 1e-12);
    EXPECT_NEAR(s.h_y, naive_series(p.theta_y, t, p.t_f), 1e-12);
    EXPECT_NEAR(s.f_tw, naive_series(p.theta_f, t, p.t_f), 1e-12);
    EXPECT_NEAR(sine_series(p.theta_x, t, p.t_f), s.h_x, 1e-15);
  }
}

TEST(SineMode, AmplitudesVanishAtEndpoints) {
  const auto p = random_protocol(5, 1.3, 18, 3, 2.0);
  for (double t : {0.0, p.t_f}) {
    const auto s = p.sample(t);
    EXPECT_NEAR(s.h_x, 0.0, 1e-12);
    EXPECT_NEAR(s.h_y, 0.0, 1e-12);
    EXPECT_NEAR(s.f_tw, 0.0, 1e-12);
  }
}

TEST(SineMode, SampleRejectsTimesOutsidePulse) {
  const auto p = random_protocol(1, 1.0, 2, 1, 1.0);
  EXPECT_THROW(p.sample(-1e-6), std::out_of_range);
  EXPECT_THROW(p.sample(1.0 + 1e-6), std::out_of_range);
  EXPECT_NO_THROW(p.sample(1.0));
}

TEST(SineMode, ForceRateMatchesFiniteDifference) {
  const auto p = random_protocol(9, 0.8, 4, 3, 1.0);
  for (double t : {0.1, 0.33, 0.61}) {
    const double h = 1e-6;
    const double fd = (p.sample(t + h).f_tw - p.sample(t - h).f_tw) / (2 * h);
    EXPECT_NEAR(p.force_rate(t), fd, 1e-6);
  }
}

TEST(SineMode, ValidateCatchesBadInput) {
  SineModeProtocol p(1.0, 3, 1);
  EXPECT_NO_THROW(p.validate());
  p.theta_y.pop_back();
  EXPECT_THROW(p.validate(), ConfigError);
  p = SineModeProtocol(0.0, 3, 1);
  EXPECT_THROW(p.validate(), ConfigError);
  p = SineModeProtocol(1.0, 3, 1);
  p.theta_f[0] = std::nan("");
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_THROW(Schedule{p}, ConfigError);
}

TEST(Rabi, SinePulseHasAreaPi) {
  for (double omega : {0.01, 0.428, 1.0, 20.0, 200.0}) {
    const auto p = rabi_protocol(omega);
    EXPECT_DOUBLE_EQ(p.t_f, kPi * kPi / (2 * omega));
    EXPECT_NEAR(pulse_area(p), kPi, 1e-10);
    EXPECT_NEAR(std::abs(p.rabi(p.t_f / 2)), omega, 1e-12 * omega);
    EXPECT_EQ(p.n_f(), 0);
  }
}

TEST(RecoilCompensated, DurationStretchesOnlyBelowTrapFrequency) {
  ModelConfig config;
  config.omega_max = 0.5;
  EXPECT_DOUBLE_EQ(recoil_compensated_duration(config),
                   kPi * kPi / (2 * 0.5) * std::exp(config.eta * config.eta / 2));
  config.omega_max = 1.0;
  EXPECT_DOUBLE_EQ(recoil_compensated_duration(config), kPi * kPi / 2);
  config.omega_max = 20.0;
  EXPECT_DOUBLE_EQ(recoil_compensated_duration(config), kPi * kPi / 40);
}

// Substituting u = pi sin^2(pi t / 2 t_f) turns the impulse integral into
// -(2 eta Omega t_f / pi^2) int_0^pi sin u du / 2 = -2 eta Omega t_f / pi^2.
TEST(RecoilCompensated, ImpulseMatchesSubstitutionClosedForm) {
  const double eta = 0.505;
  for (double omega : {2.0, 20.0, 200.0}) {
    const double t_f = kPi * kPi / (2 * omega);
    SineModeProtocol carrier = rabi_protocol(omega);
    const Schedule schedule(carrier,
                            [=](double t) { return recoil_compensated_force(eta, omega, t_f, t); },
                            "exact");
    EXPECT_NEAR(normalized_impulse(schedule), -eta, 1e-10);
    EXPECT_NEAR(normalized_impulse(schedule), -2 * eta * omega * t_f / (kPi * kPi), 1e-10);
  }
}

TEST(RecoilCompensated, ExactCurveIsFirstOrderForceOfSinePulse) {
  const double eta = 0.505;
  const double omega = 20.0;
  const auto pulse = rabi_protocol(omega);
  const int count = 4001;
  const auto h = sample_amplitude(pulse, count);
  const auto force = first_order_force(h, eta, pulse.t_f);
  for (int k = 0; k < count; k += 200) {
    const double t = pulse.t_f * k / (count - 1.0);
    EXPECT_NEAR(force[k], recoil_compensated_force(eta, omega, pulse.t_f, t), 1e-5 * eta * omega);
  }
}

TEST(RecoilCompensated, ProtocolCarriesProjectedForce) {
  ModelConfig config;
  config.omega_max = 20.0;
  const auto rc = recoil_compensated_protocol(config, 3);
  EXPECT_TRUE(rc.exact.has_force_curve());
  EXPECT_EQ(rc.projected.n_f(), 3);
  EXPECT_EQ(rc.projected.theta_x, rabi_protocol(20.0).theta_x);
  // The curve is symmetric about t_f / 2, so even modes drop out.
  EXPECT_NEAR(rc.projected.theta_f[1], 0.0, 1e-9);
  // Projecting onto three modes keeps most of the impulse.
  EXPECT_NEAR(normalized_impulse(rc.projected), -config.eta, 0.05 * config.eta);
}

TEST(Projection, RecoversSineCoefficients) {
  const double t_f = 3.0;
  const std::vector<double> theta{0.4, -1.2, 0.25, 0.0, 0.7};
  const int count = 2001;
  std::vector<double> samples(count);
  for (int k = 0; k < count; ++k) samples[k] = naive_series(theta, t_f * k / (count - 1.0), t_f);
  const auto projected = project_on_sine_modes(samples, t_f, 5);
  for (int l = 0; l < 5; ++l) EXPECT_NEAR(projected[l], theta[l], 1e-10);
}

TEST(Projection, RejectsEmptyOrNegativeAmplitude) {
  EXPECT_THROW(projected_force(std::vector<double>{}, 0.5, 1.0, 3), ConfigError);
  EXPECT_THROW(projected_force(std::vector<double>{0.0, -1.0, 0.0}, 0.5, 1.0, 3), ConfigError);
}

TEST(Impulse, ClosedFormMatchesQuadrature) {
  const auto p = random_protocol(11, 1.7, 3, 5, 1.0);
  EXPECT_NEAR(normalized_impulse(p), normalized_impulse(Schedule(p)), 1e-12);
  SineModeProtocol zero(1.0, 2, 3);
  EXPECT_EQ(normalized_impulse(zero), 0.0);
}

TEST(Phase, RotationPreservesModulus) {
  const auto p = random_protocol(4, 2.0, 6, 1, 1.0);
  const auto q = rotate_phase(p, 0.83);
  for (double t : {0.2, 0.9, 1.5}) {
    EXPECT_NEAR(std::abs(q.rabi(t)), std::abs(p.rabi(t)), 1e-13);
    EXPECT_NEAR(std::arg(q.rabi(t) / p.rabi(t)), 0.83, 1e-12);
  }
  EXPECT_EQ(q.theta_f, p.theta_f);
}

TEST(Constraints, AcceptSinePulseAndFlagViolations) {
  ModelConfig config;
  config.omega_max = 1.0;
  auto p = rabi_protocol(1.0);
  EXPECT_TRUE(check_constraints(p, config).ok());
  EXPECT_TRUE(satisfies_constraints(p, config));

  auto loud = p;
  loud.theta_x[0] *= 1.01;
  const auto report = check_constraints(loud, config);
  EXPECT_FALSE(report.amplitude_ok);
  EXPECT_TRUE(report.velocity_ok);
  EXPECT_NEAR(report.worst_amplitude, 1.01, 1e-12);
  EXPECT_FALSE(report.violating_times.empty());
  EXPECT_FALSE(satisfies_constraints(loud, config));

  auto fast = p;
  fast.theta_f = {config.v_max_dimless * p.t_f / kPi * 1.001};
  const auto velocity = check_constraints(fast, config);
  EXPECT_TRUE(velocity.amplitude_ok);
  EXPECT_FALSE(velocity.velocity_ok);
  EXPECT_FALSE(satisfies_constraints(fast, config));
}

TEST(Constraints, CheckerAndFastPathAgree) {
  ModelConfig config;
  config.omega_max = 0.7;
  for (unsigned seed = 0; seed < 200; ++seed) {
    const auto p = random_protocol(seed, 4.0, 5, 2, 0.35);
    EXPECT_EQ(check_constraints(p, config).ok(), satisfies_constraints(p, config)) << seed;
  }
}

TEST(Schedule, ForceScaleFlipsOnlyTheForce) {
  ModelConfig config;
  config.omega_max = 20.0;
  const auto rc = recoil_compensated_protocol(config);
  const auto flipped = rc.exact.with_force_scale(-1.0);
  for (double t : {0.01, 0.1, 0.2}) {
    EXPECT_DOUBLE_EQ(flipped.at(t).f_tw, -rc.exact.at(t).f_tw);
    EXPECT_DOUBLE_EQ(flipped.at(t).h_x, rc.exact.at(t).h_x);
  }
  EXPECT_EQ(flipped.force_scale(), -1.0);
}
