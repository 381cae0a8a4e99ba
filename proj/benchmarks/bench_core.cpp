#include <numbers>

#include <benchmark/benchmark.h>

#include "recoilfree/pepr.hpp"

using namespace recoilfree;

namespace {

ModelConfig config_at(double omega_max) {
  ModelConfig config;
  config.omega_max = omega_max;
  return config;
}

// Full pulse, pure state (single-product fast path).
void BM_EvolveRabi(benchmark::State& state) {
  const double omega = static_cast<double>(state.range(0)) / 100.0;
  const Model model(config_at(omega));
  const Schedule schedule(rabi_protocol(omega));
  const auto rho0 = DensityOperator::initial(model.config());
  for (auto _ : state) benchmark::DoNotOptimize(evolve(model, schedule, rho0, 0.0, schedule.duration()));
}
BENCHMARK(BM_EvolveRabi)->Arg(43)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_EvolveDephasing(benchmark::State& state) {
  auto config = config_at(0.428);
  config.gamma_z = 1e-3;
  const Model model(config);
  const Schedule schedule(rabi_protocol(0.428));
  const auto rho0 = DensityOperator::initial(config);
  for (auto _ : state) benchmark::DoNotOptimize(evolve(model, schedule, rho0, 0.0, schedule.duration()));
}
BENCHMARK(BM_EvolveDephasing)->Unit(benchmark::kMillisecond);

void BM_Susceptibility(benchmark::State& state) {
  const auto config = config_at(0.428);
  const Model model(config);
  SineModeProtocol protocol(1.5 * std::numbers::pi / 0.428, 18, 3);
  protocol.theta_x[0] = 0.3;
  protocol.theta_f[0] = 0.1;
  const Schedule schedule(protocol);
  const double t_r = 0.4 * protocol.t_f;
  const Matrix rho = propagate(model, schedule, DensityOperator::initial(config).matrix(), 0.0, t_r);
  for (auto _ : state) benchmark::DoNotOptimize(susceptibility(model, schedule, Channel::F, t_r, rho));
}
BENCHMARK(BM_Susceptibility)->Unit(benchmark::kMillisecond);

// Cost per accepted PEPR update, amortized over a short run.
void BM_PeprIterations(benchmark::State& state) {
  const auto config = config_at(0.428);
  OptimizerHyperparams hyper;
  hyper.n_it = 100;
  hyper.eval_stride = 100;
  for (auto _ : state) benchmark::DoNotOptimize(optimize(config, 1.5 * std::numbers::pi / 0.428, hyper));
  state.SetItemsProcessed(state.iterations() * hyper.n_it);
}
BENCHMARK(BM_PeprIterations)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
