#include "bundlesim/evolution.hpp"
#include "bundlesim/trajectories.hpp"

#include <benchmark/benchmark.h>

using namespace bundlesim;

namespace {

SystemParams resonant() {
  SystemParams p;
  p.omega_L = 7.0484;
  return p;
}

void BM_Diagonalize(benchmark::State& state) {
  SystemParams p;
  p.n_max = static_cast<int>(state.range(0));
  const OperatorMatrix h = build_rabi_hamiltonian(p);
  const OperatorMatrix parity = build_parity_operator(p.n_max);
  for (auto _ : state) benchmark::DoNotOptimize(diagonalize(h, parity));
}
BENCHMARK(BM_Diagonalize)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_KetPeriodMap(benchmark::State& state) {
  const DrivenModel m = DrivenModel::build(resonant());
  for (auto _ : state) benchmark::DoNotOptimize(KetPropagator(m, true).period_map());
}
BENCHMARK(BM_KetPeriodMap)->Unit(benchmark::kMillisecond);

void BM_DensityPeriodMap(benchmark::State& state) {
  const DrivenModel m = DrivenModel::build(resonant());
  for (auto _ : state) benchmark::DoNotOptimize(DensityPropagator(m).period_map());
}
BENCHMARK(BM_DensityPeriodMap)->Unit(benchmark::kMillisecond);

void BM_SteadyState(benchmark::State& state) {
  const DrivenModel m = DrivenModel::build(resonant());
  const DensityPropagator prop(m);
  for (auto _ : state) benchmark::DoNotOptimize(periodic_steady_state(m, prop).xx_mean);
}
BENCHMARK(BM_SteadyState)->Unit(benchmark::kMillisecond);

void BM_Trajectory(benchmark::State& state) {
  SystemParams p = resonant();
  p.kappa = 1e-2;
  const DrivenModel m = DrivenModel::build(p);
  const KetPropagator prop(m, true);
  TrajectoryOptions o;
  o.record_populations = false;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mcwf_run(m, prop, seed++, static_cast<double>(state.range(0)), 1.0, o).clicks.size());
  }
}
BENCHMARK(BM_Trajectory)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
