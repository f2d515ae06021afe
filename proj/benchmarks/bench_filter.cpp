#include <benchmark/benchmark.h>

#include "dpmag/experiments.hpp"
#include "dpmag/filter.hpp"
#include "dpmag/kernels.hpp"
#include "dpmag/spin.hpp"
#include "dpmag/trajectory.hpp"

using namespace dpmag;

namespace {

FilterParams fig2_params() { return FilterParams::make(0.1, 1.0, 1.0, 1e-4, 1.0, 1e-3); }

void BM_KrausVectorStep(benchmark::State& state) {
  const SpinOperators ops = build_spin_operators(SpinQuantum(static_cast<double>(state.range(0))));
  StateVector psi = coherent_state_vector_x(ops);
  const FilterParams p = fig2_params();
  for (auto _ : state) {
    psi = kraus_step(psi, ops, p, 1e-3);
    benchmark::DoNotOptimize(psi.psi.data());
  }
}
BENCHMARK(BM_KrausVectorStep)->Arg(10)->Arg(50)->Arg(100)->Arg(200);

void BM_KrausDensityStep(benchmark::State& state) {
  const SpinOperators ops = build_spin_operators(SpinQuantum(static_cast<double>(state.range(0))));
  DensityMatrix rho = coherent_state_x(ops);
  const FilterParams p = fig2_params();
  for (auto _ : state) {
    rho = kraus_step(rho, ops, p, 1e-3);
    benchmark::DoNotOptimize(rho.rho.data());
  }
}
BENCHMARK(BM_KrausDensityStep)->Arg(10)->Arg(50)->Arg(100);

void BM_EulerStep(benchmark::State& state) {
  const SpinOperators ops = build_spin_operators(SpinQuantum(static_cast<double>(state.range(0))));
  const DensityMatrix rho = coherent_state_x(ops);
  const FilterParams p = fig2_params();
  const bool check = state.range(1) != 0;
  for (auto _ : state) {
    EulerStepResult r = euler_step(rho, ops, p, 1e-3, check);
    benchmark::DoNotOptimize(r.state.rho.data());
  }
}
BENCHMARK(BM_EulerStep)->Args({10, 0})->Args({10, 1})->Args({50, 0})->Args({50, 1});

void BM_FyRotation(benchmark::State& state) {
  const SpinOperators ops = build_spin_operators(SpinQuantum(static_cast<double>(state.range(0))));
  const StateVector psi = coherent_state_vector_x(ops);
  for (auto _ : state) {
    Vector v = kernels::fy_rotation(ops, 1e-4, psi.psi);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_FyRotation)->Arg(10)->Arg(100)->Arg(1000);

void BM_FzDissipator(benchmark::State& state) {
  const SpinOperators ops = build_spin_operators(SpinQuantum(static_cast<double>(state.range(0))));
  const DensityMatrix rho = coherent_state_x(ops);
  for (auto _ : state) {
    Matrix d = kernels::fz_dissipator(ops, rho.rho);
    benchmark::DoNotOptimize(d.data());
  }
}
BENCHMARK(BM_FzDissipator)->Arg(10)->Arg(100);

void BM_CoupledTriple(benchmark::State& state) {
  const SpinOperators ops = build_spin_operators(SpinQuantum(static_cast<double>(state.range(0))));
  const InitialState rho0(coherent_state_vector_x(ops));
  const FilterParams p = fig2_params();
  EngineOptions opt;
  opt.series_stride = 0;
  std::uint64_t stream = 0;
  for (auto _ : state) {
    TripleOutput t = coupled_triple(rho0, ops, p, 1e-6, NoiseSource{1, stream++},
                                    NoiseSharing::shared_innovations, opt);
    benchmark::DoNotOptimize(t.dB);
  }
}
BENCHMARK(BM_CoupledTriple)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
