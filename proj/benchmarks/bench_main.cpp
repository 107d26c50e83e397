#include "spc/ensemble.hpp"
#include "spc/mode_dynamics.hpp"
#include "spc/msa.hpp"
#include "spc/noise.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace spc;

namespace {

NoiseSpec ou()
{
    NoiseSpec s;
    s.kind = NoiseKind::OrnsteinUhlenbeck;
    s.sigma = 1.0;
    s.t_c = 0.5;
    return s;
}

NoiseSpec band(int components)
{
    NoiseSpec s;
    s.kind = NoiseKind::BandLimited;
    s.nu_min = 8.5;
    s.nu_max = 10.5;
    s.n_components = components;
    return s;
}

CavityConfig quasi_1d(int nz_max)
{
    return CavityConfig{1e6, 1e6, 1.0, 0.02, 1, 1, nz_max};
}

void BM_SynthesizeOu(benchmark::State& state)
{
    const double horizon = static_cast<double>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(synthesize(ou(), ++seed, horizon));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(horizon / ou_grid_step(ou())));
}
BENCHMARK(BM_SynthesizeOu)->Arg(100)->Arg(2000);

void BM_TabulateLines(benchmark::State& state)
{
    const auto real = synthesize(band(static_cast<int>(state.range(0))), 1, 200.0);
    constexpr std::size_t count = 100000;
    for (auto _ : state) {
        benchmark::DoNotOptimize(tabulate(real, 1e-3, count));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(count));
}
BENCHMARK(BM_TabulateLines)->Arg(64)->Arg(256);

void BM_Rk4Step(benchmark::State& state)
{
    const ModeSystem sys = all_in_modes(quasi_1d(static_cast<int>(state.range(0))));
    const ModeEquations eq(sys, IntegrationPath::Linearized);
    const auto real = synthesize(band(64), 1, 20.0);
    constexpr double dt = 1e-3;
    const NoiseSamples table = tabulate(real, dt / 2.0, 2 * 10000 + 1);
    Rk4Stepper stepper(eq, table, dt);
    const Window w{};
    for (auto _ : state) {
        auto x = eq.initial_state();
        for (std::size_t i = 0; i < 10000; ++i) {
            stepper.step(x, i, w);
        }
        benchmark::DoNotOptimize(x.data());
    }
    state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_Rk4Step)->Arg(1)->Arg(3)->Arg(8);

void BM_EnsembleOscillator(benchmark::State& state)
{
    EnsembleConfig e;
    e.n_realizations = static_cast<std::size_t>(state.range(0));
    e.workers = 1;
    e.probes = {100.0, 200.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_ensemble(e, plain_oscillator(1.0, 0.05), ou(), {}));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EnsembleOscillator)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SlowFlow(benchmark::State& state)
{
    const CavityConfig c = quasi_1d(static_cast<int>(state.range(0)));
    const std::vector<double> grid{20.0, 40.0, 60.0};
    const std::vector<int> in{1};
    for (auto _ : state) {
        const auto rates = msa::slow_flow_rates(c, band(64));
        benchmark::DoNotOptimize(msa::mean_particle_number(rates, c, in, grid));
    }
}
BENCHMARK(BM_SlowFlow)->Arg(3)->Arg(10);

} // namespace

BENCHMARK_MAIN();
