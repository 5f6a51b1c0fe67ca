#include "chiralpb/explore.hpp"
#include "chiralpb/lindblad.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace chiralpb;

namespace {

SweepGrid grid(int N, int L)
{
    SweepGrid g;
    g.n_cells = N;
    g.g = 0.8;
    g.detuning = {-0.8, 0.8, L};
    g.alpha = {0.001, 0.999, L};
    return g;
}

void BM_SweepSerial(benchmark::State& st)
{
    const SweepGrid g = grid(int(st.range(0)), 41);
    for (auto _ : st) benchmark::DoNotOptimize(sweep_serial(g, QG2));
    st.SetItemsProcessed(st.iterations() * std::int64_t(g.size()));
}

void BM_SweepParallel(benchmark::State& st)
{
    const SweepGrid g = grid(int(st.range(0)), 41);
    for (auto _ : st) benchmark::DoNotOptimize(sweep(g, QG2));
    st.SetItemsProcessed(st.iterations() * std::int64_t(g.size()));
    st.counters["threads"] = omp_get_max_threads();
}

void BM_SweepAllQuantities(benchmark::State& st)
{
    const SweepGrid g = grid(int(st.range(0)), 21);
    for (auto _ : st) benchmark::DoNotOptimize(sweep(g, QAll));
    st.SetItemsProcessed(st.iterations() * std::int64_t(g.size()));
}

void BM_Ensemble(benchmark::State& st)
{
    const SweepGrid g = grid(5, 11);
    const bool parallel = st.range(0) != 0;
    for (auto _ : st) benchmark::DoNotOptimize(disorder_ensemble(g, 0.1, 20, 1, parallel));
}

void BM_SteadyState(benchmark::State& st)
{
    SystemSpec s;
    s.n_cells = int(st.range(0));
    s.coupling_g = 0.8;
    s.kappa_r = 1.0 / 1.05;
    s.kappa_l = 0.05 / 1.05;
    s = validate_spec(s);
    const DriveFrame f = frame_at_detuning(s, 0.3, 1e-3);
    const Generator G = build_liouvillian(s, f, {3});
    for (auto _ : st) benchmark::DoNotOptimize(steady_state(G, SteadyMethod::NullSpace));
}

}  // namespace

BENCHMARK(BM_SweepSerial)->Arg(1)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Arg(1)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepAllQuantities)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ensemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SteadyState)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
