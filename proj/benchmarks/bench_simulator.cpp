#include <benchmark/benchmark.h>

#include <vector>

#include "phonon_forge/demodulation.hpp"
#include "phonon_forge/field_process.hpp"
#include "phonon_forge/random.hpp"
#include "phonon_forge/trace_simulator.hpp"

using namespace phonon_forge;

static void BM_FieldSteps(benchmark::State& state) {
    const auto p = SystemParams::reference_device();
    const FieldProcess fp(p, pump_coupling(p), static_cast<FieldModel>(state.range(0)));
    const Transition tr = fp.forward(0.16e-9);
    Rng rng(7);
    FieldState x = fp.stationary(rng);
    for (auto _ : state) {
        for (int i = 0; i < 1000; ++i) x = tr.apply(x, rng);
        benchmark::DoNotOptimize(x);
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_FieldSteps)->DenseRange(0, 2);

static void BM_TransitionSetup(benchmark::State& state) {
    const auto p = SystemParams::reference_device();
    const FieldProcess fp(p, pump_coupling(p), FieldModel::coupled);
    const double h = state.range(0) == 0 ? 0.16e-9 : 20e-6;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fp.forward(h));
        benchmark::DoNotOptimize(fp.backward(h));
    }
}
BENCHMARK(BM_TransitionSetup)->Arg(0)->Arg(1);

static void BM_Demodulate(benchmark::State& state) {
    DemodConfig cfg;
    cfg.filter = static_cast<DemodFilter>(state.range(0));
    const Demodulator demod(cfg);
    Rng rng(3);
    std::vector<double> v(1506);
    for (auto& x : v) x = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(demod.demodulate(v));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(v.size()));
}
BENCHMARK(BM_Demodulate)->Arg(0)->Arg(1);

static void BM_Ensemble(benchmark::State& state) {
    SimConfig cfg;
    cfg.n_traces = 500;
    cfg.threads = 1;
    EnsembleOptions o;
    o.kind = static_cast<HeraldKind>(state.range(0));
    o.keep_traces = false;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_ensemble(cfg, o));
    state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_Ensemble)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

static void BM_ClickStream(benchmark::State& state) {
    SimConfig cfg;
    cfg.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_click_stream(cfg, 50000));
    state.SetItemsProcessed(state.iterations() * 50000);
}
BENCHMARK(BM_ClickStream)->Unit(benchmark::kMillisecond);
