#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "phonon_forge/convolution.hpp"
#include "phonon_forge/phase_space.hpp"
#include "phonon_forge/phonon_statistics.hpp"

using namespace phonon_forge;

namespace {

std::vector<double> gaussian_field(std::size_t n, double width) {
    std::vector<double> f(n * n);
    const double c = 0.5 * static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double x = (static_cast<double>(i) - c) / width, y = (static_cast<double>(j) - c) / width;
            f[i * n + j] = std::exp(-0.5 * (x * x + y * y));
        }
    return f;
}

}  // namespace

static void BM_ConvolveFft(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto f = gaussian_field(n, n / 8.0);
    const auto k = gaussian_field(2 * n - 1, n / 16.0);
    for (auto _ : state) benchmark::DoNotOptimize(convolve_same(f, k, n));
}
BENCHMARK(BM_ConvolveFft)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond);

static void BM_ConvolveDirect(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto f = gaussian_field(n, n / 8.0);
    const auto k = gaussian_field(2 * n - 1, n / 16.0);
    for (auto _ : state) benchmark::DoNotOptimize(convolve_same_direct(f, k, n));
}
BENCHMARK(BM_ConvolveDirect)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_WignerGrid(benchmark::State& state) {
    const StateSpec spec{453.0, static_cast<int>(state.range(1)), 0.0091};
    GridConfig cfg;
    cfg.npts = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(wigner_s(spec, cfg));
}
BENCHMARK(BM_WignerGrid)->Args({257, 1})->Args({513, 1})->Args({513, 2})->Unit(benchmark::kMillisecond);

static void BM_WignerClosedForm(benchmark::State& state) {
    const StateSpec spec{453.0, 2, 0.0091};
    const double s = s_from_eta(spec.eta);
    double x = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(wigner_s_value(spec, Units::zero_point, s, x, 3.0));
        x += 1e-3;
    }
}
BENCHMARK(BM_WignerClosedForm);

static void BM_FockOracle(benchmark::State& state) {
    const ThermalSpec th(20.0);
    const auto m_max = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(fock_oracle(th, 2, LadderKind::subtract, m_max));
}
BENCHMARK(BM_FockOracle)->Arg(800)->Arg(1200)->Unit(benchmark::kMillisecond);
