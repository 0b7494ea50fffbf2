#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "phonon_forge/error.hpp"
#include "phonon_forge/random.hpp"
#include "phonon_forge/spectrum_fit.hpp"

using namespace phonon_forge;

TEST(SpectrumFit, ExactDiscreteLorentzian) {
    const double dt = 1e-9, gamma = 2.0 * std::numbers::pi * 5.5e6;
    const double phi = std::exp(-gamma * dt);
    Periodogram pg;
    const std::size_t n = 16384;
    for (std::size_t i = 0; i < n; ++i) {
        const double k = i < n / 2 ? double(i) : double(i) - double(n);
        const double f = k / (n * dt);
        pg.freqs.push_back(f);
        pg.psd.push_back(3.0 * (1.0 - phi * phi) / (1.0 + phi * phi - 2.0 * phi * std::cos(2.0 * std::numbers::pi * f * dt)));
    }
    const auto fit = fit_lorentzian(pg, dt);
    EXPECT_NEAR(fit.gamma / gamma, 1.0, 1e-9);
    EXPECT_GT(fit.bins_used, 100u);
}

TEST(SpectrumFit, WelchWhiteNoiseLevel) {
    Rng rng(4);
    std::vector<std::complex<double>> x(1 << 18);
    for (auto& v : x) v = rng.complex_normal();
    const double dt = 2e-9;
    const auto pg = welch_psd(x, 1024, dt);
    double mean = 0.0;
    for (double s : pg.psd) mean += s;
    EXPECT_NEAR(mean / pg.psd.size() / dt, 1.0, 0.01);
    EXPECT_EQ(pg.segments, (x.size() - 1024) / 512 + 1);
    EXPECT_THROW(welch_psd(std::span(x).first(100), 1024, dt), DomainError);
}

TEST(SpectrumFit, SimulatedLinewidthAndG0) {
    const auto p = SystemParams::reference_device();
    SpectrumSimConfig cfg;
    const double G = pump_coupling(p);
    const auto one = simulate_and_fit(p, G, cfg);
    EXPECT_NEAR(one.gamma / effective_linewidth(p, cooperativity(p, G)), 1.0, 0.02);
    const double powers[] = {3e-3, 4.5e-3, 6e-3, 7.5e-3, 9e-3};
    const auto g = fit_g0(p, powers, cfg, 0);
    EXPECT_NEAR(g.g0 / p.g0, 1.0, 0.05);
    EXPECT_NEAR(g.gamma / p.gamma, 1.0, 0.05);
}
