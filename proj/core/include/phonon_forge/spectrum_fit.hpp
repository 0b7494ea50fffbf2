#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "phonon_forge/dynamics.hpp"

namespace phonon_forge {

// Two-sided Welch estimate with a Hann window and 50% overlap. Bins follow
// FFT order; density units are |x|^2 per Hz.
struct Periodogram {
    std::vector<double> freqs;  // Hz
    std::vector<double> psd;
    std::size_t segments = 0;
};
Periodogram welch_psd(std::span<const std::complex<double>> x, std::size_t segment, double sample_period);

struct LorentzianFit {
    double gamma = 0.0;  // amplitude decay rate (rad/s) = HWHM in angular frequency
    double amplitude = 0.0;
    std::size_t bins_used = 0;
};
// Fits 1/S = a + b x with x = 2 (1 - cos(w dt)) / dt^2, the exact inverse
// spectrum of a sampled Ornstein-Uhlenbeck process, over |f| < window
// half-widths of a first half-maximum estimate. Weighted least squares with
// weights from the fitted model.
LorentzianFit fit_lorentzian(const Periodogram& pg, double sample_period, double window = 5.0);

struct SpectrumSimConfig {
    double sample_period = 1e-9;
    std::size_t segment = 16384;
    std::size_t segments = 1024;
    FieldModel model = FieldModel::adiabatic;
    std::uint64_t seed = 1;
};

// Complex anti-Stokes amplitude at baseband, sampled and fitted.
LorentzianFit simulate_and_fit(const SystemParams& p, double G, const SpectrumSimConfig& cfg);

struct G0Fit {
    std::vector<double> n_cav;
    std::vector<double> gamma_eff;  // fitted, rad/s
    double g0 = 0.0;                // rad/s
    double gamma = 0.0;             // intercept, rad/s
};

// Linewidth at each pump power, then gamma_eff = gamma + (g0^2 / kappa2) N_cav.
G0Fit fit_g0(const SystemParams& p, std::span<const double> powers, const SpectrumSimConfig& cfg,
             unsigned threads = 0);

}  // namespace phonon_forge
