#pragma once

#include <complex>
#include <span>
#include <vector>

namespace phonon_forge {

enum class DemodFilter { butterworth4, boxcar };

const char* to_string(DemodFilter filter);
DemodFilter demod_filter_from_string(const char* name);

struct DemodConfig {
    double sample_rate = 3.125e9;  // Hz
    double f_het = 214e6;          // Hz
    double bandwidth = 100e6;      // Hz, low-pass cutoff
    DemodFilter filter = DemodFilter::butterworth4;
    int decimation = 4;

    void validate() const;
};

// Complex mixing at f_het, zero-phase low-pass and decimation. A trace
// v = Re[u e^{i w t}] + white noise demodulates to u; the output is scaled so
// that white noise of variance noise_variance() per sample gives unit variance
// in each quadrature.
class Demodulator {
public:
    explicit Demodulator(const DemodConfig& cfg);

    const DemodConfig& config() const noexcept { return cfg_; }

    // Sum of squared taps of the effective (forward-backward) filter.
    double noise_gain() const noexcept { return noise_gain_; }
    double noise_variance() const noexcept { return 0.5 / noise_gain_; }

    // Full-rate baseband signal; t = 0 at v[0].
    std::vector<std::complex<double>> baseband(std::span<const double> v) const;

    // Every decimation-th baseband sample starting at v[0].
    std::vector<std::complex<double>> demodulate(std::span<const double> v) const;

    // Zero-phase low-pass applied in place.
    void lowpass(std::vector<std::complex<double>>& x) const;

private:
    struct Biquad {
        double b0, b1, b2, a1, a2;
    };

    DemodConfig cfg_;
    std::vector<Biquad> sections_;
    std::size_t boxcar_len_ = 1;
    double noise_gain_ = 1.0;
};

}  // namespace phonon_forge
