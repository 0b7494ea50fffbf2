#include "phonon_forge/demodulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "phonon_forge/error.hpp"

namespace phonon_forge {

const char* to_string(DemodFilter filter) {
    return filter == DemodFilter::boxcar ? "boxcar" : "butterworth4";
}

DemodFilter demod_filter_from_string(const char* name) {
    if (std::strcmp(name, "butterworth4") == 0) return DemodFilter::butterworth4;
    if (std::strcmp(name, "boxcar") == 0) return DemodFilter::boxcar;
    throw ConfigError(std::string("unknown demodulation filter '") + name +
                      "' (expected butterworth4 or boxcar)");
}

void DemodConfig::validate() const {
    if (!(sample_rate > 0.0)) throw ConfigError("sample_rate must be > 0");
    if (!(f_het > 0.0)) throw ConfigError("heterodyne frequency must be > 0");
    if (!(bandwidth > 0.0)) throw ConfigError("demod_bandwidth must be > 0");
    if (!(bandwidth < f_het))
        throw ConfigError("demod_bandwidth " + std::to_string(bandwidth) +
                          " Hz must be below the heterodyne frequency " + std::to_string(f_het) + " Hz");
    if (!(bandwidth < 0.5 * sample_rate)) throw ConfigError("demod_bandwidth must be below Nyquist");
    if (decimation < 1) throw ConfigError("decimation must be >= 1");
}

Demodulator::Demodulator(const DemodConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.filter == DemodFilter::butterworth4) {
        // two RBJ low-pass sections with the 4th-order Butterworth Q values
        const double w0 = 2.0 * std::numbers::pi * cfg_.bandwidth / cfg_.sample_rate;
        const double cw = std::cos(w0);
        for (int k = 0; k < 2; ++k) {
            const double q = 1.0 / (2.0 * std::sin((2 * k + 1) * std::numbers::pi / 8.0));
            const double alpha = std::sin(w0) / (2.0 * q);
            const double a0 = 1.0 + alpha;
            sections_.push_back({(1.0 - cw) / 2.0 / a0, (1.0 - cw) / a0, (1.0 - cw) / 2.0 / a0,
                                 -2.0 * cw / a0, (1.0 - alpha) / a0});
        }
        // impulse response of the forward-backward cascade
        const std::size_t n = 8192;
        std::vector<std::complex<double>> imp(n);
        imp[n / 2] = 1.0;
        lowpass(imp);
        noise_gain_ = 0.0;
        for (const auto& x : imp) noise_gain_ += std::norm(x);
    } else {
        // first null of the boxcar at ~2.26 bandwidth, -3 dB near bandwidth
        const double len = 0.443 * cfg_.sample_rate / cfg_.bandwidth;
        boxcar_len_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(len)) | 1U);
        noise_gain_ = 1.0 / static_cast<double>(boxcar_len_);
    }
}

void Demodulator::lowpass(std::vector<std::complex<double>>& x) const {
    if (cfg_.filter == DemodFilter::boxcar) {
        const std::size_t n = x.size();
        const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(boxcar_len_ / 2);
        std::vector<std::complex<double>> prefix(n + 1);
        for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
        const double inv = 1.0 / static_cast<double>(boxcar_len_);
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n), i + half + 1);
            x[i] = (prefix[hi] - prefix[lo]) * inv;
        }
        return;
    }
    auto pass = [&](auto begin, auto end) {
        for (const auto& s : sections_) {
            std::complex<double> z1 = 0.0, z2 = 0.0;  // transposed direct form II
            for (auto it = begin; it != end; ++it) {
                const std::complex<double> in = *it;
                const std::complex<double> out = s.b0 * in + z1;
                z1 = s.b1 * in - s.a1 * out + z2;
                z2 = s.b2 * in - s.a2 * out;
                *it = out;
            }
        }
    };
    pass(x.begin(), x.end());
    pass(x.rbegin(), x.rend());
}

std::vector<std::complex<double>> Demodulator::baseband(std::span<const double> v) const {
    std::vector<std::complex<double>> z(v.size());
    const double dphi = 2.0 * std::numbers::pi * cfg_.f_het / cfg_.sample_rate;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double ph = dphi * static_cast<double>(k);
        z[k] = 2.0 * v[k] * std::complex<double>(std::cos(ph), -std::sin(ph));
    }
    lowpass(z);
    return z;
}

std::vector<std::complex<double>> Demodulator::demodulate(std::span<const double> v) const {
    const auto z = baseband(v);
    const std::size_t d = static_cast<std::size_t>(cfg_.decimation);
    std::vector<std::complex<double>> out;
    out.reserve(z.size() / d + 1);
    for (std::size_t k = 0; k < z.size(); k += d) out.push_back(z[k]);
    return out;
}

}  // namespace phonon_forge
