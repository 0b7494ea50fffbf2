#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <limits>

namespace phonon_forge {

// splitmix64 finalizer. Bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Counter-based seed derivation: every (master, stream, substream) triple maps to an
// independent-looking 64-bit seed, so work items can be seeded without shared state.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t substream = 0) noexcept;

// xoshiro256** by Blackman and Vigna.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_;
};

// Random stream used throughout the simulator. Normal deviates come from a
// 128-layer ziggurat, which keeps results identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : gen_(seed) {}

    std::uint64_t bits() noexcept { return gen_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1].
    double uniform_pos() noexcept { return 1.0 - uniform(); }

    double normal() noexcept;

    // Circular complex normal with E|z|^2 = 1.
    std::complex<double> complex_normal() noexcept {
        constexpr double k = 0.70710678118654752440;
        const double re = normal();
        const double im = normal();
        return {k * re, k * im};
    }

    double exponential() noexcept;

    // Gamma(shape k, scale 1) for integer k >= 1.
    double gamma_int(int k) noexcept;

private:
    double normal_tail(double dmin, bool negative) noexcept;

    Xoshiro256 gen_;
};

}  // namespace phonon_forge
