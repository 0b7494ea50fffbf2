#include "phonon_forge/random.hpp"

#include <cmath>

namespace phonon_forge {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t substream) noexcept {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    h = splitmix64(h ^ splitmix64(substream + 0x8cb92ba72f3d8dd7ULL));
    return h;
}

Xoshiro256::Xoshiro256(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& word : s_) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        word = z ^ (z >> 31);
    }
}

namespace {

constexpr int kLayers = 128;
constexpr double kZigR = 3.442619855899;
constexpr double kZigV = 9.91256303526217e-3;

struct ZigguratTables {
    double x[kLayers + 1];
    double r[kLayers];

    ZigguratTables() {
        double f = std::exp(-0.5 * kZigR * kZigR);
        x[0] = kZigV / f;
        x[1] = kZigR;
        x[kLayers] = 0.0;
        for (int i = 2; i < kLayers; ++i) {
            x[i] = std::sqrt(-2.0 * std::log(kZigV / x[i - 1] + f));
            f = std::exp(-0.5 * x[i] * x[i]);
        }
        for (int i = 0; i < kLayers; ++i) r[i] = x[i + 1] / x[i];
    }
};

const ZigguratTables& zig() {
    static const ZigguratTables tables;
    return tables;
}

}  // namespace

double Rng::normal_tail(double dmin, bool negative) noexcept {
    double x;
    double y;
    do {
        x = std::log(uniform_pos()) / dmin;
        y = std::log(uniform_pos());
    } while (-2.0 * y < x * x);
    return negative ? x - dmin : dmin - x;
}

double Rng::normal() noexcept {
    const ZigguratTables& t = zig();
    for (;;) {
        const std::uint64_t b = gen_();
        // upper 53 bits give u, the low 7 bits pick the layer
        const double u = 2.0 * (static_cast<double>(b >> 11) * 0x1.0p-53) - 1.0;
        const unsigned i = static_cast<unsigned>(b & 0x7F);
        if (std::fabs(u) < t.r[i]) return u * t.x[i];
        if (i == 0) return normal_tail(kZigR, u < 0.0);
        const double x = u * t.x[i];
        const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - x * x));
        const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - x * x));
        if (f1 + uniform() * (f0 - f1) < 1.0) return x;
    }
}

double Rng::exponential() noexcept { return -std::log(uniform_pos()); }

double Rng::gamma_int(int k) noexcept {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += exponential();
    return s;
}

}  // namespace phonon_forge
