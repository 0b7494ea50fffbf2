#include "phonon_forge/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <string>

#include "phonon_forge/error.hpp"
#include "phonon_forge/parallel.hpp"
#include "phonon_forge/random.hpp"

namespace phonon_forge {

SystemParams SystemParams::reference_device() {
    SystemParams p;
    p.kappa1 = kTwoPi * 7.05e6;
    p.kappa1_ext = kTwoPi * 2.65e6;
    p.kappa2 = kTwoPi * 46.85e6;
    p.kappa2_ext = kTwoPi * 5.85e6;
    p.gamma = kTwoPi * 3.26e6;
    p.g0 = kTwoPi * 296.0;
    p.omega_m = kTwoPi * 8.16e9;
    p.omega_het = kTwoPi * 214e6;
    p.nbar_th = 766.0;
    p.P_in = 9e-3;
    p.wavelength = 1550e-9;
    p.eta_total = 0.0091;
    return p;
}

void SystemParams::validate() const {
    const auto positive = [](double v, const char* name) {
        if (!(std::isfinite(v) && v > 0.0)) throw DomainError(std::string(name) + " must be > 0");
    };
    positive(kappa1, "kappa1");
    positive(kappa1_ext, "kappa1_ext");
    positive(kappa2, "kappa2");
    positive(kappa2_ext, "kappa2_ext");
    positive(gamma, "gamma");
    positive(g0, "g0");
    positive(omega_m, "omega_m");
    positive(omega_het, "omega_het");
    positive(wavelength, "wavelength");
    if (kappa1_ext > kappa1) throw DomainError("kappa1_ext must not exceed kappa1");
    if (kappa2_ext > kappa2) throw DomainError("kappa2_ext must not exceed kappa2");
    if (!(std::isfinite(nbar_th) && nbar_th >= 0.0)) throw DomainError("nbar_th must be >= 0");
    if (!(std::isfinite(P_in) && P_in >= 0.0)) throw DomainError("P_in must be >= 0");
    if (!(eta_total > 0.0 && eta_total <= 1.0)) throw DomainError("eta_total must lie in (0, 1]");
    check_weak_coupling(*this, pump_coupling(*this));
}

double thermal_occupation(double temperature, double omega_m) {
    if (!(temperature >= 0.0) || !(omega_m > 0.0)) throw DomainError("thermal_occupation: invalid arguments");
    return kBoltzmann * temperature / (kHbar * omega_m);
}

double intracavity_photons(const SystemParams& p) {
    if (!(p.P_in >= 0.0)) throw DomainError("P_in must be >= 0");
    const double eta_c = 2.0 * p.kappa1_ext / p.kappa1;
    const double omega_l = kTwoPi * kSpeedOfLight / p.wavelength;
    return eta_c * p.P_in / (p.kappa1 * kHbar * omega_l);
}

double coupling_rate(const SystemParams& p, double n_cav) {
    if (!(n_cav >= 0.0)) throw DomainError("N_cav must be >= 0");
    return p.g0 * std::sqrt(n_cav);
}

double pump_coupling(const SystemParams& p) { return coupling_rate(p, intracavity_photons(p)); }

double cooperativity(const SystemParams& p, double G) { return G * G / (p.kappa2 * p.gamma); }

double cooled_occupation(const SystemParams& p, double C) {
    if (!(C >= 0.0)) throw DomainError("cooperativity must be >= 0");
    return p.nbar_th / (1.0 + C);
}

double effective_linewidth(const SystemParams& p, double C) {
    if (!(C >= 0.0)) throw DomainError("cooperativity must be >= 0");
    return p.gamma * (1.0 + C);
}

void check_weak_coupling(const SystemParams& p, double G) {
    if (!(2.0 * G < p.kappa2 + p.gamma)) {
        throw DomainError("strong coupling: 2G = " + std::to_string(2.0 * G) +
                          " rad/s is not below kappa2 + gamma = " + std::to_string(p.kappa2 + p.gamma));
    }
}

double susceptibility_lorentzian(double gamma_eff, double omega) {
    return gamma_eff * gamma_eff / (omega * omega + gamma_eff * gamma_eff);
}

double anti_stokes_spectrum(const SystemParams& p, double G, double omega) {
    check_weak_coupling(p, G);
    const double ge = effective_linewidth(p, cooperativity(p, G));
    const double peak = 1.0 + susceptibility_lorentzian(ge, 2.0 * p.omega_het);
    return (susceptibility_lorentzian(ge, omega - p.omega_het) +
            susceptibility_lorentzian(ge, -omega - p.omega_het)) /
           peak;
}

double correlation_bracket(double kappa, double gamma, double tau) {
    const double t = std::abs(tau);
    if (std::abs(kappa - gamma) / kappa < 1e-6) return (1.0 + kappa * t) * std::exp(-kappa * t);
    return (kappa * std::exp(-gamma * t) - gamma * std::exp(-kappa * t)) / (kappa - gamma);
}

double correlation(const SystemParams& p, double G, double tau) {
    const double k = p.kappa2;
    return p.nbar_th * G * G / (k * (k + p.gamma)) * correlation_bracket(k, p.gamma, tau);
}

double heralded_variance(const SystemParams& p, int n, double tau) {
    if (n != 1 && n != 2) throw UnsupportedError("heralded variance is derived for n in {1, 2}");
    const double b = correlation_bracket(p.kappa2, p.gamma, tau);
    return 1.0 + p.eta_total * p.nbar_th * (1.0 + n * b * b);
}

VarianceCurve heralded_variance_curve(const SystemParams& p, int n, std::span<const double> taus) {
    VarianceCurve c;
    c.order = n;
    c.taus.assign(taus.begin(), taus.end());
    c.values.reserve(taus.size());
    for (double t : taus) c.values.push_back(heralded_variance(p, n, t));
    return c;
}

VarianceCurve to_zero_point(const VarianceCurve& curve, double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
    VarianceCurve c = curve;
    for (double& v : c.values) v /= eta;
    return c;
}

WickEstimate wick_oracle(const SystemParams& p, double G, int n, double tau, std::size_t n_samples,
                         std::uint64_t seed, unsigned threads) {
    if (n != 1 && n != 2) throw UnsupportedError("wick_oracle covers n in {1, 2}");
    if (n_samples < 2) throw DomainError("wick_oracle needs at least 2 samples");
    const double N = correlation(p, G, 0.0);
    if (!(N > 0.0)) throw NumericalError("wick_oracle: singular correlation matrix (zero occupation)");
    const double rho = correlation_bracket(p.kappa2, p.gamma, tau);
    const double rest = std::sqrt(std::max(0.0, 1.0 - rho * rho));

    constexpr std::size_t kChunk = 1 << 16;
    const std::size_t n_chunks = (n_samples + kChunk - 1) / kChunk;
    struct Partial { double w = 0, y = 0, ww = 0, yy = 0, wy = 0; };
    std::vector<Partial> parts(n_chunks);
    parallel_for(n_samples, threads, kChunk, [&](std::size_t begin, std::size_t end) {
        const std::size_t c = begin / kChunk;
        Rng rng(derive_seed(seed, c));
        Partial acc;
        for (std::size_t i = begin; i < end; ++i) {
            const auto z1 = rng.complex_normal();
            const auto z2 = rng.complex_normal();
            // a0 = sqrt(N) z1, a_tau = rho a0 + sqrt(N (1 - rho^2)) z2, in units of sqrt(N)
            const std::complex<double> a0 = z1;
            const std::complex<double> at = rho * z1 + rest * z2;
            const double w = std::pow(std::norm(a0), n);
            const double y = w * std::norm(at);
            acc.w += w;
            acc.y += y;
            acc.ww += w * w;
            acc.yy += y * y;
            acc.wy += w * y;
        }
        parts[c] = acc;
    });
    Partial t;
    for (const auto& q : parts) {
        t.w += q.w;
        t.y += q.y;
        t.ww += q.ww;
        t.yy += q.yy;
        t.wy += q.wy;
    }
    const double m = static_cast<double>(n_samples);
    const double wbar = t.w / m;
    const double ybar = t.y / m;
    const double R = ybar / wbar;
    // delta method for a ratio of means
    const double var_y = t.yy / m - ybar * ybar;
    const double var_w = t.ww / m - wbar * wbar;
    const double cov = t.wy / m - wbar * ybar;
    const double var_r = (var_y - 2.0 * R * cov + R * R * var_w) / (wbar * wbar * m);
    WickEstimate e;
    e.ratio = R;
    e.std_error = std::sqrt(std::max(var_r, 0.0));
    e.predicted = 1.0 + n * rho * rho;
    e.samples = n_samples;
    return e;
}

const char* to_string(FieldModel model) {
    switch (model) {
        case FieldModel::coupled: return "coupled";
        case FieldModel::first_order: return "first_order";
        case FieldModel::adiabatic: return "adiabatic";
    }
    return "coupled";
}

FieldModel field_model_from_string(const char* name) {
    if (std::strcmp(name, "coupled") == 0) return FieldModel::coupled;
    if (std::strcmp(name, "first_order") == 0) return FieldModel::first_order;
    if (std::strcmp(name, "adiabatic") == 0) return FieldModel::adiabatic;
    throw ConfigError(std::string("unknown field model '") + name +
                      "' (expected coupled, first_order or adiabatic)");
}

double model_occupation(const SystemParams& p, double G, FieldModel model) {
    const double k = p.kappa2;
    const double first = p.nbar_th * G * G / (k * (k + p.gamma));
    const double C = cooperativity(p, G);
    switch (model) {
        case FieldModel::coupled: return first / (1.0 + C);
        case FieldModel::first_order: return first;
        case FieldModel::adiabatic: return G * G / (k * k) * p.nbar_th / (1.0 + C);
    }
    return first;
}

CharacterizationRow characterize_at(const SystemParams& p, double P_in) {
    SystemParams q = p;
    q.P_in = P_in;
    CharacterizationRow r;
    r.P_in = P_in;
    r.n_cav = intracavity_photons(q);
    r.G = coupling_rate(q, r.n_cav);
    check_weak_coupling(q, r.G);
    r.C = cooperativity(q, r.G);
    r.nbar = cooled_occupation(q, r.C);
    r.gamma_eff = effective_linewidth(q, r.C);
    return r;
}

}  // namespace phonon_forge
