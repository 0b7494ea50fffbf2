#include "phonon_forge/spectrum_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fftw_support.hpp"
#include "phonon_forge/error.hpp"
#include "phonon_forge/field_process.hpp"
#include "phonon_forge/parallel.hpp"
#include "phonon_forge/random.hpp"

namespace phonon_forge {

Periodogram welch_psd(std::span<const std::complex<double>> x, std::size_t segment, double dt) {
    if (segment < 16) throw DomainError("welch segment must be >= 16 samples");
    if (x.size() < segment) throw DomainError("signal shorter than one welch segment");
    const std::size_t hop = segment / 2;
    const std::size_t n_seg = (x.size() - segment) / hop + 1;
    std::vector<double> win(segment);
    double wsum = 0.0;
    for (std::size_t i = 0; i < segment; ++i) {
        win[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(segment));
        wsum += win[i] * win[i];
    }
    auto buf = detail::fftw_buffer<fftw_complex>(segment);
    fftw_plan raw;
    {
        std::lock_guard<std::mutex> lock(detail::planner_mutex());
        raw = fftw_plan_dft_1d(static_cast<int>(segment), buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    const detail::Plan plan(raw);
    Periodogram pg;
    pg.psd.assign(segment, 0.0);
    pg.segments = n_seg;
    for (std::size_t s = 0; s < n_seg; ++s) {
        for (std::size_t i = 0; i < segment; ++i) {
            const auto v = x[s * hop + i] * win[i];
            buf[i][0] = v.real();
            buf[i][1] = v.imag();
        }
        plan.execute();
        for (std::size_t i = 0; i < segment; ++i) pg.psd[i] += buf[i][0] * buf[i][0] + buf[i][1] * buf[i][1];
    }
    const double scale = dt / (wsum * static_cast<double>(n_seg));
    pg.freqs.resize(segment);
    for (std::size_t i = 0; i < segment; ++i) {
        pg.psd[i] *= scale;
        const double k = i < (segment + 1) / 2 ? static_cast<double>(i)
                                               : static_cast<double>(i) - static_cast<double>(segment);
        pg.freqs[i] = k / (static_cast<double>(segment) * dt);
    }
    return pg;
}

LorentzianFit fit_lorentzian(const Periodogram& pg, double dt, double window) {
    const std::size_t n = pg.psd.size();
    if (n < 16) throw DomainError("periodogram too short");
    // peak from the lowest |f| bins, first half-max crossing on the positive side
    const double peak = (pg.psd[0] + pg.psd[1] + pg.psd[n - 1]) / 3.0;
    double f_half = 0.0;
    for (std::size_t i = 1; i < n / 2; ++i)
        if (pg.psd[i] < 0.5 * peak) {
            f_half = pg.freqs[i];
            break;
        }
    if (!(f_half > 0.0)) throw NumericalError("spectrum has no half-maximum crossing");
    const double f_max = window * f_half;

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(pg.freqs[i]) > f_max || !(pg.psd[i] > 0.0)) continue;
        const double w = 2.0 * std::numbers::pi * pg.freqs[i];
        xs.push_back(2.0 * (1.0 - std::cos(w * dt)) / (dt * dt));
        ys.push_back(1.0 / pg.psd[i]);
    }
    if (xs.size() < 8) throw NumericalError("too few bins inside the fit window");
    double a = 0.0, b = 0.0;
    for (int pass = 0; pass < 3; ++pass) {
        double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double model = pass == 0 ? ys[i] : a + b * xs[i];
            const double wt = 1.0 / (model * model);
            s0 += wt;
            s1 += wt * xs[i];
            s2 += wt * xs[i] * xs[i];
            t0 += wt * ys[i];
            t1 += wt * xs[i] * ys[i];
        }
        const double det = s0 * s2 - s1 * s1;
        if (!(det > 0.0)) throw NumericalError("degenerate lorentzian fit");
        a = (s2 * t0 - s1 * t1) / det;
        b = (s0 * t1 - s1 * t0) / det;
    }
    if (!(a > 0.0 && b > 0.0)) throw NumericalError("lorentzian fit gave a non-positive linewidth");
    // a / b = (1 - phi)^2 / (phi dt^2) for a sampled OU process with phi = e^{-gamma dt}
    const double r = a / b * dt * dt;
    const double c = 2.0 + r;
    const double phi = 0.5 * (c - std::sqrt(c * c - 4.0));
    LorentzianFit fit;
    fit.gamma = -std::log(phi) / dt;
    fit.amplitude = 1.0 / b;
    fit.bins_used = xs.size();
    return fit;
}

LorentzianFit simulate_and_fit(const SystemParams& p, double G, const SpectrumSimConfig& cfg) {
    if (!(G > 0.0)) throw DomainError("spectrum fit needs G > 0");
    if (cfg.segments < 2) throw DomainError("spectrum fit needs at least 2 segments");
    const FieldProcess field(p, G, cfg.model);
    const Transition tr = field.forward(cfg.sample_period);
    const std::size_t n = cfg.segment / 2 * (cfg.segments + 1);
    Rng rng(derive_seed(cfg.seed, 400));
    std::vector<std::complex<double>> a(n);
    FieldState x = field.stationary(rng);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = x[0];
        x = tr.apply(x, rng);
    }
    return fit_lorentzian(welch_psd(a, cfg.segment, cfg.sample_period), cfg.sample_period);
}

G0Fit fit_g0(const SystemParams& p, std::span<const double> powers, const SpectrumSimConfig& cfg,
             unsigned threads) {
    if (powers.size() < 2) throw DomainError("g0 fit needs at least two pump powers");
    G0Fit out;
    out.n_cav.resize(powers.size());
    out.gamma_eff.resize(powers.size());
    parallel_for(powers.size(), threads, 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            SystemParams q = p;
            q.P_in = powers[i];
            out.n_cav[i] = intracavity_photons(q);
            auto c = cfg;
            c.seed = derive_seed(cfg.seed, i);
            out.gamma_eff[i] = simulate_and_fit(q, coupling_rate(q, out.n_cav[i]), c).gamma;
        }
    });
    // ordinary least squares line
    const double m = static_cast<double>(powers.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        sx += out.n_cav[i];
        sy += out.gamma_eff[i];
        sxx += out.n_cav[i] * out.n_cav[i];
        sxy += out.n_cav[i] * out.gamma_eff[i];
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    out.gamma = (sy - slope * sx) / m;
    if (!(slope > 0.0)) throw NumericalError("linewidth does not grow with pump power");
    out.g0 = std::sqrt(slope * p.kappa2);
    return out;
}

}  // namespace phonon_forge
