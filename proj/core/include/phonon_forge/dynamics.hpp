#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace phonon_forge {

inline constexpr double kHbar = 1.054571817e-34;     // J s
inline constexpr double kBoltzmann = 1.380649e-23;   // J/K
inline constexpr double kSpeedOfLight = 299792458.0; // m/s
inline constexpr double kTwoPi = 6.283185307179586476925;

// Optomechanical system. All rates are amplitude decay rates in rad/s.
struct SystemParams {
    double kappa1 = 0.0;
    double kappa1_ext = 0.0;
    double kappa2 = 0.0;
    double kappa2_ext = 0.0;
    double gamma = 0.0;
    double g0 = 0.0;
    double omega_m = 0.0;
    double omega_het = 0.0;
    double nbar_th = 0.0;
    double P_in = 0.0;        // W
    double wavelength = 0.0;  // m
    double eta_total = 0.0;

    // Measured device of the reference experiment.
    static SystemParams reference_device();

    // Checks positivity, kappa_ext <= kappa, eta range and weak coupling at the
    // pump-derived G. Throws DomainError.
    void validate() const;
};

double thermal_occupation(double temperature, double omega_m);

// N_cav = (2 kappa1_ext / kappa1) P_in / (kappa1 hbar omega_L)
double intracavity_photons(const SystemParams& p);
double coupling_rate(const SystemParams& p, double n_cav);
// g0 sqrt(N_cav) at the configured pump power.
double pump_coupling(const SystemParams& p);
double cooperativity(const SystemParams& p, double G);
double cooled_occupation(const SystemParams& p, double C);
double effective_linewidth(const SystemParams& p, double C);

// Throws DomainError unless 2G < kappa2 + gamma.
void check_weak_coupling(const SystemParams& p, double G);

// Heterodyne power spectrum: Lorentzians of HWHM gamma_eff at +-omega_het,
// scaled to 1 at omega_het.
double anti_stokes_spectrum(const SystemParams& p, double G, double omega);
// Single term |chi_bb(omega)|^2 / |chi_bb(0)|^2.
double susceptibility_lorentzian(double gamma_eff, double omega);

// (kappa e^{-gamma t} - gamma e^{-kappa t}) / (kappa - gamma), with the
// (1 + kappa t) e^{-kappa t} limit when |kappa - gamma| / kappa < 1e-6.
double correlation_bracket(double kappa, double gamma, double tau);

// <a^dag(0) a(tau)> of the anti-Stokes mode to first order in G.
double correlation(const SystemParams& p, double G, double tau);

struct VarianceCurve {
    std::vector<double> taus;
    std::vector<double> values;
    int order = 0;
};

// sigma^2 = 1 + eta nbar_th (1 + n bracket(|tau|)^2), heterodyne units, n in {1, 2}.
double heralded_variance(const SystemParams& p, int n, double tau);
VarianceCurve heralded_variance_curve(const SystemParams& p, int n, std::span<const double> taus);

// Heterodyne variance to mechanical zero-point variance: divide by eta.
VarianceCurve to_zero_point(const VarianceCurve& curve, double eta);

struct WickEstimate {
    double ratio = 0.0;      // E[|a0|^{2n} |a_tau|^2] / (E[|a0|^{2n}] <|a|^2>)
    double std_error = 0.0;
    double predicted = 0.0;  // 1 + n bracket^2
    std::size_t samples = 0;
};

// Monte-Carlo evaluation of the herald-conditioned second moment from sampled
// correlated complex Gaussian pairs. Deterministic in (seed, n_samples).
WickEstimate wick_oracle(const SystemParams& p, double G, int n, double tau, std::size_t n_samples,
                         std::uint64_t seed, unsigned threads = 1);

// Selects the Langevin model used by the field simulator.
enum class FieldModel { coupled, first_order, adiabatic };

const char* to_string(FieldModel model);
FieldModel field_model_from_string(const char* name);

// Stationary <|a|^2> of the anti-Stokes mode under each model.
double model_occupation(const SystemParams& p, double G, FieldModel model);

struct CharacterizationRow {
    double P_in = 0.0;
    double n_cav = 0.0;
    double G = 0.0;
    double C = 0.0;
    double nbar = 0.0;
    double gamma_eff = 0.0;
};

CharacterizationRow characterize_at(const SystemParams& p, double P_in);

}  // namespace phonon_forge
