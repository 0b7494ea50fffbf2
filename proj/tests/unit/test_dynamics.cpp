#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "phonon_forge/dynamics.hpp"
#include "phonon_forge/error.hpp"

using namespace phonon_forge;

namespace {
constexpr double k2pi = 2.0 * std::numbers::pi;
}

TEST(Dynamics, CharacterizationChainMatchesTable) {
    const auto p = SystemParams::reference_device();
    const double n_cav = intracavity_photons(p);
    EXPECT_NEAR(n_cav / 1.2e9, 1.0, 0.15);
    const double G = coupling_rate(p, 1.2e9);
    EXPECT_NEAR(G / k2pi / 1e6, 10.3, 0.2);
    const double C = cooperativity(p, k2pi * 10.3e6);
    EXPECT_NEAR(C, 0.69, 0.01);
    EXPECT_NEAR(cooled_occupation(p, 0.69), 453.3, 0.1);
    EXPECT_NEAR(cooled_occupation(p, 0.69) / p.nbar_th, 0.59, 0.01);
    const double tau = 1.0 / effective_linewidth(p, cooperativity(p, pump_coupling(p)));
    EXPECT_GT(tau, 29e-9 * 0.9);
    EXPECT_LT(tau, 31e-9 * 1.1);
}

TEST(Dynamics, Limits) {
    auto p = SystemParams::reference_device();
    EXPECT_DOUBLE_EQ(coupling_rate(p, 0.0), 0.0);
    EXPECT_NEAR(coupling_rate(p, 4e9) / coupling_rate(p, 1e9), 2.0, 1e-14);
    EXPECT_DOUBLE_EQ(cooperativity(p, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(cooled_occupation(p, 0.0), p.nbar_th);
    EXPECT_DOUBLE_EQ(effective_linewidth(p, 0.0), p.gamma);
    const double n1 = intracavity_photons(p);
    p.P_in *= 2.0;
    EXPECT_NEAR(intracavity_photons(p) / n1, 2.0, 1e-14);
    p.P_in = 0.0;
    EXPECT_DOUBLE_EQ(intracavity_photons(p), 0.0);
}

TEST(Dynamics, LinewidthAffineInPhotons) {
    const auto p = SystemParams::reference_device();
    auto ge = [&](double n) { return effective_linewidth(p, cooperativity(p, coupling_rate(p, n))); };
    const double slope = (ge(2e9) - ge(1e9)) / 1e9;
    EXPECT_NEAR(ge(0.0), p.gamma, 1e-6);
    EXPECT_NEAR(ge(3e9), p.gamma + 3e9 * slope, 1e-6 * p.gamma);
    EXPECT_NEAR(slope, p.g0 * p.g0 / p.kappa2, 1e-9 * slope);
}

TEST(Dynamics, CooledOccupationBelowBath) {
    const auto p = SystemParams::reference_device();
    for (double C : {1e-6, 0.1, 0.69, 5.0}) EXPECT_LT(cooled_occupation(p, C), p.nbar_th);
    EXPECT_THROW(cooled_occupation(p, -0.1), DomainError);
}

TEST(Dynamics, WeakCouplingEnforced) {
    const auto p = SystemParams::reference_device();
    EXPECT_THROW(check_weak_coupling(p, p.kappa2), DomainError);
    EXPECT_NO_THROW(check_weak_coupling(p, pump_coupling(p)));
}

TEST(Dynamics, SpectrumSingleTermFwhm) {
    const double ge = 2.0e7;
    // half max of the single Lorentzian sits at +-gamma_eff
    EXPECT_NEAR(susceptibility_lorentzian(ge, ge), 0.5, 1e-15);
    // bisection for the half-max point on the full pair with a distant mirror term
    auto p = SystemParams::reference_device();
    const double G = pump_coupling(p);
    const double gamma_eff = effective_linewidth(p, cooperativity(p, G));
    p.omega_het = 1e4 * gamma_eff;
    double lo = p.omega_het, hi = p.omega_het + 10.0 * gamma_eff;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (anti_stokes_spectrum(p, G, mid) > 0.5 ? lo : hi) = mid;
    }
    EXPECT_NEAR(2.0 * (lo - p.omega_het) / (2.0 * gamma_eff), 1.0, 1e-6);
    EXPECT_NEAR(anti_stokes_spectrum(p, G, p.omega_het), 1.0, 1e-15);
}

TEST(Dynamics, SpectrumSymmetric) {
    const auto p = SystemParams::reference_device();
    const double G = pump_coupling(p);
    for (double w : {0.0, 1e8, 1.3e9, 4e9})
        EXPECT_DOUBLE_EQ(anti_stokes_spectrum(p, G, w), anti_stokes_spectrum(p, G, -w));
}

TEST(Dynamics, CorrelationBracket) {
    EXPECT_DOUBLE_EQ(correlation_bracket(10.0, 1.0, 0.0), 1.0);
    EXPECT_NEAR(correlation_bracket(10.0, 1.0, 1.0), (10.0 * std::exp(-1.0) - std::exp(-10.0)) / 9.0,
                1e-15);
    EXPECT_LT(correlation_bracket(10.0, 1.0, 100.0), 1e-40);
    // degenerate limit is continuous
    EXPECT_NEAR(correlation_bracket(1.0, 1.0 - 2e-6, 0.7), correlation_bracket(1.0, 1.0, 0.7), 1e-6);
    EXPECT_DOUBLE_EQ(correlation_bracket(1.0, 1.0, 0.7), 1.7 * std::exp(-0.7));
    const auto p = SystemParams::reference_device();
    const double G = pump_coupling(p);
    EXPECT_NEAR(correlation(p, G, 0.0),
                p.nbar_th * G * G / (p.kappa2 * (p.kappa2 + p.gamma)), 1e-12);
}

TEST(Dynamics, HeraldedVarianceRatiosExact) {
    auto p = SystemParams::reference_device();
    for (double eta : {0.0091, 0.3, 1.0}) {
        p.eta_total = eta;
        const double inf = heralded_variance(p, 1, 1.0);
        for (int n : {1, 2}) {
            const double r = (heralded_variance(p, n, 0.0) - 1.0) / (inf - 1.0);
            EXPECT_NEAR(r, 1.0 + n, 1e-12);
        }
    }
    p = SystemParams::reference_device();
    EXPECT_NEAR(heralded_variance(p, 1, 1.0), 1.0 + 0.0091 * 766, 1e-12);
    EXPECT_NEAR(heralded_variance(p, 2, 1.0), 7.9706, 1e-4);
    EXPECT_THROW(heralded_variance(p, 3, 0.0), UnsupportedError);
}

TEST(Dynamics, HeraldedVarianceEvenAndMonotone) {
    const auto p = SystemParams::reference_device();
    double prev = heralded_variance(p, 2, 0.0);
    for (int i = 1; i < 200; ++i) {
        const double t = i * 1e-9;
        const double v = heralded_variance(p, 2, t);
        EXPECT_EQ(v, heralded_variance(p, 2, -t));
        EXPECT_LE(v, prev);
        EXPECT_GE(v, 1.0);
        prev = v;
    }
    std::vector<double> taus{-1e-8, 0.0, 1e-8};
    const auto c = to_zero_point(heralded_variance_curve(p, 1, taus), p.eta_total);
    EXPECT_NEAR(c.values[1] * p.eta_total, heralded_variance(p, 1, 0.0), 1e-12);
}

TEST(Dynamics, WickOracleMatchesFormula) {
    const auto p = SystemParams::reference_device();
    const double G = pump_coupling(p);
    const double taus[] = {0.0, 1.0 / p.kappa2, 1.0 / p.gamma, 5.0 / p.gamma};
    std::uint64_t seed = 11;
    for (int n : {1, 2}) {
        for (double tau : taus) {
            const auto e = wick_oracle(p, G, n, tau, 400000, seed++, 0);
            EXPECT_LT(std::abs(e.ratio - e.predicted), 3.0 * e.std_error)
                << "n=" << n << " tau=" << tau << " ratio=" << e.ratio;
        }
    }
    const auto a = wick_oracle(p, G, 2, 0.0, 100000, 5, 1);
    const auto b = wick_oracle(p, G, 2, 0.0, 100000, 5, 4);
    EXPECT_EQ(a.ratio, b.ratio);
    EXPECT_THROW(wick_oracle(p, 0.0, 1, 0.0, 100000, 1, 1), NumericalError);
}

TEST(Dynamics, CharacterizeAt) {
    const auto p = SystemParams::reference_device();
    const auto r = characterize_at(p, 9e-3);
    EXPECT_NEAR(r.C, 0.69, 0.02);
    EXPECT_NEAR(r.nbar, 453.0, 5.0);
    const auto z = characterize_at(p, 0.0);
    EXPECT_EQ(z.C, 0.0);
    EXPECT_EQ(z.nbar, p.nbar_th);
}

TEST(Dynamics, FieldModelNames) {
    for (auto m : {FieldModel::coupled, FieldModel::first_order, FieldModel::adiabatic})
        EXPECT_EQ(field_model_from_string(to_string(m)), m);
    EXPECT_THROW(field_model_from_string("euler"), ConfigError);
}
