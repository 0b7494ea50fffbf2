#include <gtest/gtest.h>

#include <algorithm>

#include "phonon_forge/error.hpp"
#include "phonon_forge/heralding_budget.hpp"

using namespace phonon_forge;

TEST(HeraldingBudget, CavityFlux) {
    auto p = SystemParams::reference_device();
    const double G = pump_coupling(p);
    const double k = p.kappa2;
    EXPECT_NEAR(cavity_flux(p, G) / (2.0 * p.kappa2_ext * p.nbar_th * G * G / (k * (k + p.gamma))), 1.0, 1e-14);
    EXPECT_EQ(cavity_flux(p, 0.0), 0.0);
    const double f = cavity_flux(p, G);
    p.kappa2_ext *= 2.0;
    EXPECT_NEAR(cavity_flux(p, G) / f, 2.0, 1e-14);
}

TEST(HeraldingBudget, DetectorRateChain) {
    EXPECT_NEAR(detector_rate(1e8, {0.67, 0.25, 0.15, 0.5}), 1.25625e6, 1e-6);
    EXPECT_EQ(detector_rate(1e8, {1.0, 1.0, 1.0, 1.0}), 1e8);
    EXPECT_EQ(detector_rate(1e8, {1.0, 0.0, 1.0, 1.0}), 0.0);
    std::array<double, 4> a{0.67, 0.25, 0.15, 0.5};
    const double ref = detector_rate(3e9, a);
    std::sort(a.begin(), a.end());
    do {
        EXPECT_NEAR(detector_rate(3e9, a) / ref, 1.0, 1e-15);
    } while (std::next_permutation(a.begin(), a.end()));
    EXPECT_THROW(detector_rate(1.0, {1.2, 1.0, 1.0, 1.0}), DomainError);
}

TEST(HeraldingBudget, CountsPerGate) {
    SpadConfig s;
    EXPECT_NEAR(counts_per_gate(1e7, s), 4.375e-3, 1e-15);
    s.gate_len = 0.0;
    EXPECT_EQ(counts_per_gate(1e7, s), 0.0);
    EXPECT_TRUE(multi_photon_risk(0.2));
    EXPECT_FALSE(multi_photon_risk(0.01));
}

TEST(HeraldingBudget, Fidelity) {
    EXPECT_NEAR(herald_fidelity(260.0, 1.0), 1.0 / 261.0, 1e-15);
    EXPECT_LT(herald_fidelity(260.0, 1.0), 0.01);
    EXPECT_EQ(herald_fidelity(260.0, 0.0), 0.0);
    EXPECT_EQ(herald_fidelity(0.0, 1.0), 1.0);
    EXPECT_THROW(herald_fidelity(-1.0, 1.0), DomainError);
}

TEST(HeraldingBudget, ReportAtDefaults) {
    const auto p = SystemParams::reference_device();
    const SpadConfig s;
    const auto r = budget_report(p, s);
    EXPECT_NEAR(r.R_det, detector_rate(r.F_cav, s.arm_efficiencies), 1e-6);
    EXPECT_NEAR(r.N_det, s.quantum_eff * r.R_det * s.gate_len, 1e-15);
    EXPECT_NEAR(r.singles_rate, r.singles_rate_pre_duty * r.duty_cycle, 1e-9);
    EXPECT_NEAR(r.total_singles_rate, 2.0 * r.singles_rate, 1e-9);  // 50:50 split
    EXPECT_GT(r.N_det, 1e-3);
    EXPECT_LT(r.N_det, 1e-1);
    EXPECT_FALSE(r.multi_photon_risk);
    EXPECT_LT(r.click_rate, r.singles_rate);
    EXPECT_LT(r.dark_fraction, 0.01);
    // thermal light: coincidences ~ 2 N0 N1 per gate
    EXPECT_NEAR(r.coincidence_rate / (2.0 * r.N_det * r.N_det * s.gate_rate), 1.0, 0.06);
}

TEST(HeraldingBudget, SpadValidation) {
    SpadConfig s;
    s.gate_len = 1e-4;
    EXPECT_THROW(s.validate(), ConfigError);
    s = SpadConfig{};
    s.arm_efficiencies[2] = 0.0;
    EXPECT_THROW(s.validate(), ConfigError);
    s = SpadConfig{};
    EXPECT_NEAR(s.dark_probability(), 3.5e-9, 1e-15);
}
