#pragma once

#include <array>

#include "phonon_forge/dynamics.hpp"
#include "phonon_forge/spad.hpp"

namespace phonon_forge {

// Anti-Stokes photon flux leaving the cavity, 2 kappa2_ext <a^dag a> (1/s).
double cavity_flux(const SystemParams& p, double G);

// Photon arrival rate at detector 0: F_cav * loss * split1 * filters * split2.
double detector_rate(double F_cav, const std::array<double, 4>& arm_efficiencies);

// Mean registered counts per gate.
double counts_per_gate(double R_det, const SpadConfig& spad);
bool multi_photon_risk(double N_det);

// dark / (dark + real).
double herald_fidelity(double singles_rate, double dark_rate);

struct BudgetReport {
    double G = 0.0;
    double F_cav = 0.0;
    double R_det = 0.0;                 // per detector
    double N_det = 0.0;                 // per detector and gate
    double singles_rate_pre_duty = 0.0;  // quantum_eff * R_det, continuous detection
    double singles_rate = 0.0;          // N_det * gate_rate, per detector
    double total_singles_rate = 0.0;    // both detectors
    double click_rate = 0.0;            // per detector, exponential intensity, with darks
    double coincidence_rate = 0.0;      // both detectors in one gate
    double dark_fraction = 0.0;
    double duty_cycle = 0.0;
    bool multi_photon_risk = false;
};

// G defaults to the pump-derived coupling when negative.
BudgetReport budget_report(const SystemParams& p, const SpadConfig& spad, double G = -1.0);

}  // namespace phonon_forge
