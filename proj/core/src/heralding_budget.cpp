#include "phonon_forge/heralding_budget.hpp"

#include <cmath>
#include <string>

#include "phonon_forge/error.hpp"

namespace phonon_forge {

void SpadConfig::validate() const {
    if (!(gate_rate > 0.0)) throw ConfigError("spad.gate_rate must be > 0");
    if (!(gate_len >= 0.0)) throw ConfigError("spad.gate_len must be >= 0");
    if (!(gate_len * gate_rate < 1.0)) throw ConfigError("spad gates overlap: gate_len * gate_rate >= 1");
    if (!(dead_time >= 0.0)) throw ConfigError("spad.dead_time must be >= 0");
    if (!(dark_rate >= 0.0)) throw ConfigError("spad.dark_rate must be >= 0");
    if (!(quantum_eff > 0.0 && quantum_eff <= 1.0)) throw ConfigError("spad.quantum_eff must lie in (0, 1]");
    for (double e : arm_efficiencies)
        if (!(e > 0.0 && e <= 1.0)) throw ConfigError("spad.arm_efficiencies must lie in (0, 1]");
}

double SpadConfig::arm_transmission(int detector) const {
    const auto& a = arm_efficiencies;
    const double split = detector == 0 ? a[3] : 1.0 - a[3];
    return a[0] * a[1] * a[2] * split;
}

double SpadConfig::dark_probability() const { return -std::expm1(-dark_rate * gate_len); }

double cavity_flux(const SystemParams& p, double G) {
    check_weak_coupling(p, G);
    return 2.0 * p.kappa2_ext * correlation(p, G, 0.0);
}

double detector_rate(double F_cav, const std::array<double, 4>& arm) {
    for (double e : arm)
        if (!(e >= 0.0 && e <= 1.0)) throw DomainError("efficiencies must lie in [0, 1]");
    return F_cav * arm[0] * arm[1] * arm[2] * arm[3];
}

double counts_per_gate(double R_det, const SpadConfig& spad) {
    if (!(R_det >= 0.0)) throw DomainError("R_det must be >= 0");
    return spad.quantum_eff * R_det * spad.gate_len;
}

bool multi_photon_risk(double N_det) { return N_det > 0.1; }

double herald_fidelity(double singles_rate, double dark_rate) {
    if (!(singles_rate >= 0.0 && dark_rate >= 0.0)) throw DomainError("rates must be >= 0");
    const double total = singles_rate + dark_rate;
    return total > 0.0 ? dark_rate / total : 0.0;
}

BudgetReport budget_report(const SystemParams& p, const SpadConfig& spad, double G) {
    spad.validate();
    BudgetReport r;
    r.G = G < 0.0 ? pump_coupling(p) : G;
    r.F_cav = cavity_flux(p, r.G);
    r.R_det = detector_rate(r.F_cav, spad.arm_efficiencies);
    r.N_det = counts_per_gate(r.R_det, spad);
    r.duty_cycle = spad.duty_cycle();
    r.singles_rate_pre_duty = spad.quantum_eff * r.R_det;
    r.singles_rate = r.N_det * spad.gate_rate;
    const double n1 = r.F_cav * spad.detection_efficiency(1) * spad.gate_len;
    r.total_singles_rate = r.singles_rate + n1 * spad.gate_rate;
    // exponentially distributed gate intensity: P(no count) = 1 / (1 + N)
    const double keep = 1.0 - spad.dark_probability();
    const double none0 = keep / (1.0 + r.N_det);
    const double none1 = keep / (1.0 + n1);
    const double neither = keep * keep / (1.0 + r.N_det + n1);
    r.click_rate = spad.gate_rate * (1.0 - none0);
    r.coincidence_rate = spad.gate_rate * (1.0 - none0 - none1 + neither);
    r.dark_fraction = herald_fidelity(r.singles_rate, spad.dark_rate);
    r.multi_photon_risk = multi_photon_risk(r.N_det);
    return r;
}

}  // namespace phonon_forge
