#pragma once

#include <array>

namespace phonon_forge {

// Gated single-photon detector pair behind the heralding arm.
struct SpadConfig {
    double gate_rate = 50e3;   // Hz
    double gate_len = 3.5e-9;  // s
    double dead_time = 18e-6;  // s
    double dark_rate = 1.0;    // 1/s per detector
    double quantum_eff = 0.125;
    // loss, split1, filters, split2; split2 is the fraction sent to detector 0
    std::array<double, 4> arm_efficiencies{0.67, 0.25, 0.15, 0.5};

    void validate() const;

    // Arm transmission from the cavity output to detector d (0 or 1), without
    // the detector quantum efficiency.
    double arm_transmission(int detector) const;
    // Registered counts per photon leaving the cavity.
    double detection_efficiency(int detector) const { return quantum_eff * arm_transmission(detector); }
    double dark_probability() const;  // per gate
    double duty_cycle() const { return gate_rate * gate_len; }
};

}  // namespace phonon_forge
