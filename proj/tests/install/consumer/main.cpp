#include <cmath>
#include <cstdio>

#include "phonon_forge/heralding_budget.hpp"
#include "phonon_forge/phase_space.hpp"

int main() {
    using namespace phonon_forge;
    const StateSpec spec{453.0, 1, 0.0091};
    GridConfig cfg;
    cfg.npts = 129;
    const auto grid = wigner_s(spec, cfg);
    const auto budget = budget_report(SystemParams::reference_device(), SpadConfig{});
    std::printf("s %.5f integral %.6f N_det %.4g\n", grid.s_param(), grid.integral(), budget.N_det);
    return std::abs(grid.integral() - 1.0) < 1e-6 ? 0 : 1;
}
