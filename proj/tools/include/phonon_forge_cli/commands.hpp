#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phonon_forge_cli/run_config.hpp"

namespace phonon_forge::cli {

// State overrides shared by wigner and marginal. Unset values fall back to the
// config: eta_total and the cooled occupation at the configured pump power.
struct StateArgs {
    int n = 1;
    std::optional<double> eta;
    std::optional<double> nbar;
};

void cmd_wigner(const RunConfig& cfg, const StateArgs& args, std::ostream& out);
void cmd_marginal(const RunConfig& cfg, const StateArgs& args, std::ostream& out);
void cmd_variance(const RunConfig& cfg, int n, std::size_t npts, std::ostream& out);
void cmd_simulate(const RunConfig& cfg, std::ostream& out);
void cmd_budget(const RunConfig& cfg, std::ostream& out);
void cmd_characterize(const RunConfig& cfg, std::ostream& out);

// L1 distance between a herald histogram and the closed-form W_s of an
// n-subtracted state with the given eta*nbar, integrated over each bin.
struct HistogramComparison {
    double l1 = 0.0;
    double noise_floor = 0.0;  // expected L1 of a perfect model at this sample size
};
HistogramComparison compare_histogram(const PhaseSpaceGrid& hist, std::size_t samples, int n,
                                      double eta_nbar, double eta);

}  // namespace phonon_forge::cli
