#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "phonon_forge/phase_space.hpp"
#include "phonon_forge/spectrum_fit.hpp"
#include "phonon_forge/trace_simulator.hpp"

namespace phonon_forge::cli {

struct GridSettings {
    std::size_t npts = 513;
    std::optional<double> half_width;
    Units units = Units::zero_point;
    std::optional<double> s;
};

struct SimulateSettings {
    EnsembleOptions ensemble;
    std::size_t histogram_bins = 25;
    std::uint64_t click_gates = 200000;  // free-running gates for the rate check, 0 disables
    std::size_t anchor_traces = 400;
};

struct CharacterizeSettings {
    std::vector<double> powers{3e-3, 4.5e-3, 6e-3, 7.5e-3, 9e-3};  // W
    bool fit = false;
    SpectrumSimConfig spectrum;
};

// Everything a subcommand needs. Rates in the JSON file are given as
// frequencies (rate / 2pi, Hz); in memory they are rad/s like the core.
struct RunConfig {
    SimConfig sim;  // carries SystemParams and SpadConfig
    SimulateSettings simulate;
    GridSettings grid;
    CharacterizeSettings characterize;
    std::filesystem::path output_dir = "phonon_forge_out";
    std::uint64_t seed = 1;
    unsigned threads = 0;

    // Copies seed and threads into the embedded configs and checks every
    // invariant. Throws ConfigError / DomainError.
    void finalize();
};

// Unknown keys at any level are rejected with ConfigError.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace phonon_forge::cli
