#pragma once

#include <filesystem>
#include <vector>

#include "phonon_forge/output.hpp"
#include "phonon_forge/trace_simulator.hpp"

namespace phonon_forge {

inline constexpr int kEnsembleSchemaVersion = 1;

// stem.bin: little-endian columns back to back (X, P as float32 n_traces x
// length when traces are kept; X0, P0 float64; herald_dark uint8; per-lag
// moments float64). stem.json: versioned sidecar listing every column with
// its dtype, shape and byte offset, plus ensemble metadata and `extra`.
void write_ensemble(const std::filesystem::path& stem, const TraceEnsemble& ensemble,
                    JsonOut extra = JsonOut::object());
TraceEnsemble read_ensemble(const std::filesystem::path& stem);

void write_heralds_csv(const std::filesystem::path& path, const std::vector<HeraldEvent>& heralds);

}  // namespace phonon_forge
