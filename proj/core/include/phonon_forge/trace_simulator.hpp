#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phonon_forge/demodulation.hpp"
#include "phonon_forge/dynamics.hpp"
#include "phonon_forge/field_process.hpp"
#include "phonon_forge/phase_space.hpp"
#include "phonon_forge/spad.hpp"

namespace phonon_forge {

enum class HeraldKind { none, single, coincidence };
const char* to_string(HeraldKind kind);
HeraldKind herald_kind_from_string(const char* name);

// conditional: the herald gate is drawn from its exact conditional law.
// realtime: gates are simulated one after another and traces are cut around
// the heralds that occur.
enum class HeraldSampling { conditional, realtime };
const char* to_string(HeraldSampling sampling);
HeraldSampling herald_sampling_from_string(const char* name);

struct SimConfig {
    SystemParams params = SystemParams::reference_device();
    double dt = 0.0;  // upper bound on the field step (s); 0 selects 1/(20 kappa2)
    std::size_t trace_len = 1250;  // raw samples kept per trace
    double sample_rate = 3.125e9;
    std::size_t n_traces = 1000;
    double demod_bandwidth = 100e6;
    DemodFilter demod_filter = DemodFilter::butterworth4;
    int decimation = 4;
    std::uint64_t seed = 1;
    SpadConfig spad;
    FieldModel model = FieldModel::coupled;
    std::optional<double> coupling;  // G in rad/s; default from the pump power
    std::size_t pad = 128;           // raw samples discarded at each end after filtering
    unsigned threads = 0;

    void validate() const;
    double G() const;
    int substeps() const;
    double field_step() const;
    double sample_period() const { return 1.0 / sample_rate; }
    DemodConfig demod() const;
    // Raw index of the herald inside a kept trace, a multiple of decimation.
    std::size_t herald_raw_index() const;
    std::size_t output_len() const;
};

// Scale factors tying the model field to the detected signals. Both are set so
// that the stationary means match the closed-form budget: heterodyne variance
// 1 + eta nbar_th and cavity flux 2 kappa2_ext nbar_th G^2 / (kappa2 (kappa2 + gamma)).
struct DetectionGains {
    double occupation = 0.0;  // <|alpha|^2> of the field model
    double het_gain = 0.0;    // eta' with u = sqrt(2 eta') alpha
    double flux_gain = 0.0;   // photons/s leaving the cavity per unit |alpha|^2
    double noise_sigma = 0.0;  // raw-trace white noise per sample
};
DetectionGains detection_gains(const SimConfig& cfg);

struct FieldTrajectory {
    double step = 0.0;
    std::vector<FieldState> states;  // (alpha, beta) at t = i * step
};

// Stationary trajectory of n_steps + 1 states at the field step.
FieldTrajectory simulate_fields(const SimConfig& cfg, std::size_t n_steps, std::uint64_t seed);

// Raw heterodyne record sampled at cfg.sample_rate; t = 0 at states[0].
std::vector<double> heterodyne_trace(const FieldTrajectory& traj, const SimConfig& cfg, std::uint64_t seed);

struct ClickEvent {
    double time = 0.0;  // gate centre
    std::uint64_t gate = 0;
    int detector = 0;
    bool is_dark = false;
};

struct GateSchedule {
    double start = 0.0;
    double rate = 0.0;
    double length = 0.0;
    std::uint64_t count = 0;
};

struct ClickStream {
    std::vector<ClickEvent> events;  // ordered by (gate, detector)
    GateSchedule gates;
    double mean_counts_per_gate = 0.0;  // expected real counts, detector 0

    double duration() const { return static_cast<double>(gates.count) / gates.rate; }
};

// Free-running gates over a given trajectory.
ClickStream spad_clicks(const FieldTrajectory& traj, const SimConfig& cfg, std::uint64_t seed);

// Free-running gates simulated directly, with exact field transitions across
// the gaps between gates.
ClickStream simulate_click_stream(const SimConfig& cfg, std::uint64_t n_gates);

// Dead-time filter: drops events closer than dead_time to the previous
// registered event on the same detector. Input ordered by time.
std::vector<ClickEvent> apply_dead_time(const std::vector<ClickEvent>& raw, double dead_time);

struct HeraldEvent {
    double time = 0.0;
    std::uint64_t gate = 0;
    HeraldKind kind = HeraldKind::none;
    bool has_dark = false;
};

// single: exactly one detector registered in the gate; coincidence: both.
std::vector<HeraldEvent> herald_select(const ClickStream& clicks, HeraldKind kind);

// Quadratures of a raw trace; the vacuum maps to unit variance per quadrature.
struct Quadratures {
    std::vector<double> X;
    std::vector<double> P;
};
Quadratures demodulate(const std::vector<double>& trace, const SimConfig& cfg);

// Per-lag mean and centred second moment, pooled later over X and P.
struct EnsembleMoments {
    std::size_t count = 0;
    std::vector<double> mean_x, mean_p, m2_x, m2_p;

    void merge(const EnsembleMoments& other);
};

struct TraceEnsemble {
    HeraldKind kind = HeraldKind::none;
    HeraldSampling sampling = HeraldSampling::conditional;
    double sample_period = 0.0;  // after decimation
    std::size_t length = 0;      // samples per trace
    std::size_t herald_index = 0;
    std::size_t n_traces = 0;
    // Row-major n_traces x length; empty when traces were not kept.
    std::vector<float> X, P;
    // Quadratures at the herald instant, one pair per trace.
    std::vector<double> X0, P0;
    std::vector<std::uint8_t> herald_dark;
    EnsembleMoments moments;
    double acceptance = 1.0;  // conditional sampling acceptance rate
    std::uint64_t gates_simulated = 0;  // realtime sampling

    bool has_traces() const { return !X.empty(); }
    double tau(std::size_t i) const {
        return (static_cast<double>(i) - static_cast<double>(herald_index)) * sample_period;
    }
};

struct EnsembleOptions {
    HeraldKind kind = HeraldKind::single;
    HeraldSampling sampling = HeraldSampling::conditional;
    bool keep_traces = true;
};

TraceEnsemble simulate_ensemble(const SimConfig& cfg, const EnsembleOptions& opts);

// Pooled X/P sample variance per lag.
VarianceCurve ensemble_variance(const TraceEnsemble& ensemble);

struct PeakSummary {
    double peak = 0.0;
    double baseline = 0.0;  // mean over the outer tail_fraction of lags
    double ratio = 0.0;     // (peak - 1) / (baseline - 1)
    double peak_tau = 0.0;
};
PeakSummary peak_ratio(const VarianceCurve& curve, double tail_fraction = 0.2);

struct HistogramConfig {
    std::size_t bins = 25;
    double half_width = 0.0;  // 0 selects 5 sqrt(max pooled second moment)
    Units units = Units::heterodyne_vacuum;
    double eta = 1.0;  // used for zero_point
};
// Normalized 2D histogram of the herald-instant quadratures; bin centres on
// the grid coordinates.
PhaseSpaceGrid herald_histogram(const TraceEnsemble& ensemble, const HistogramConfig& cfg);

}  // namespace phonon_forge
