#include "phonon_forge/trace_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "phonon_forge/error.hpp"
#include "phonon_forge/heralding_budget.hpp"
#include "phonon_forge/parallel.hpp"
#include "phonon_forge/random.hpp"

namespace phonon_forge {

const char* to_string(HeraldKind kind) {
    switch (kind) {
        case HeraldKind::none: return "none";
        case HeraldKind::single: return "single";
        case HeraldKind::coincidence: return "coincidence";
    }
    return "none";
}

HeraldKind herald_kind_from_string(const char* name) {
    if (std::strcmp(name, "none") == 0) return HeraldKind::none;
    if (std::strcmp(name, "single") == 0) return HeraldKind::single;
    if (std::strcmp(name, "coincidence") == 0) return HeraldKind::coincidence;
    throw ConfigError(std::string("unknown herald kind '") + name + "' (expected none, single or coincidence)");
}

const char* to_string(HeraldSampling sampling) {
    return sampling == HeraldSampling::realtime ? "realtime" : "conditional";
}

HeraldSampling herald_sampling_from_string(const char* name) {
    if (std::strcmp(name, "conditional") == 0) return HeraldSampling::conditional;
    if (std::strcmp(name, "realtime") == 0) return HeraldSampling::realtime;
    throw ConfigError(std::string("unknown herald sampling '") + name + "' (expected conditional or realtime)");
}

// ---------------------------------------------------------------- config

void SimConfig::validate() const {
    params.validate();
    spad.validate();
    const double dt_max = 1.0 / (20.0 * params.kappa2);
    if (dt < 0.0 || dt > dt_max * (1.0 + 1e-12))
        throw ConfigError("dt = " + std::to_string(dt) + " s is too coarse; need dt <= 1/(20 kappa2) = " +
                          std::to_string(dt_max) + " s");
    const double f_het = params.omega_het / (2.0 * std::numbers::pi);
    if (!(sample_rate >= 4.0 * f_het))
        throw ConfigError("sample_rate " + std::to_string(sample_rate) + " Hz is below 4 f_het = " +
                          std::to_string(4.0 * f_het) + " Hz");
    if (n_traces < 1) throw ConfigError("n_traces must be >= 1");
    if (decimation < 1) throw ConfigError("decimation must be >= 1");
    if (trace_len < 2 * static_cast<std::size_t>(decimation)) throw ConfigError("trace_len too short");
    demod().validate();
    if (coupling && !(*coupling >= 0.0)) throw ConfigError("coupling must be >= 0");
    check_weak_coupling(params, G());
    const double gate_span = spad.gate_len / 2.0;
    if (gate_span > static_cast<double>(herald_raw_index() + pad) * sample_period())
        throw ConfigError("trace too short to contain the herald gate");
}

double SimConfig::G() const { return coupling ? *coupling : pump_coupling(params); }

int SimConfig::substeps() const {
    const double dt_eff = dt > 0.0 ? dt : 1.0 / (20.0 * params.kappa2);
    return std::max(1, static_cast<int>(std::ceil(sample_period() / dt_eff * (1.0 - 1e-12))));
}

double SimConfig::field_step() const { return sample_period() / substeps(); }

DemodConfig SimConfig::demod() const {
    DemodConfig d;
    d.sample_rate = sample_rate;
    d.f_het = params.omega_het / (2.0 * std::numbers::pi);
    d.bandwidth = demod_bandwidth;
    d.filter = demod_filter;
    d.decimation = decimation;
    return d;
}

std::size_t SimConfig::herald_raw_index() const {
    const auto d = static_cast<std::size_t>(decimation);
    return (trace_len / 2) / d * d;
}

std::size_t SimConfig::output_len() const {
    const auto d = static_cast<std::size_t>(decimation);
    return (trace_len + d - 1) / d;
}

DetectionGains detection_gains(const SimConfig& cfg) {
    const auto& p = cfg.params;
    const double G = cfg.G();
    DetectionGains g;
    g.occupation = model_occupation(p, G, cfg.model);
    if (g.occupation > 0.0) {
        g.het_gain = p.eta_total * p.nbar_th / g.occupation;
        g.flux_gain = cavity_flux(p, G) / g.occupation;
    }
    g.noise_sigma = std::sqrt(Demodulator(cfg.demod()).noise_variance());
    return g;
}

// ---------------------------------------------------------------- internals

namespace {

constexpr std::uint64_t kStreamFields = 300;
constexpr std::uint64_t kStreamHet = 301;
constexpr std::uint64_t kStreamClicks = 302;
constexpr std::uint64_t kStreamBlocks = 200;
constexpr std::uint64_t kStreamTraces = 100;
constexpr std::uint64_t kBlockGates = 4096;
constexpr std::size_t kChunk = 64;

struct Context {
    explicit Context(const SimConfig& c)
        : cfg(c), gains(detection_gains(c)), field(c.params, c.G(), c.model), demod(c.demod()) {
        S = cfg.substeps();
        h = cfg.field_step();
        Ts = cfg.sample_period();
        fwd_h = field.forward(h);
        bwd_h = field.backward(h);
        for (int r = 0; r <= S; ++r) {
            fwd_r.push_back(field.forward(r * h));
            bwd_r.push_back(field.backward(r * h));
        }
        M = 2 * std::max(1, static_cast<int>(std::lround(cfg.spad.gate_len / (2.0 * h))));
        // trapezoid weights rescaled to the nominal gate length
        w.assign(M + 1, h);
        w.front() = w.back() = 0.5 * h;
        const double scale = cfg.spad.gate_len / (M * h);
        for (double& x : w) x *= scale;
        T = cfg.spad.gate_len;
        const double gap = 1.0 / cfg.spad.gate_rate - M * h;
        gap_tr = field.forward(std::max(gap, 0.0));
        for (int d = 0; d < 2; ++d) count_gain[d] = gains.flux_gain * cfg.spad.detection_efficiency(d);
        p_dark = cfg.spad.dark_probability();
        padded_len = cfg.trace_len + 2 * cfg.pad;
        herald_padded = cfg.pad + cfg.herald_raw_index();
        amp = std::sqrt(2.0 * gains.het_gain);
    }

    double intensity(const std::vector<FieldState>& nodes) const {
        double s = 0.0;
        for (int i = 0; i <= M; ++i) s += w[i] * std::norm(nodes[i][0]);
        return s;
    }

    SimConfig cfg;
    DetectionGains gains;
    FieldProcess field;
    Demodulator demod;
    int S = 1;
    double h = 0.0, Ts = 0.0;
    Transition fwd_h, bwd_h, gap_tr;
    std::vector<Transition> fwd_r, bwd_r;
    int M = 2;
    std::vector<double> w;
    double T = 0.0;
    double count_gain[2] = {0.0, 0.0};
    double p_dark = 0.0;
    std::size_t padded_len = 0, herald_padded = 0;
    double amp = 0.0;
};

double click_prob(double mu, double p_dark) { return 1.0 - (1.0 - p_dark) * std::exp(-mu); }

// P(only the dark count fired | detector registered)
double dark_share(double mu, double p_dark) {
    const double p = click_prob(mu, p_dark);
    return p > 0.0 ? p_dark * std::exp(-mu) / p : 0.0;
}

void propagate_gate(const Context& ctx, std::vector<FieldState>& nodes, int from, Rng& rng) {
    for (int i = from + 1; i <= ctx.M; ++i) nodes[i] = ctx.fwd_h.apply(nodes[i - 1], rng);
    for (int i = from - 1; i >= 0; --i) nodes[i] = ctx.bwd_h.apply(nodes[i + 1], rng);
}

int pick_node(const Context& ctx, Rng& rng) {
    double u = rng.uniform() * ctx.T;
    for (int i = 0; i < ctx.M; ++i) {
        u -= ctx.w[i];
        if (u < 0.0) return i;
    }
    return ctx.M;
}

// Exact draw of the gate trajectory conditioned on the herald, by rejection
// from a mixture of intensity-tilted stationary laws that bounds the herald
// probability from above.
bool draw_herald_gate(const Context& ctx, HeraldKind kind, Rng& rng, std::vector<FieldState>& nodes,
                      std::uint64_t& attempts) {
    const double N = ctx.gains.occupation;
    const double c0 = ctx.count_gain[0], c1 = ctx.count_gain[1];
    const double pd = ctx.p_dark;
    const double T = ctx.T;
    // component masses for tilt orders 2, 1, 0
    double mass[3];
    if (kind == HeraldKind::single) {
        mass[0] = 0.0;
        mass[1] = (c0 + c1) * N * T;
        mass[2] = 2.0 * pd;
    } else {
        mass[0] = c0 * c1 * T * T * 2.0 * N * N;
        mass[1] = pd * (c0 + c1) * N * T;
        mass[2] = pd * pd;
    }
    const double total = mass[0] + mass[1] + mass[2];
    if (!(total > 0.0)) throw NumericalError("herald probability is zero (no signal and no dark counts)");
    constexpr std::uint64_t kMaxAttempts = 100000000;
    for (std::uint64_t a = 0; a < kMaxAttempts; ++a) {
        ++attempts;
        const double u = rng.uniform() * total;
        const int tilt = u < mass[0] ? 2 : (u < mass[0] + mass[1] ? 1 : 0);
        int j = 0;
        if (tilt > 0) {
            j = pick_node(ctx, rng);
            nodes[j] = ctx.field.tilted_stationary(tilt, rng);
        } else {
            nodes[j] = ctx.field.stationary(rng);
        }
        propagate_gate(ctx, nodes, j, rng);
        double bound;
        double accept;
        if (kind == HeraldKind::single) {
            const double I = ctx.intensity(nodes);
            const double p0 = click_prob(c0 * I, pd), p1 = click_prob(c1 * I, pd);
            accept = p0 * (1.0 - p1) + p1 * (1.0 - p0);
            bound = (c0 + c1) * I + 2.0 * pd;
        } else {
            double I = 0.0, I4 = 0.0;
            for (int i = 0; i <= ctx.M; ++i) {
                const double a2 = std::norm(nodes[i][0]);
                I += ctx.w[i] * a2;
                I4 += ctx.w[i] * a2 * a2;
            }
            const double p0 = click_prob(c0 * I, pd), p1 = click_prob(c1 * I, pd);
            accept = p0 * p1;
            bound = c0 * c1 * T * I4 + pd * (c0 + c1) * I + pd * pd;
        }
        if (rng.uniform() * bound < accept) return true;
    }
    throw NumericalError("herald rejection sampler did not converge");
}

// Tag of an accepted herald gate: true if any registering detector fired on a
// dark count alone.
bool sample_dark_tag(const Context& ctx, HeraldKind kind, const std::vector<FieldState>& nodes, Rng& rng) {
    const double I = ctx.intensity(nodes);
    const double mu0 = ctx.count_gain[0] * I, mu1 = ctx.count_gain[1] * I;
    const double pd = ctx.p_dark;
    if (kind == HeraldKind::coincidence) {
        const bool d0 = rng.uniform() < dark_share(mu0, pd);
        const bool d1 = rng.uniform() < dark_share(mu1, pd);
        return d0 || d1;
    }
    const double p0 = click_prob(mu0, pd), p1 = click_prob(mu1, pd);
    const double a = p0 * (1.0 - p1), b = p1 * (1.0 - p0);
    const bool first = rng.uniform() * (a + b) < a;
    return rng.uniform() < dark_share(first ? mu0 : mu1, pd);
}

// Raw padded trace around a gate whose centre node sits on the herald sample.
void trace_from_gate(const Context& ctx, const std::vector<FieldState>& gate, Rng& rng,
                     std::vector<cplx>& alpha) {
    const auto L = static_cast<std::ptrdiff_t>(ctx.padded_len);
    const auto hp = static_cast<std::ptrdiff_t>(ctx.herald_padded);
    const int half = ctx.M / 2;
    const int S = ctx.S;
    alpha.assign(ctx.padded_len, cplx{});
    const int inner = half / S;  // samples on each side of the herald inside the gate
    for (int k = -inner; k <= inner; ++k) {
        const std::ptrdiff_t idx = hp + k;
        if (idx >= 0 && idx < L) alpha[idx] = gate[half + k * S][0];
    }
    // before the gate
    {
        const int r = (inner + 1) * S - half;
        FieldState x = ctx.bwd_r[r].apply(gate[0], rng);
        for (std::ptrdiff_t idx = hp - inner - 1; idx >= 0; --idx) {
            alpha[idx] = x[0];
            if (idx > 0) x = ctx.bwd_r[S].apply(x, rng);
        }
    }
    // after the gate
    {
        const int r = (inner + 1) * S - half;
        FieldState x = ctx.fwd_r[r].apply(gate[ctx.M], rng);
        for (std::ptrdiff_t idx = hp + inner + 1; idx < L; ++idx) {
            alpha[idx] = x[0];
            if (idx + 1 < L) x = ctx.fwd_r[S].apply(x, rng);
        }
    }
}

void trace_unheralded(const Context& ctx, Rng& rng, std::vector<cplx>& alpha) {
    alpha.resize(ctx.padded_len);
    FieldState x = ctx.field.stationary(rng);
    for (std::size_t k = 0; k < ctx.padded_len; ++k) {
        alpha[k] = x[0];
        if (k + 1 < ctx.padded_len) x = ctx.fwd_r[ctx.S].apply(x, rng);
    }
}

void synthesize(const Context& ctx, const std::vector<cplx>& alpha, Rng& rng, std::vector<double>& v) {
    const double dphi = ctx.cfg.params.omega_het * ctx.Ts;
    const double sigma = ctx.gains.noise_sigma;
    v.resize(alpha.size());
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        const double ph = dphi * static_cast<double>(k);
        const cplx u = ctx.amp * alpha[k];
        v[k] = u.real() * std::cos(ph) - u.imag() * std::sin(ph) + sigma * rng.normal();
    }
}

// Kept window of the demodulated padded trace.
void demod_crop(const Context& ctx, const std::vector<double>& v, double* X, double* P) {
    const auto z = ctx.demod.baseband(v);
    const std::size_t d = static_cast<std::size_t>(ctx.cfg.decimation);
    const std::size_t out = ctx.cfg.output_len();
    for (std::size_t i = 0; i < out; ++i) {
        const auto& s = z[ctx.cfg.pad + i * d];
        X[i] = s.real();
        P[i] = s.imag();
    }
}

struct RawGate {
    std::uint64_t gate = 0;
    bool real[2] = {false, false};
    bool dark[2] = {false, false};
    std::vector<FieldState> nodes;
};

// One block of free-running gates starting from the stationary law. Keeps the
// gates with at least one raw event; nodes are stored when keep(raw) says so.
template <class Keep>
std::vector<RawGate> run_block(const Context& ctx, std::uint64_t block, std::uint64_t first_gate,
                               std::uint64_t n_gates, Keep&& keep) {
    Rng rng(derive_seed(ctx.cfg.seed, kStreamBlocks, block));
    std::vector<RawGate> out;
    std::vector<FieldState> nodes(ctx.M + 1);
    FieldState x = ctx.field.stationary(rng);
    for (std::uint64_t g = 0; g < n_gates; ++g) {
        nodes[0] = x;
        for (int i = 1; i <= ctx.M; ++i) nodes[i] = ctx.fwd_h.apply(nodes[i - 1], rng);
        x = ctx.gap_tr.apply(nodes[ctx.M], rng);
        const double I = ctx.intensity(nodes);
        RawGate r;
        bool any = false;
        for (int d = 0; d < 2; ++d) {
            r.real[d] = rng.uniform() < -std::expm1(-ctx.count_gain[d] * I);
            r.dark[d] = rng.uniform() < ctx.p_dark;
            any = any || r.real[d] || r.dark[d];
        }
        if (!any) continue;
        r.gate = first_gate + g;
        if (keep(r)) r.nodes = nodes;
        out.push_back(std::move(r));
    }
    return out;
}

double gate_centre(const SimConfig& cfg, std::uint64_t gate) {
    return static_cast<double>(gate) / cfg.spad.gate_rate + 0.5 * cfg.spad.gate_len;
}

HeraldKind kind_of(bool c0, bool c1) {
    if (c0 && c1) return HeraldKind::coincidence;
    if (c0 || c1) return HeraldKind::single;
    return HeraldKind::none;
}

void moments_of_chunk(const std::vector<double>& xs, const std::vector<double>& ps, std::size_t n,
                      std::size_t len, EnsembleMoments& m) {
    m.count = n;
    m.mean_x.assign(len, 0.0);
    m.mean_p.assign(len, 0.0);
    m.m2_x.assign(len, 0.0);
    m.m2_p.assign(len, 0.0);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t i = 0; i < len; ++i) {
            m.mean_x[i] += xs[t * len + i];
            m.mean_p[i] += ps[t * len + i];
        }
    for (std::size_t i = 0; i < len; ++i) {
        m.mean_x[i] /= static_cast<double>(n);
        m.mean_p[i] /= static_cast<double>(n);
    }
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t i = 0; i < len; ++i) {
            const double dx = xs[t * len + i] - m.mean_x[i];
            const double dp = ps[t * len + i] - m.mean_p[i];
            m.m2_x[i] += dx * dx;
            m.m2_p[i] += dp * dp;
        }
}

}  // namespace

// ---------------------------------------------------------------- fields

FieldTrajectory simulate_fields(const SimConfig& cfg, std::size_t n_steps, std::uint64_t seed) {
    cfg.validate();
    FieldProcess field(cfg.params, cfg.G(), cfg.model);
    FieldTrajectory traj;
    traj.step = cfg.field_step();
    const Transition tr = field.forward(traj.step);
    Rng rng(derive_seed(seed, kStreamFields));
    traj.states.resize(n_steps + 1);
    traj.states[0] = field.stationary(rng);
    for (std::size_t i = 1; i <= n_steps; ++i) traj.states[i] = tr.apply(traj.states[i - 1], rng);
    return traj;
}

std::vector<double> heterodyne_trace(const FieldTrajectory& traj, const SimConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int S = cfg.substeps();
    if (std::abs(traj.step * S - cfg.sample_period()) > 1e-9 * cfg.sample_period())
        throw ConfigError("trajectory step does not divide the sample period");
    const auto gains = detection_gains(cfg);
    const double amp = std::sqrt(2.0 * gains.het_gain);
    const double dphi = cfg.params.omega_het * cfg.sample_period();
    Rng rng(derive_seed(seed, kStreamHet));
    std::vector<double> v;
    for (std::size_t i = 0, k = 0; i < traj.states.size(); i += static_cast<std::size_t>(S), ++k) {
        const cplx u = amp * traj.states[i][0];
        const double ph = dphi * static_cast<double>(k);
        v.push_back(u.real() * std::cos(ph) - u.imag() * std::sin(ph) + gains.noise_sigma * rng.normal());
    }
    return v;
}

Quadratures demodulate(const std::vector<double>& trace, const SimConfig& cfg) {
    const Demodulator dm(cfg.demod());
    const auto z = dm.demodulate(trace);
    Quadratures q;
    q.X.reserve(z.size());
    q.P.reserve(z.size());
    for (const auto& s : z) {
        q.X.push_back(s.real());
        q.P.push_back(s.imag());
    }
    return q;
}

// ---------------------------------------------------------------- clicks

std::vector<ClickEvent> apply_dead_time(const std::vector<ClickEvent>& raw, double dead_time) {
    std::vector<ClickEvent> out;
    double last[2] = {-INFINITY, -INFINITY};
    for (const auto& e : raw) {
        if (e.time - last[e.detector] < dead_time) continue;
        last[e.detector] = e.time;
        out.push_back(e);
    }
    return out;
}

ClickStream spad_clicks(const FieldTrajectory& traj, const SimConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const Context ctx(cfg);
    if (std::abs(traj.step - ctx.h) > 1e-9 * ctx.h) throw ConfigError("trajectory step does not match the config");
    Rng rng(derive_seed(seed, kStreamClicks));
    ClickStream cs;
    cs.gates.rate = cfg.spad.gate_rate;
    cs.gates.length = cfg.spad.gate_len;
    std::vector<ClickEvent> raw;
    std::vector<FieldState> nodes(ctx.M + 1);
    for (std::uint64_t g = 0;; ++g) {
        const double t = static_cast<double>(g) / cfg.spad.gate_rate;
        const auto start = static_cast<std::size_t>(std::llround(t / traj.step));
        if (start + static_cast<std::size_t>(ctx.M) >= traj.states.size()) break;
        std::copy_n(traj.states.begin() + static_cast<std::ptrdiff_t>(start), ctx.M + 1, nodes.begin());
        const double I = ctx.intensity(nodes);
        for (int d = 0; d < 2; ++d) {
            const bool real = rng.uniform() < -std::expm1(-ctx.count_gain[d] * I);
            const bool dark = rng.uniform() < ctx.p_dark;
            if (real || dark) raw.push_back({gate_centre(cfg, g), g, d, !real});
        }
        cs.gates.count = g + 1;
    }
    cs.events = apply_dead_time(raw, cfg.spad.dead_time);
    cs.mean_counts_per_gate = ctx.count_gain[0] * ctx.gains.occupation * ctx.T;
    return cs;
}

ClickStream simulate_click_stream(const SimConfig& cfg, std::uint64_t n_gates) {
    cfg.validate();
    const Context ctx(cfg);
    const std::uint64_t n_blocks = (n_gates + kBlockGates - 1) / kBlockGates;
    std::vector<std::vector<RawGate>> blocks(n_blocks);
    parallel_for(n_blocks, cfg.threads, 1, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            const std::uint64_t first = b * kBlockGates;
            blocks[b] = run_block(ctx, b, first, std::min(kBlockGates, n_gates - first),
                                  [](const RawGate&) { return false; });
        }
    });
    std::vector<ClickEvent> raw;
    for (const auto& blk : blocks)
        for (const auto& r : blk)
            for (int d = 0; d < 2; ++d)
                if (r.real[d] || r.dark[d]) raw.push_back({gate_centre(cfg, r.gate), r.gate, d, !r.real[d]});
    ClickStream cs;
    cs.gates = {0.0, cfg.spad.gate_rate, cfg.spad.gate_len, n_gates};
    cs.events = apply_dead_time(raw, cfg.spad.dead_time);
    cs.mean_counts_per_gate = ctx.count_gain[0] * ctx.gains.occupation * ctx.T;
    return cs;
}

std::vector<HeraldEvent> herald_select(const ClickStream& clicks, HeraldKind kind) {
    std::vector<HeraldEvent> out;
    const auto& ev = clicks.events;
    for (std::size_t i = 0; i < ev.size();) {
        std::size_t j = i;
        bool det[2] = {false, false};
        bool dark = false;
        while (j < ev.size() && ev[j].gate == ev[i].gate) {
            det[ev[j].detector] = true;
            dark = dark || ev[j].is_dark;
            ++j;
        }
        const HeraldKind k = kind_of(det[0], det[1]);
        if (k == kind) out.push_back({ev[i].time, ev[i].gate, k, dark});
        i = j;
    }
    return out;
}

// ---------------------------------------------------------------- ensembles

void EnsembleMoments::merge(const EnsembleMoments& o) {
    if (o.count == 0) return;
    if (count == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(count), nb = static_cast<double>(o.count);
    const double n = na + nb;
    for (std::size_t i = 0; i < mean_x.size(); ++i) {
        const double dx = o.mean_x[i] - mean_x[i];
        const double dp = o.mean_p[i] - mean_p[i];
        mean_x[i] += dx * nb / n;
        mean_p[i] += dp * nb / n;
        m2_x[i] += o.m2_x[i] + dx * dx * na * nb / n;
        m2_p[i] += o.m2_p[i] + dp * dp * na * nb / n;
    }
    count += o.count;
}

TraceEnsemble simulate_ensemble(const SimConfig& cfg, const EnsembleOptions& opts) {
    cfg.validate();
    const Context ctx(cfg);
    const std::size_t n = cfg.n_traces;
    const std::size_t len = cfg.output_len();

    TraceEnsemble ens;
    ens.kind = opts.kind;
    ens.sampling = opts.sampling;
    ens.sample_period = ctx.Ts * cfg.decimation;
    ens.length = len;
    ens.herald_index = cfg.herald_raw_index() / static_cast<std::size_t>(cfg.decimation);
    ens.n_traces = n;
    ens.X0.resize(n);
    ens.P0.resize(n);
    ens.herald_dark.assign(n, 0);
    if (opts.keep_traces) {
        ens.X.resize(n * len);
        ens.P.resize(n * len);
    }

    // realtime: collect herald gates from free-running blocks first
    std::vector<std::vector<FieldState>> herald_nodes;
    if (opts.kind != HeraldKind::none && opts.sampling == HeraldSampling::realtime) {
        const HeraldKind want = opts.kind;
        auto keep = [want](const RawGate& r) {
            const bool c0 = r.real[0] || r.dark[0], c1 = r.real[1] || r.dark[1];
            return want == HeraldKind::single ? true : (c0 && c1);
        };
        const std::size_t batch = std::max<std::size_t>(4, 4 * resolve_threads(cfg.threads));
        double last[2] = {-INFINITY, -INFINITY};
        std::uint64_t next_block = 0;
        while (herald_nodes.size() < n) {
            std::vector<std::vector<RawGate>> blocks(batch);
            parallel_for(batch, cfg.threads, 1, [&](std::size_t b0, std::size_t b1) {
                for (std::size_t b = b0; b < b1; ++b) {
                    const std::uint64_t id = next_block + b;
                    blocks[b] = run_block(ctx, id, id * kBlockGates, kBlockGates, keep);
                }
            });
            next_block += batch;
            for (auto& blk : blocks)
                for (auto& r : blk) {
                    const double t = gate_centre(cfg, r.gate);
                    bool reg[2] = {false, false};
                    bool dark = false;
                    for (int d = 0; d < 2; ++d) {
                        if (!(r.real[d] || r.dark[d]) || t - last[d] < cfg.spad.dead_time) continue;
                        reg[d] = true;
                        last[d] = t;
                        dark = dark || !r.real[d];
                    }
                    if (kind_of(reg[0], reg[1]) != want || herald_nodes.size() >= n) continue;
                    ens.herald_dark[herald_nodes.size()] = dark ? 1 : 0;
                    herald_nodes.push_back(std::move(r.nodes));
                }
            ens.gates_simulated = next_block * kBlockGates;
            if (next_block > (std::uint64_t{1} << 40) / kBlockGates)
                throw NumericalError("realtime herald search exceeded its gate budget");
        }
    }

    const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
    std::vector<EnsembleMoments> parts(n_chunks);
    std::vector<std::uint64_t> attempts(n_chunks, 0);
    parallel_for(n_chunks, cfg.threads, 1, [&](std::size_t c0, std::size_t c1) {
        std::vector<FieldState> nodes(ctx.M + 1);
        std::vector<cplx> alpha;
        std::vector<double> v;
        for (std::size_t c = c0; c < c1; ++c) {
            const std::size_t t0 = c * kChunk;
            const std::size_t cn = std::min(kChunk, n - t0);
            std::vector<double> xs(cn * len), ps(cn * len);
            for (std::size_t k = 0; k < cn; ++k) {
                const std::size_t t = t0 + k;
                Rng rng(derive_seed(cfg.seed, kStreamTraces + static_cast<std::uint64_t>(opts.kind), t));
                if (opts.kind == HeraldKind::none) {
                    trace_unheralded(ctx, rng, alpha);
                } else if (opts.sampling == HeraldSampling::realtime) {
                    trace_from_gate(ctx, herald_nodes[t], rng, alpha);
                } else {
                    draw_herald_gate(ctx, opts.kind, rng, nodes, attempts[c]);
                    ens.herald_dark[t] = sample_dark_tag(ctx, opts.kind, nodes, rng) ? 1 : 0;
                    trace_from_gate(ctx, nodes, rng, alpha);
                }
                synthesize(ctx, alpha, rng, v);
                demod_crop(ctx, v, &xs[k * len], &ps[k * len]);
                ens.X0[t] = xs[k * len + ens.herald_index];
                ens.P0[t] = ps[k * len + ens.herald_index];
                if (opts.keep_traces) {
                    for (std::size_t i = 0; i < len; ++i) {
                        ens.X[t * len + i] = static_cast<float>(xs[k * len + i]);
                        ens.P[t * len + i] = static_cast<float>(ps[k * len + i]);
                    }
                }
            }
            moments_of_chunk(xs, ps, cn, len, parts[c]);
        }
    });
    std::uint64_t total_attempts = 0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        ens.moments.merge(parts[c]);
        total_attempts += attempts[c];
    }
    if (opts.kind != HeraldKind::none && opts.sampling == HeraldSampling::conditional)
        ens.acceptance = static_cast<double>(n) / static_cast<double>(total_attempts);
    return ens;
}

VarianceCurve ensemble_variance(const TraceEnsemble& e) {
    if (e.n_traces < 2) throw DomainError("ensemble_variance needs at least 2 traces");
    VarianceCurve c;
    c.order = e.kind == HeraldKind::single ? 1 : (e.kind == HeraldKind::coincidence ? 2 : 0);
    c.taus.resize(e.length);
    c.values.resize(e.length);
    const double denom = 2.0 * static_cast<double>(e.n_traces - 1);
    for (std::size_t i = 0; i < e.length; ++i) c.taus[i] = e.tau(i);
    if (!e.has_traces()) {
        for (std::size_t i = 0; i < e.length; ++i)
            c.values[i] = (e.moments.m2_x[i] + e.moments.m2_p[i]) / denom;
        return c;
    }
    // two-pass with Neumaier-compensated sums
    auto sum = [&](auto&& term, std::size_t i) {
        double s = 0.0, comp = 0.0;
        for (std::size_t t = 0; t < e.n_traces; ++t) {
            const double x = term(t * e.length + i);
            const double u = s + x;
            comp += std::abs(s) >= std::abs(x) ? (s - u) + x : (x - u) + s;
            s = u;
        }
        return s + comp;
    };
    const double nt = static_cast<double>(e.n_traces);
    for (std::size_t i = 0; i < e.length; ++i) {
        const double mx = sum([&](std::size_t k) { return double(e.X[k]); }, i) / nt;
        const double mp = sum([&](std::size_t k) { return double(e.P[k]); }, i) / nt;
        const double sx = sum([&](std::size_t k) { const double d = e.X[k] - mx; return d * d; }, i);
        const double sp = sum([&](std::size_t k) { const double d = e.P[k] - mp; return d * d; }, i);
        c.values[i] = (sx + sp) / denom;
    }
    return c;
}

PeakSummary peak_ratio(const VarianceCurve& curve, double tail_fraction) {
    const std::size_t n = curve.values.size();
    if (n < 3) throw DomainError("peak_ratio needs at least 3 lags");
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw DomainError("tail_fraction must lie in (0, 1)");
    const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(tail_fraction * n / 2.0));
    double base = 0.0;
    for (std::size_t i = 0; i < tail; ++i) base += curve.values[i] + curve.values[n - 1 - i];
    PeakSummary s;
    s.baseline = base / (2.0 * tail);
    const auto it = std::max_element(curve.values.begin(), curve.values.end());
    s.peak = *it;
    s.peak_tau = curve.taus[static_cast<std::size_t>(it - curve.values.begin())];
    s.ratio = (s.peak - 1.0) / (s.baseline - 1.0);
    return s;
}

PhaseSpaceGrid herald_histogram(const TraceEnsemble& e, const HistogramConfig& cfg) {
    if (e.X0.empty()) throw DomainError("herald_histogram needs a non-empty ensemble");
    if (cfg.bins < 3 || cfg.bins % 2 == 0) throw DomainError("histogram bins must be odd and >= 3");
    if (!(cfg.eta > 0.0 && cfg.eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
    const double scale = cfg.units == Units::zero_point ? 1.0 / std::sqrt(cfg.eta) : 1.0;
    double hw = cfg.half_width;
    if (hw <= 0.0) {
        double m2 = 0.0;
        for (std::size_t t = 0; t < e.X0.size(); ++t) m2 += e.X0[t] * e.X0[t] + e.P0[t] * e.P0[t];
        hw = 5.0 * std::sqrt(m2 / (2.0 * static_cast<double>(e.X0.size()))) * scale;
    }
    const std::size_t nb = cfg.bins;
    const double sp = 2.0 * hw / static_cast<double>(nb - 1);
    std::vector<double> counts(nb * nb, 0.0);
    for (std::size_t t = 0; t < e.X0.size(); ++t) {
        const double ix = std::floor((e.X0[t] * scale + hw + 0.5 * sp) / sp);
        const double ip = std::floor((e.P0[t] * scale + hw + 0.5 * sp) / sp);
        if (ix < 0 || ip < 0 || ix >= static_cast<double>(nb) || ip >= static_cast<double>(nb)) continue;
        counts[static_cast<std::size_t>(ix) * nb + static_cast<std::size_t>(ip)] += 1.0;
    }
    const double norm = 1.0 / (static_cast<double>(e.X0.size()) * sp * sp);
    for (double& c : counts) c *= norm;
    return PhaseSpaceGrid(hw, nb, s_from_eta(cfg.eta), cfg.units, std::move(counts));
}

}  // namespace phonon_forge
