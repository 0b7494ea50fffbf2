#include "phonon_forge_cli/run_config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phonon_forge/error.hpp"

namespace phonon_forge::cli {

namespace {

using nlohmann::json;

// Reads the keys of one JSON object and complains about the rest.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    void number(const char* key, double& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) throw ConfigError(where(key) + ": must be finite");
    }

    // Frequencies in the file are rate / 2pi.
    void rate(const char* key, double& out) {
        double hz = out / kTwoPi;
        number(key, hz);
        out = kTwoPi * hz;
    }

    template <class Int>
    void count(const char* key, Int& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ConfigError(where(key) + ": expected a non-negative integer");
        const auto u = v.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max()))
            throw ConfigError(where(key) + ": value too large");
        out = static_cast<Int>(u);
    }

    void flag(const char* key, bool& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
        out = v.get<bool>();
    }

    std::optional<std::string> text(const char* key) {
        if (!has(key)) return std::nullopt;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const char* key, std::vector<double> fallback) {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
        std::vector<double> xs;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
            xs.push_back(e.get<double>());
        }
        return xs;
    }

    std::optional<Section> child(const char* key) {
        if (!has(key)) return std::nullopt;
        return Section(j_.at(key), where(key));
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw ConfigError("unknown key " + where(item.key().c_str()));
    }

private:
    std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_params(Section s, SystemParams& p) {
    s.rate("kappa1_hz", p.kappa1);
    s.rate("kappa1_ext_hz", p.kappa1_ext);
    s.rate("kappa2_hz", p.kappa2);
    s.rate("kappa2_ext_hz", p.kappa2_ext);
    s.rate("gamma_hz", p.gamma);
    s.rate("g0_hz", p.g0);
    s.rate("f_m_hz", p.omega_m);
    s.rate("f_het_hz", p.omega_het);
    s.number("nbar_th", p.nbar_th);
    s.number("P_in_w", p.P_in);
    s.number("wavelength_m", p.wavelength);
    s.number("eta_total", p.eta_total);
    s.finish();
}

void read_spad(Section s, SpadConfig& d) {
    s.number("gate_rate_hz", d.gate_rate);
    s.number("gate_len_s", d.gate_len);
    s.number("dead_time_s", d.dead_time);
    s.number("dark_rate_hz", d.dark_rate);
    s.number("quantum_eff", d.quantum_eff);
    if (s.has("arm_efficiencies")) {
        const auto xs = s.numbers("arm_efficiencies", {});
        if (xs.size() != 4) throw ConfigError("spad.arm_efficiencies: expected 4 numbers");
        for (std::size_t i = 0; i < 4; ++i) d.arm_efficiencies[i] = xs[i];
    }
    s.finish();
}

void read_sim(Section s, RunConfig& rc) {
    SimConfig& c = rc.sim;
    s.number("dt_s", c.dt);
    s.count("trace_len", c.trace_len);
    s.number("sample_rate_hz", c.sample_rate);
    s.count("n_traces", c.n_traces);
    s.number("demod_bandwidth_hz", c.demod_bandwidth);
    if (auto f = s.text("demod_filter")) c.demod_filter = demod_filter_from_string(f->c_str());
    s.count("decimation", c.decimation);
    if (auto m = s.text("model")) c.model = field_model_from_string(m->c_str());
    if (s.has("coupling_hz")) {
        double g = 0.0;
        s.rate("coupling_hz", g);
        c.coupling = g;
    }
    s.count("pad", c.pad);
    auto& o = rc.simulate;
    if (auto k = s.text("herald")) o.ensemble.kind = herald_kind_from_string(k->c_str());
    if (auto k = s.text("sampling")) o.ensemble.sampling = herald_sampling_from_string(k->c_str());
    s.flag("keep_traces", o.ensemble.keep_traces);
    s.count("histogram_bins", o.histogram_bins);
    s.count("click_gates", o.click_gates);
    s.count("anchor_traces", o.anchor_traces);
    s.finish();
}

void read_grid(Section s, GridSettings& g) {
    s.count("npts", g.npts);
    if (s.has("half_width")) {
        double hw = 0.0;
        s.number("half_width", hw);
        g.half_width = hw;
    }
    if (auto u = s.text("units")) g.units = units_from_string(u->c_str());
    if (s.has("s")) {
        double v = 0.0;
        s.number("s", v);
        g.s = v;
    }
    s.finish();
}

void read_characterize(Section s, CharacterizeSettings& c) {
    c.powers = s.numbers("powers_w", c.powers);
    s.flag("fit", c.fit);
    s.number("sample_period_s", c.spectrum.sample_period);
    s.count("segment", c.spectrum.segment);
    s.count("segments", c.spectrum.segments);
    if (auto m = s.text("fit_model")) c.spectrum.model = field_model_from_string(m->c_str());
    s.finish();
}

}  // namespace

void RunConfig::finalize() {
    sim.seed = seed;
    sim.threads = threads;
    characterize.spectrum.seed = seed;
    sim.validate();

    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    if (grid.npts < 3) throw ConfigError("grid.npts must be >= 3");
    if (grid.half_width && !(*grid.half_width > 0.0)) throw ConfigError("grid.half_width must be > 0");
    if (grid.s && !(*grid.s < 1.0)) throw ConfigError("grid.s must be < 1");
    if (simulate.histogram_bins < 3 || simulate.histogram_bins % 2 == 0)
        throw ConfigError("sim.histogram_bins must be odd and >= 3");
    if (simulate.anchor_traces < 16) throw ConfigError("sim.anchor_traces must be >= 16");
    if (characterize.powers.empty()) throw ConfigError("characterize.powers_w must not be empty");
    for (double p : characterize.powers)
        if (!(p >= 0.0)) throw ConfigError("characterize.powers_w entries must be >= 0");
    if (!(characterize.spectrum.sample_period > 0.0))
        throw ConfigError("characterize.sample_period_s must be > 0");
    if (characterize.spectrum.segment < 64) throw ConfigError("characterize.segment must be >= 64");
    if (characterize.spectrum.segments < 1) throw ConfigError("characterize.segments must be >= 1");
}

RunConfig parse_run_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig rc;
    Section top(doc, "");
    if (auto s = top.child("params")) read_params(*s, rc.sim.params);
    if (auto s = top.child("spad")) read_spad(*s, rc.sim.spad);
    if (auto s = top.child("sim")) read_sim(*s, rc);
    if (auto s = top.child("grid")) read_grid(*s, rc.grid);
    if (auto s = top.child("characterize")) read_characterize(*s, rc.characterize);
    if (auto d = top.text("output_dir")) rc.output_dir = *d;
    top.count("seed", rc.seed);
    top.count("threads", rc.threads);
    top.finish();
    return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

}  // namespace phonon_forge::cli
