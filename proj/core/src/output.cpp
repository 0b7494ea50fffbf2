#include "phonon_forge/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "phonon_forge/error.hpp"

namespace phonon_forge {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

JsonOut::JsonOut(const std::vector<double>& xs) : v_(Array{}) {
    auto& a = std::get<Array>(v_);
    a.reserve(xs.size());
    for (double x : xs) a.emplace_back(x);
}

JsonOut& JsonOut::set(const std::string& key, JsonOut value) {
    auto& o = std::get<Object>(v_);
    for (auto& kv : o)
        if (kv.first == key) {
            kv.second = std::move(value);
            return *this;
        }
    o.emplace_back(key, std::move(value));
    return *this;
}

JsonOut& JsonOut::push(JsonOut value) {
    std::get<Array>(v_).push_back(std::move(value));
    return *this;
}

namespace {

void escape(std::string& out, const std::string& s) {
    out += '"';
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    out += '"';
}

}  // namespace

void JsonOut::write(std::string& out, int indent) const {
    const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
    const std::string close(static_cast<std::size_t>(indent), ' ');
    if (std::holds_alternative<std::nullptr_t>(v_)) {
        out += "null";
    } else if (auto b = std::get_if<bool>(&v_)) {
        out += *b ? "true" : "false";
    } else if (auto i = std::get_if<std::int64_t>(&v_)) {
        out += std::to_string(*i);
    } else if (auto d = std::get_if<double>(&v_)) {
        out += std::isfinite(*d) ? format_double(*d) : "null";
    } else if (auto s = std::get_if<std::string>(&v_)) {
        escape(out, *s);
    } else if (auto o = std::get_if<Object>(&v_)) {
        if (o->empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        for (std::size_t k = 0; k < o->size(); ++k) {
            out += pad;
            escape(out, (*o)[k].first);
            out += ": ";
            (*o)[k].second.write(out, indent + 2);
            out += k + 1 < o->size() ? ",\n" : "\n";
        }
        out += close + "}";
    } else if (auto a = std::get_if<Array>(&v_)) {
        if (a->empty()) {
            out += "[]";
            return;
        }
        out += "[";
        for (std::size_t k = 0; k < a->size(); ++k) {
            (*a)[k].write(out, indent + 2);
            if (k + 1 < a->size()) out += ", ";
        }
        out += "]";
    }
}

std::string JsonOut::dump() const {
    std::string out;
    write(out, 0);
    out += '\n';
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + path.string() + " for writing");
    f << content;
    if (!f) throw ConfigError("failed writing " + path.string());
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size()) throw DomainError("csv header and column count differ");
    const std::size_t rows = columns.empty() ? 0 : columns[0].size();
    for (const auto& c : columns)
        if (c.size() != rows) throw DomainError("csv columns differ in length");
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) out += header[j] + (j + 1 < header.size() ? "," : "\n");
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < columns.size(); ++j)
            out += format_double(columns[j][i]) + (j + 1 < columns.size() ? "," : "\n");
    write_text(path, out);
}

void write_curve_csv(const std::filesystem::path& path, const VarianceCurve& curve) {
    write_csv(path, {"tau_s", "variance"}, {curve.taus, curve.values});
}

void write_marginal_csv(const std::filesystem::path& path, const Marginal& m) {
    write_csv(path, {"x", "density"}, {m.xs, m.density});
}

void write_grid(const std::filesystem::path& stem, const PhaseSpaceGrid& g, JsonOut extra) {
    const std::size_t n = g.npts();
    std::string out = "X\\P";
    for (std::size_t j = 0; j < n; ++j) out += "," + format_double(g.coord(j));
    out += '\n';
    for (std::size_t i = 0; i < n; ++i) {
        out += format_double(g.coord(i));
        for (std::size_t j = 0; j < n; ++j) out += "," + format_double(g.at(i, j));
        out += '\n';
    }
    auto csv = stem;
    csv += ".csv";
    write_text(csv, out);
    JsonOut meta = JsonOut::object();
    meta.set("npts", static_cast<std::int64_t>(n))
        .set("half_width", g.half_width())
        .set("spacing", g.spacing())
        .set("units", to_string(g.units()))
        .set("s", g.s_param())
        .set("integral", g.integral())
        .set("argmax_radius", g.argmax_radius())
        .set("layout", "row-major, rows X, columns P");
    meta.set("extra", std::move(extra));
    auto js = stem;
    js += ".json";
    write_text(js, meta.dump());
}

JsonOut to_json(const BudgetReport& r) {
    JsonOut j = JsonOut::object();
    j.set("G_rad_per_s", r.G)
        .set("F_cav_per_s", r.F_cav)
        .set("R_det_per_s", r.R_det)
        .set("N_det_per_gate", r.N_det)
        .set("singles_rate_pre_duty_per_s", r.singles_rate_pre_duty)
        .set("singles_rate_per_s", r.singles_rate)
        .set("total_singles_rate_per_s", r.total_singles_rate)
        .set("click_rate_per_s", r.click_rate)
        .set("coincidence_rate_per_s", r.coincidence_rate)
        .set("dark_fraction", r.dark_fraction)
        .set("duty_cycle", r.duty_cycle)
        .set("multi_photon_risk", r.multi_photon_risk);
    return j;
}

JsonOut to_json(const SystemParams& p) {
    JsonOut j = JsonOut::object();
    j.set("kappa1", p.kappa1)
        .set("kappa1_ext", p.kappa1_ext)
        .set("kappa2", p.kappa2)
        .set("kappa2_ext", p.kappa2_ext)
        .set("gamma", p.gamma)
        .set("g0", p.g0)
        .set("omega_m", p.omega_m)
        .set("omega_het", p.omega_het)
        .set("nbar_th", p.nbar_th)
        .set("P_in", p.P_in)
        .set("wavelength", p.wavelength)
        .set("eta_total", p.eta_total);
    return j;
}

JsonOut to_json(const SpadConfig& s) {
    JsonOut j = JsonOut::object();
    JsonOut arm = JsonOut::array();
    for (double e : s.arm_efficiencies) arm.push(e);
    j.set("gate_rate", s.gate_rate)
        .set("gate_len", s.gate_len)
        .set("dead_time", s.dead_time)
        .set("dark_rate", s.dark_rate)
        .set("quantum_eff", s.quantum_eff)
        .set("arm_efficiencies", std::move(arm));
    return j;
}

}  // namespace phonon_forge
