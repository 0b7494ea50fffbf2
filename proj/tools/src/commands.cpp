#include "phonon_forge_cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

#include "phonon_forge/ensemble_io.hpp"
#include "phonon_forge/error.hpp"
#include "phonon_forge/heralding_budget.hpp"
#include "phonon_forge/output.hpp"
#include "phonon_forge/random.hpp"

namespace phonon_forge::cli {

namespace {

std::string g(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double default_nbar(const RunConfig& cfg) {
    const auto& p = cfg.sim.params;
    return cooled_occupation(p, cooperativity(p, cfg.sim.G()));
}

StateSpec state_from(const RunConfig& cfg, const StateArgs& a) {
    if (a.n < 0) throw ConfigError("--n must be >= 0");
    StateSpec s;
    s.n = a.n;
    s.eta = a.eta.value_or(cfg.sim.params.eta_total);
    s.nbar = a.nbar ? *a.nbar : default_nbar(cfg);
    s.validate();
    return s;
}

std::string stem_name(const char* prefix, int n) { return std::string(prefix) + "_n" + std::to_string(n); }

int order_of(HeraldKind k) {
    switch (k) {
        case HeraldKind::single: return 1;
        case HeraldKind::coincidence: return 2;
        default: return 0;
    }
}

void wrote(std::ostream& out, const std::filesystem::path& p) { out << "wrote " << p.string() << '\n'; }

}  // namespace

void cmd_wigner(const RunConfig& cfg, const StateArgs& args, std::ostream& out) {
    const StateSpec st = state_from(cfg, args);
    GridConfig gc;
    gc.npts = cfg.grid.npts;
    gc.half_width = cfg.grid.half_width;
    gc.units = cfg.grid.units;
    gc.s_override = cfg.grid.s;
    const PhaseSpaceGrid grid = wigner_s(st, gc);

    const auto wv = wigner_variances(st, grid.units(), grid.s_param());
    JsonOut extra = JsonOut::object();
    extra.set("n", st.n)
        .set("nbar", st.nbar)
        .set("eta", st.eta)
        .set("eta_nbar", st.eta_nbar())
        .set("exact_ring_radius", exact_ring_radius(st.n, wv.p, wv.kernel));
    if ((st.n == 1 || st.n == 2) && !cfg.grid.s) {
        const auto rr = ring_radius(st.n, st.eta_nbar());
        const double scale = grid.units() == Units::zero_point ? 1.0 / std::sqrt(st.eta) : 1.0;
        extra.set("marginal_max", rr.marginal_max * scale)
            .set("sqrt2_marginal_max", rr.wigner_radius * scale)
            .set("is_nongaussian", rr.is_nongaussian);
    }

    const auto stem = cfg.output_dir / stem_name("wigner", st.n);
    write_grid(stem, grid, std::move(extra));
    const auto mpath = cfg.output_dir / (stem_name("wigner", st.n) + "_marginal.csv");
    write_marginal_csv(mpath, marginal_from_grid(grid));

    out << "wigner n=" << st.n << " eta=" << g(st.eta) << " nbar=" << g(st.nbar) << " s=" << g(grid.s_param(), 5)
        << " units=" << to_string(grid.units()) << '\n';
    out << "grid " << grid.npts() << "x" << grid.npts() << " half_width=" << g(grid.half_width())
        << " argmax_radius=" << g(grid.argmax_radius()) << '\n';
    wrote(out, stem.string() + ".csv");
    wrote(out, stem.string() + ".json");
    wrote(out, mpath);
}

void cmd_marginal(const RunConfig& cfg, const StateArgs& args, std::ostream& out) {
    const StateSpec st = state_from(cfg, args);
    const Units units = cfg.grid.units;
    const double s = cfg.grid.s ? *cfg.grid.s : s_from_eta(st.eta);
    const double hw = cfg.grid.half_width ? *cfg.grid.half_width : default_half_width(st, units, s);
    const auto wv = wigner_variances(st, units, s);
    const auto xs = linspace(-hw, hw, cfg.grid.npts);
    const Marginal m =
        sample_marginal(xs, true, [&](double x) { return smoothed_marginal(wv.p, wv.kernel, st.n, x); });

    const auto path = cfg.output_dir / (stem_name("marginal", st.n) + ".csv");
    write_marginal_csv(path, m);
    out << "marginal n=" << st.n << " eta=" << g(st.eta) << " nbar=" << g(st.nbar) << " s=" << g(s, 5)
        << " units=" << to_string(units) << '\n';
    out << "variance=" << g(m.variance()) << " integral=" << g(m.integral()) << '\n';
    wrote(out, path);
}

void cmd_variance(const RunConfig& cfg, int n, std::size_t npts, std::ostream& out) {
    if (n != 1 && n != 2) throw ConfigError("--n must be 1 or 2");
    if (npts < 3) throw ConfigError("--npts must be >= 3");
    const auto& p = cfg.sim.params;
    const double gamma_eff = effective_linewidth(p, cooperativity(p, cfg.sim.G()));
    const double span = 5.0 / gamma_eff;
    const auto taus = linspace(-span, span, npts);
    VarianceCurve curve = heralded_variance_curve(p, n, taus);
    if (cfg.grid.units == Units::zero_point) curve = to_zero_point(curve, p.eta_total);

    const auto path = cfg.output_dir / (stem_name("variance", n) + ".csv");
    write_curve_csv(path, curve);
    const double base = 1.0 + p.eta_total * p.nbar_th;
    const double peak = heralded_variance(p, n, 0.0);
    out << "variance n=" << n << " tau in [-" << g(span) << ", " << g(span) << "] s, units=" << to_string(cfg.grid.units)
        << '\n';
    out << "heterodyne baseline=" << g(base) << " peak=" << g(peak) << " ratio=" << g((peak - 1.0) / (base - 1.0), 12)
        << '\n';
    wrote(out, path);
}

HistogramComparison compare_histogram(const PhaseSpaceGrid& hist, std::size_t samples, int n, double eta_nbar,
                                      double eta) {
    StateSpec st;
    st.n = n;
    st.eta = eta;
    st.nbar = std::max(eta_nbar, 1e-9) / eta;
    const double s = s_from_eta(eta);
    const double sp = hist.spacing();
    constexpr int kSub = 5;
    HistogramComparison c;
    for (std::size_t i = 0; i < hist.npts(); ++i) {
        for (std::size_t j = 0; j < hist.npts(); ++j) {
            double w = 0.0;
            for (int a = 0; a < kSub; ++a)
                for (int b = 0; b < kSub; ++b) {
                    const double x = hist.coord(i) + sp * ((a + 0.5) / kSub - 0.5);
                    const double y = hist.coord(j) + sp * ((b + 0.5) / kSub - 0.5);
                    w += wigner_s_value(st, hist.units(), s, x, y);
                }
            const double q = w / (kSub * kSub) * sp * sp;
            c.l1 += std::abs(hist.at(i, j) * sp * sp - q);
            c.noise_floor += std::sqrt(2.0 * q * (1.0 - q) / (std::numbers::pi * static_cast<double>(samples)));
        }
    }
    return c;
}

void cmd_simulate(const RunConfig& rc, std::ostream& out) {
    const SimConfig& cfg = rc.sim;
    const auto& p = cfg.params;
    const auto& opts = rc.simulate.ensemble;
    const int order = order_of(opts.kind);
    const double target = 1.0 + p.eta_total * p.nbar_th;

    // Calibration anchors: vacuum (no coupling) and the unheralded thermal state.
    SimConfig a = cfg;
    a.n_traces = rc.simulate.anchor_traces;
    EnsembleOptions ao;
    ao.kind = HeraldKind::none;
    ao.keep_traces = false;
    a.coupling = 0.0;
    a.seed = derive_seed(rc.seed, 500, 0);
    const double vac = mean_of(ensemble_variance(simulate_ensemble(a, ao)).values);
    a.coupling = cfg.coupling;
    a.seed = derive_seed(rc.seed, 500, 1);
    const double therm = mean_of(ensemble_variance(simulate_ensemble(a, ao)).values);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rc.simulate.anchor_traces));
    const double vac_tol = 0.6 * scale, therm_tol = 1.2 * scale;
    out << "calibration vacuum=" << g(vac) << " (1 +- " << g(vac_tol, 3) << ") thermal=" << g(therm) << " ("
        << g(target) << " +- " << g(therm_tol * 100.0, 3) << "%)\n";
    if (std::abs(vac - 1.0) > vac_tol)
        throw NumericalError("vacuum calibration anchor failed: variance " + g(vac) + ", expected 1");
    if (std::abs(therm / target - 1.0) > therm_tol)
        throw NumericalError("thermal calibration anchor failed: variance " + g(therm) + ", expected " + g(target));

    const TraceEnsemble e = simulate_ensemble(cfg, opts);
    const VarianceCurve curve = ensemble_variance(e);
    const PeakSummary ps = peak_ratio(curve);

    HistogramConfig hc;
    hc.bins = rc.simulate.histogram_bins;
    hc.units = rc.grid.units;
    hc.eta = p.eta_total;
    const PhaseSpaceGrid hist = herald_histogram(e, hc);
    const double eta_nbar_eff = ps.baseline - 1.0;
    const auto cmp = compare_histogram(hist, e.n_traces, order, eta_nbar_eff, p.eta_total);

    const std::string kind = to_string(opts.kind);
    const auto stem = rc.output_dir / ("simulate_" + kind);
    JsonOut meta = JsonOut::object();
    meta.set("seed", rc.seed)
        .set("model", to_string(cfg.model))
        .set("demod_filter", to_string(cfg.demod_filter))
        .set("demod_bandwidth_hz", cfg.demod_bandwidth)
        .set("G_rad_per_s", cfg.G());
    write_ensemble(stem, e, meta);
    const auto vpath = stem.string() + "_variance.csv";
    write_curve_csv(vpath, curve);
    JsonOut hextra = JsonOut::object();
    hextra.set("samples", static_cast<std::uint64_t>(e.n_traces)).set("eta_nbar_eff", eta_nbar_eff);
    write_grid(stem.string() + "_histogram", hist, std::move(hextra));

    JsonOut report = JsonOut::object();
    report.set("herald", kind)
        .set("sampling", to_string(opts.sampling))
        .set("model", to_string(cfg.model))
        .set("demod_filter", to_string(cfg.demod_filter))
        .set("demod_bandwidth_hz", cfg.demod_bandwidth)
        .set("n_traces", static_cast<std::uint64_t>(e.n_traces))
        .set("seed", rc.seed);
    JsonOut anchors = JsonOut::object();
    anchors.set("vacuum_variance", vac)
        .set("vacuum_tolerance", vac_tol)
        .set("thermal_variance", therm)
        .set("thermal_target", target)
        .set("thermal_relative_tolerance", therm_tol);
    report.set("anchors", std::move(anchors));

    JsonOut analytic = JsonOut::object();
    analytic.set("baseline", target);
    if (order > 0) {
        const double peak = heralded_variance(p, order, 0.0);
        analytic.set("peak", peak).set("ratio", (peak - 1.0) / (target - 1.0));
    } else {
        analytic.set("peak", target).set("ratio", JsonOut());
    }
    report.set("analytic", std::move(analytic));
    JsonOut emp = JsonOut::object();
    emp.set("baseline", ps.baseline)
        .set("peak", ps.peak)
        .set("peak_tau_s", ps.peak_tau)
        .set("ratio", order > 0 ? JsonOut(ps.ratio) : JsonOut())
        .set("acceptance", e.acceptance)
        .set("gates_simulated", e.gates_simulated);
    report.set("empirical", std::move(emp));
    JsonOut h = JsonOut::object();
    h.set("bins", static_cast<std::uint64_t>(hist.npts()))
        .set("half_width", hist.half_width())
        .set("units", to_string(hist.units()))
        .set("l1_vs_closed_form", cmp.l1)
        .set("l1_noise_floor", cmp.noise_floor);
    report.set("histogram", std::move(h));

    const BudgetReport budget = budget_report(p, cfg.spad, cfg.G());
    out << "ensemble " << e.n_traces << " " << kind << " traces (" << to_string(opts.sampling) << ", "
        << to_string(cfg.model) << ", " << to_string(cfg.demod_filter) << " " << g(cfg.demod_bandwidth / 1e6)
        << " MHz)\n";
    out << "variance baseline=" << g(ps.baseline) << " peak=" << g(ps.peak);
    if (order > 0) out << " ratio=" << g(ps.ratio, 5) << " (analytic " << order + 1 << ")";
    out << '\n';
    out << "histogram L1=" << g(cmp.l1, 4) << " (noise floor " << g(cmp.noise_floor, 4) << ")\n";

    std::string herald_path;
    if (rc.simulate.click_gates > 0) {
        SimConfig c = cfg;
        c.seed = derive_seed(rc.seed, 501);
        const ClickStream cs = simulate_click_stream(c, rc.simulate.click_gates);
        double clicks[2] = {0.0, 0.0}, darks[2] = {0.0, 0.0};
        for (const auto& ev : cs.events) {
            clicks[ev.detector] += 1.0;
            if (ev.is_dark) darks[ev.detector] += 1.0;
        }
        const auto singles = herald_select(cs, HeraldKind::single);
        const auto coinc = herald_select(cs, HeraldKind::coincidence);
        const double T = cs.duration();
        JsonOut ck = JsonOut::object();
        ck.set("gates", cs.gates.count)
            .set("duration_s", T)
            .set("click_rate_d0_per_s", clicks[0] / T)
            .set("click_rate_d1_per_s", clicks[1] / T)
            .set("dark_clicks_d0", darks[0])
            .set("dark_clicks_d1", darks[1])
            .set("single_herald_rate_per_s", static_cast<double>(singles.size()) / T)
            .set("coincidence_rate_per_s", static_cast<double>(coinc.size()) / T)
            .set("budget_click_rate_per_s", budget.click_rate)
            .set("budget_coincidence_rate_per_s", budget.coincidence_rate);
        report.set("clicks", std::move(ck));
        out << "clicks d0=" << g(clicks[0] / T, 4) << "/s d1=" << g(clicks[1] / T, 4)
            << "/s coincidences=" << g(static_cast<double>(coinc.size()) / T, 4) << "/s (closed form "
            << g(budget.click_rate, 4) << ", " << g(budget.coincidence_rate, 4) << ")\n";
        herald_path = stem.string() + "_heralds.csv";
        write_heralds_csv(herald_path, opts.kind == HeraldKind::coincidence ? coinc : singles);
    }
    report.set("budget", to_json(budget));
    const auto rpath = stem.string() + "_report.json";
    write_text(rpath, report.dump());

    wrote(out, stem.string() + ".bin");
    wrote(out, stem.string() + ".json");
    wrote(out, vpath);
    wrote(out, stem.string() + "_histogram.csv");
    wrote(out, stem.string() + "_histogram.json");
    if (!herald_path.empty()) wrote(out, herald_path);
    wrote(out, rpath);
}

void cmd_budget(const RunConfig& cfg, std::ostream& out) {
    const auto& p = cfg.sim.params;
    const auto& spad = cfg.sim.spad;
    const BudgetReport r = budget_report(p, spad, cfg.sim.G());
    JsonOut j = JsonOut::object();
    j.set("params", to_json(p)).set("spad", to_json(spad)).set("budget", to_json(r));
    const auto path = cfg.output_dir / "budget.json";
    write_text(path, j.dump());

    const auto row = [&](const char* name, double v, const char* unit) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-26s %14.6g  %s\n", name, v, unit);
        out << buf;
    };
    row("G/2pi", r.G / kTwoPi, "Hz");
    row("cavity flux F_cav", r.F_cav, "1/s");
    row("detector rate R_det", r.R_det, "1/s");
    row("counts per gate N_det", r.N_det, "");
    row("singles (continuous)", r.singles_rate_pre_duty, "1/s");
    row("singles N_det*gate_rate", r.singles_rate, "1/s");
    row("click rate per detector", r.click_rate, "1/s");
    row("coincidence rate", r.coincidence_rate, "1/s");
    row("dark fraction", r.dark_fraction, "");
    row("duty cycle", r.duty_cycle, "");
    out << "multi-photon risk: " << (r.multi_photon_risk ? "yes" : "no") << '\n';
    wrote(out, path);
}

void cmd_characterize(const RunConfig& cfg, std::ostream& out) {
    const auto& p = cfg.sim.params;
    const auto& cs = cfg.characterize;
    if (cs.fit && cs.powers.size() < 2) throw ConfigError("the g0 fit needs at least two pump powers");
    std::vector<CharacterizationRow> rows;
    for (double P : cs.powers) rows.push_back(characterize_at(p, P));

    std::vector<std::vector<double>> cols(6);
    JsonOut jrows = JsonOut::array();
    char buf[160];
    std::snprintf(buf, sizeof buf, "%10s %12s %12s %8s %10s %14s\n", "P_in[mW]", "N_cav", "G/2pi[MHz]", "C", "nbar",
                  "gamma_eff/2pi[MHz]");
    out << buf;
    for (const auto& r : rows) {
        cols[0].push_back(r.P_in);
        cols[1].push_back(r.n_cav);
        cols[2].push_back(r.G);
        cols[3].push_back(r.C);
        cols[4].push_back(r.nbar);
        cols[5].push_back(r.gamma_eff);
        JsonOut o = JsonOut::object();
        o.set("P_in_w", r.P_in)
            .set("n_cav", r.n_cav)
            .set("G_rad_per_s", r.G)
            .set("C", r.C)
            .set("nbar", r.nbar)
            .set("gamma_eff_rad_per_s", r.gamma_eff);
        jrows.push(std::move(o));
        std::snprintf(buf, sizeof buf, "%10.4g %12.5g %12.5g %8.4f %10.5g %14.5g\n", r.P_in * 1e3, r.n_cav,
                      r.G / kTwoPi / 1e6, r.C, r.nbar, r.gamma_eff / kTwoPi / 1e6);
        out << buf;
    }
    const auto cpath = cfg.output_dir / "characterize.csv";
    write_csv(cpath, {"P_in_w", "n_cav", "G_rad_per_s", "C", "nbar", "gamma_eff_rad_per_s"}, cols);

    JsonOut j = JsonOut::object();
    j.set("params", to_json(p)).set("rows", std::move(jrows));
    if (cs.fit) {
        const G0Fit f = fit_g0(p, cs.powers, cs.spectrum, cfg.threads);
        JsonOut jf = JsonOut::object();
        jf.set("model", to_string(cs.spectrum.model))
            .set("segments", static_cast<std::uint64_t>(cs.spectrum.segments))
            .set("segment", static_cast<std::uint64_t>(cs.spectrum.segment))
            .set("gamma_eff_rad_per_s", f.gamma_eff)
            .set("g0_rad_per_s", f.g0)
            .set("gamma_rad_per_s", f.gamma)
            .set("g0_relative_error", f.g0 / p.g0 - 1.0);
        j.set("fit", std::move(jf));
        out << "fit (" << to_string(cs.spectrum.model) << ") g0/2pi=" << g(f.g0 / kTwoPi, 5) << " Hz (configured "
            << g(p.g0 / kTwoPi, 5) << " Hz, " << g(100.0 * (f.g0 / p.g0 - 1.0), 3)
            << "%) gamma/2pi=" << g(f.gamma / kTwoPi / 1e6, 5) << " MHz\n";
    }
    const auto jpath = cfg.output_dir / "characterize.json";
    write_text(jpath, j.dump());
    wrote(out, cpath);
    wrote(out, jpath);
}

}  // namespace phonon_forge::cli
