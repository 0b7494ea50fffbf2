#include "phonon_forge_cli/app.hpp"

#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phonon_forge/error.hpp"
#include "phonon_forge_cli/commands.hpp"
#include "phonon_forge_cli/run_config.hpp"

namespace phonon_forge::cli {

namespace {

const std::vector<std::string> kUnits{"zero_point", "heterodyne_vacuum"};
const std::vector<std::string> kModels{"coupled", "first_order", "adiabatic"};

struct GridFlags {
    CLI::Option* npts = nullptr;
    CLI::Option* half_width = nullptr;
    CLI::Option* units = nullptr;
    CLI::Option* s = nullptr;
    std::size_t npts_v = 0;
    double half_width_v = 0.0;
    std::string units_v;
    double s_v = 0.0;

    void add(CLI::App* sub, bool with_s) {
        npts = sub->add_option("--npts", npts_v, "Grid points per axis");
        half_width = sub->add_option("--half-width", half_width_v, "Grid half width in the chosen units");
        units = sub->add_option("--units", units_v, "zero_point or heterodyne_vacuum")->check(CLI::IsMember(kUnits));
        if (with_s) s = sub->add_option("--s", s_v, "Override the s parameter (default 1 - 2/eta)");
    }

    void apply(GridSettings& g) const {
        if (npts && npts->count()) g.npts = npts_v;
        if (half_width && half_width->count()) g.half_width = half_width_v;
        if (units && units->count()) g.units = units_from_string(units_v.c_str());
        if (s && s->count()) g.s = s_v;
    }
};

struct StateFlags {
    StateArgs args;
    CLI::Option* eta = nullptr;
    CLI::Option* nbar = nullptr;
    double eta_v = 0.0, nbar_v = 0.0;

    void add(CLI::App* sub) {
        sub->add_option("--n", args.n, "Number of subtracted phonons")->capture_default_str();
        eta = sub->add_option("--eta", eta_v, "Overall detection efficiency (default from config)");
        nbar = sub->add_option("--nbar", nbar_v, "Initial thermal occupation (default: cooled occupation)");
    }

    StateArgs resolve() const {
        StateArgs a = args;
        if (eta->count()) a.eta = eta_v;
        if (nbar->count()) a.nbar = nbar_v;
        return a;
    }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Heralded phonon-subtraction emulator: phase-space grids, heralded variance, trace "
                 "simulation and count-rate budget.",
                 "phonon_forge"};
    app.require_subcommand(1);

    std::string config_path, output_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    app.add_option("-c,--config", config_path, "JSON run configuration (defaults reproduce the reference device)");
    auto* o_out = app.add_option("-o,--output-dir", output_dir, "Directory for output files");
    auto* o_seed = app.add_option("--seed", seed, "Master seed");
    auto* o_threads =
        app.add_option("--threads", threads, "Worker threads (0: PHONON_FORGE_THREADS or hardware concurrency)");

    auto* wig = app.add_subcommand("wigner", "s-parameterized Wigner function of an n-subtracted thermal state");
    StateFlags wig_state;
    GridFlags wig_grid;
    wig_state.add(wig);
    wig_grid.add(wig, true);

    auto* mar = app.add_subcommand("marginal", "Closed-form quadrature marginal of the measured state");
    StateFlags mar_state;
    GridFlags mar_grid;
    mar_state.add(mar);
    mar_grid.add(mar, true);

    auto* var = app.add_subcommand("variance", "Analytic heralded heterodyne variance over +-5/gamma_eff");
    int var_n = 1;
    std::size_t var_npts = 401;
    GridFlags var_grid;
    var->add_option("--n", var_n, "Herald order (1 or 2)")->capture_default_str();
    var->add_option("--npts", var_npts, "Number of delays")->capture_default_str();
    var_grid.units = var->add_option("--units", var_grid.units_v, "zero_point or heterodyne_vacuum")
                         ->check(CLI::IsMember(kUnits));

    auto* sim = app.add_subcommand("simulate", "Simulate heralded heterodyne traces and compare with the closed forms");
    std::string herald, sampling, model, filter;
    std::size_t n_traces = 0, trace_len = 0;
    std::uint64_t click_gates = 0;
    double bandwidth = 0.0;
    bool no_traces = false;
    auto* o_herald = sim->add_option("--herald", herald, "none, single or coincidence")
                         ->check(CLI::IsMember({"none", "single", "coincidence"}));
    auto* o_ntr = sim->add_option("--n-traces", n_traces, "Number of traces");
    auto* o_samp = sim->add_option("--sampling", sampling, "conditional or realtime")
                       ->check(CLI::IsMember({"conditional", "realtime"}));
    auto* o_model = sim->add_option("--model", model, "Field model")->check(CLI::IsMember(kModels));
    auto* o_filter = sim->add_option("--filter", filter, "Demodulation low-pass: butterworth4 or boxcar")
                         ->check(CLI::IsMember({"butterworth4", "boxcar"}));
    auto* o_bw = sim->add_option("--bandwidth", bandwidth, "Demodulation bandwidth (Hz)");
    auto* o_len = sim->add_option("--trace-len", trace_len, "Raw samples kept per trace");
    auto* o_gates = sim->add_option("--click-gates", click_gates, "Free-running gates for the rate check (0 disables)");
    sim->add_flag("--no-traces", no_traces, "Store only herald-instant quadratures and per-lag moments");
    GridFlags sim_grid;
    sim_grid.units = sim->add_option("--units", sim_grid.units_v, "Histogram units")->check(CLI::IsMember(kUnits));

    auto* bud = app.add_subcommand("budget", "Closed-form count-rate budget of the heralding arm");

    auto* chr = app.add_subcommand("characterize", "Cooperativity, occupation and linewidth across pump powers");
    std::vector<double> powers_mw;
    bool fit = false;
    std::string fit_model;
    std::size_t segments = 0;
    auto* o_pow = chr->add_option("--powers-mw", powers_mw, "Pump powers in mW")->delimiter(',');
    chr->add_flag("--fit", fit, "Recover g0 from simulated spectra");
    auto* o_fm = chr->add_option("--fit-model", fit_model, "Field model for the fit")->check(CLI::IsMember(kModels));
    auto* o_seg = chr->add_option("--segments", segments, "Welch segments per power");

    for (auto* sub : {wig, mar, var, sim, bud, chr}) sub->fallthrough();

    try {
        app.parse(argc, argv);

        RunConfig rc = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        if (o_out->count()) rc.output_dir = output_dir;
        if (o_seed->count()) rc.seed = seed;
        if (o_threads->count()) rc.threads = threads;
        if (*wig) wig_grid.apply(rc.grid);
        if (*mar) mar_grid.apply(rc.grid);
        if (*var) var_grid.apply(rc.grid);
        if (*sim) {
            auto& s = rc.simulate;
            if (o_herald->count()) s.ensemble.kind = herald_kind_from_string(herald.c_str());
            if (o_ntr->count()) rc.sim.n_traces = n_traces;
            if (o_samp->count()) s.ensemble.sampling = herald_sampling_from_string(sampling.c_str());
            if (o_model->count()) rc.sim.model = field_model_from_string(model.c_str());
            if (o_filter->count()) rc.sim.demod_filter = demod_filter_from_string(filter.c_str());
            if (o_bw->count()) rc.sim.demod_bandwidth = bandwidth;
            if (o_len->count()) rc.sim.trace_len = trace_len;
            if (o_gates->count()) s.click_gates = click_gates;
            if (no_traces) s.ensemble.keep_traces = false;
            sim_grid.apply(rc.grid);
        }
        if (*chr) {
            auto& c = rc.characterize;
            if (o_pow->count()) {
                c.powers.clear();
                for (double mw : powers_mw) c.powers.push_back(mw * 1e-3);
            }
            if (fit) c.fit = true;
            if (o_fm->count()) c.spectrum.model = field_model_from_string(fit_model.c_str());
            if (o_seg->count()) c.spectrum.segments = segments;
        }
        rc.finalize();

        if (*wig) cmd_wigner(rc, wig_state.resolve(), out);
        else if (*mar) cmd_marginal(rc, mar_state.resolve(), out);
        else if (*var) cmd_variance(rc, var_n, var_npts, out);
        else if (*sim) cmd_simulate(rc, out);
        else if (*bud) cmd_budget(rc, out);
        else if (*chr) cmd_characterize(rc, out);
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    } catch (const GridError& e) {
        err << "error: " << e.what() << " (suggested --half-width " << e.suggested_half_width() << ")\n";
        return 3;
    } catch (const TruncationError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        // ConfigError, DomainError, UnsupportedError
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace phonon_forge::cli
