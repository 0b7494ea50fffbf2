#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "phonon_forge/error.hpp"
#include "phonon_forge/heralding_budget.hpp"
#include "phonon_forge/trace_simulator.hpp"

using namespace phonon_forge;

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

TraceEnsemble unheralded(SimConfig cfg, std::size_t n) {
    cfg.n_traces = n;
    EnsembleOptions o;
    o.kind = HeraldKind::none;
    return simulate_ensemble(cfg, o);
}

}  // namespace

TEST(TraceSimulator, VacuumAnchor) {
    SimConfig cfg;
    cfg.coupling = 0.0;
    cfg.seed = 21;
    const auto e = unheralded(cfg, 400);
    const auto c = ensemble_variance(e);
    EXPECT_NEAR(mean_of(c.values), 1.0, 0.02);
    // X and P uncorrelated at every lag, pooled
    double xp = 0.0;
    for (std::size_t k = 0; k < e.X.size(); ++k) xp += double(e.X[k]) * e.P[k];
    EXPECT_LT(std::abs(xp / static_cast<double>(e.X.size())), 0.02);
}

TEST(TraceSimulator, ThermalAnchor) {
    SimConfig cfg;
    cfg.seed = 22;
    const auto c = ensemble_variance(unheralded(cfg, 400));
    const double target = 1.0 + cfg.params.eta_total * cfg.params.nbar_th;
    EXPECT_NEAR(mean_of(c.values) / target, 1.0, 0.05);
    cfg.params.eta_total = 1e-9;
    EXPECT_NEAR(mean_of(ensemble_variance(unheralded(cfg, 200)).values), 1.0, 0.03);
}

TEST(TraceSimulator, PureToneDemodulatesToConstant) {
    SimConfig cfg;
    const double w = cfg.params.omega_het / cfg.sample_rate;
    const double A = 0.7, phi = 0.4;
    std::vector<double> v(4000);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = A * std::cos(w * static_cast<double>(k) + phi);
    const auto q = demodulate(v, cfg);
    for (std::size_t i = 100; i + 100 < q.X.size(); ++i) {
        EXPECT_NEAR(q.X[i], A * std::cos(phi), 2e-4);
        EXPECT_NEAR(q.P[i], A * std::sin(phi), 2e-4);
    }
}

TEST(TraceSimulator, DemodRejectsBandwidthAboveHet) {
    SimConfig cfg;
    cfg.demod_bandwidth = 250e6;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = SimConfig{};
    cfg.dt = 1.0 / (10.0 * cfg.params.kappa2);
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = SimConfig{};
    cfg.sample_rate = 500e6;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = SimConfig{};
    cfg.coupling = cfg.params.kappa2;
    EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(TraceSimulator, FieldOccupationAndDecay) {
    SimConfig cfg;
    cfg.model = FieldModel::first_order;
    const auto traj = simulate_fields(cfg, 2000000, 5);
    double s = 0.0;
    for (const auto& x : traj.states) s += std::norm(x[0]);
    const double G = cfg.G();
    const double target = correlation(cfg.params, G, 0.0);
    const double n_eff = static_cast<double>(traj.states.size()) * traj.step * cfg.params.gamma;
    EXPECT_LT(std::abs(s / traj.states.size() - target), 3.0 * target / std::sqrt(n_eff));

    cfg.model = FieldModel::coupled;
    const auto t2 = simulate_fields(cfg, 2000000, 6);
    const double ge = effective_linewidth(cfg.params, cooperativity(cfg.params, G));
    const auto lag = static_cast<std::size_t>(std::lround(1.0 / (ge * t2.step)));
    std::complex<double> c0 = 0.0, c1 = 0.0;
    for (std::size_t i = 0; i + lag < t2.states.size(); ++i) {
        c0 += std::norm(t2.states[i][0]);
        c1 += std::conj(t2.states[i][0]) * t2.states[i + lag][0];
    }
    EXPECT_NEAR(std::abs(c1) / std::abs(c0), std::exp(-1.0), 0.1 * std::exp(-1.0));

    cfg.coupling = 0.0;
    for (const auto& x : simulate_fields(cfg, 1000, 7).states) EXPECT_EQ(std::norm(x[0]), 0.0);
}

TEST(TraceSimulator, HeterodyneTraceFromTrajectory) {
    SimConfig cfg;
    const auto traj = simulate_fields(cfg, 400000, 8);
    const auto v = heterodyne_trace(traj, cfg, 9);
    EXPECT_EQ(v.size(), traj.states.size() / cfg.substeps() + (traj.states.size() % cfg.substeps() ? 1 : 0));
    const auto q = demodulate(v, cfg);
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 100; i + 100 < q.X.size(); ++i, ++n) s += q.X[i] * q.X[i] + q.P[i] * q.P[i];
    const double target = 1.0 + cfg.params.eta_total * cfg.params.nbar_th;
    EXPECT_NEAR(s / (2.0 * n) / target, 1.0, 0.05);
}

TEST(TraceSimulator, DarkOnlyClickRate) {
    SimConfig cfg;
    cfg.coupling = 0.0;
    cfg.spad.dark_rate = 1e6;
    const auto cs = simulate_click_stream(cfg, 200000);
    std::size_t per[2] = {0, 0};
    for (const auto& e : cs.events) {
        EXPECT_TRUE(e.is_dark);
        ++per[e.detector];
    }
    const double expect = cfg.spad.dark_probability() * 200000;
    for (auto k : per) EXPECT_LT(std::abs(k - expect), 3.0 * std::sqrt(expect));
    EXPECT_NEAR(expect / cs.duration(), cfg.spad.dark_rate * cfg.spad.duty_cycle(), 1.0);
}

TEST(TraceSimulator, HeraldSelect) {
    ClickStream cs;
    cs.gates = {0.0, 50e3, 3.5e-9, 10};
    cs.events = {{1e-5, 0, 0, false}, {3e-5, 1, 0, false}, {5e-5, 2, 0, false}};
    EXPECT_TRUE(herald_select(cs, HeraldKind::coincidence).empty());
    EXPECT_EQ(herald_select(cs, HeraldKind::single).size(), 3u);
    cs.events.push_back({5e-5, 2, 1, true});
    const auto co = herald_select(cs, HeraldKind::coincidence);
    ASSERT_EQ(co.size(), 1u);
    EXPECT_EQ(co[0].gate, 2u);
    EXPECT_TRUE(co[0].has_dark);
    EXPECT_EQ(herald_select(cs, HeraldKind::single).size(), 2u);
}

TEST(TraceSimulator, DeadTimeInvariant) {
    SimConfig cfg;
    cfg.spad.dark_rate = 1e8;
    cfg.spad.dead_time = 55e-6;
    const auto cs = simulate_click_stream(cfg, 50000);
    double last[2] = {-1.0, -1.0};
    ASSERT_GT(cs.events.size(), 100u);
    for (const auto& e : cs.events) {
        if (last[e.detector] >= 0.0) EXPECT_GE(e.time - last[e.detector], cfg.spad.dead_time);
        last[e.detector] = e.time;
    }
    const std::vector<ClickEvent> raw{{0.0, 0, 0, false}, {1e-6, 1, 0, false}, {2e-5, 2, 0, false}, {1e-6, 1, 1, false}};
    EXPECT_EQ(apply_dead_time(raw, 1.5e-5).size(), 3u);
}

TEST(TraceSimulator, ClickRatesMatchBudget) {
    SimConfig cfg;
    const std::uint64_t gates = 1000000;
    const auto cs = simulate_click_stream(cfg, gates);
    const auto b = budget_report(cfg.params, cfg.spad);
    std::size_t n0 = 0;
    for (const auto& e : cs.events) n0 += e.detector == 0;
    const double expect = b.click_rate / cfg.spad.gate_rate * gates;
    EXPECT_LT(std::abs(n0 - expect), 3.0 * std::sqrt(expect));
    const auto co = herald_select(cs, HeraldKind::coincidence).size();
    const double expect_co = b.coincidence_rate / cfg.spad.gate_rate * gates;
    EXPECT_LT(std::abs(co - expect_co), 3.0 * std::sqrt(expect_co));
}

TEST(TraceSimulator, CoincidencesScaleWithSinglesSquared) {
    SimConfig cfg;
    auto count = [&](double qe) {
        cfg.spad.quantum_eff = qe;
        return static_cast<double>(herald_select(simulate_click_stream(cfg, 1000000), HeraldKind::coincidence).size());
    };
    const double hi = count(0.25), lo = count(0.125);
    const auto b_hi = budget_report(cfg.params, [&] { auto s = cfg.spad; s.quantum_eff = 0.25; return s; }());
    const auto b_lo = budget_report(cfg.params, [&] { auto s = cfg.spad; s.quantum_eff = 0.125; return s; }());
    const double predicted = b_hi.coincidence_rate / b_lo.coincidence_rate;
    EXPECT_NEAR(predicted, 4.0, 0.25);
    const double ratio = hi / lo;
    EXPECT_LT(std::abs(ratio - predicted), 3.0 * ratio * std::sqrt(1.0 / hi + 1.0 / lo));
}

TEST(TraceSimulator, DeterministicAcrossThreads) {
    SimConfig cfg;
    cfg.n_traces = 130;
    EnsembleOptions o;
    o.kind = HeraldKind::coincidence;
    cfg.threads = 1;
    const auto a = simulate_ensemble(cfg, o);
    cfg.threads = 3;
    const auto b = simulate_ensemble(cfg, o);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.P, b.P);
    EXPECT_EQ(a.moments.m2_x, b.moments.m2_x);
    const auto c1 = simulate_click_stream(cfg, 30000);
    cfg.threads = 1;
    const auto c2 = simulate_click_stream(cfg, 30000);
    ASSERT_EQ(c1.events.size(), c2.events.size());
    for (std::size_t i = 0; i < c1.events.size(); ++i) EXPECT_EQ(c1.events[i].time, c2.events[i].time);
}

TEST(TraceSimulator, MomentsMatchStoredTraces) {
    SimConfig cfg;
    cfg.n_traces = 200;
    EnsembleOptions o;
    o.kind = HeraldKind::single;
    auto e = simulate_ensemble(cfg, o);
    const auto from_traces = ensemble_variance(e);
    e.X.clear();
    e.P.clear();
    const auto from_moments = ensemble_variance(e);
    for (std::size_t i = 0; i < e.length; ++i)
        EXPECT_NEAR(from_traces.values[i] / from_moments.values[i], 1.0, 1e-5);
    e.n_traces = 1;
    EXPECT_THROW(ensemble_variance(e), DomainError);
}

TEST(TraceSimulator, SingleHeraldDoublesVariance) {
    SimConfig cfg;
    cfg.n_traces = 4000;
    EnsembleOptions o;
    o.kind = HeraldKind::single;
    o.keep_traces = false;
    const auto cond = simulate_ensemble(cfg, o);
    const auto s = peak_ratio(ensemble_variance(cond));
    EXPECT_NEAR(s.ratio, 2.0, 0.15);
    EXPECT_LE(std::abs(s.peak_tau), 2.0 * cond.sample_period);
    EXPECT_GT(cond.acceptance, 0.5);

    // realtime gate-by-gate heralds agree with conditional sampling
    o.sampling = HeraldSampling::realtime;
    cfg.seed = 99;
    const auto rt = simulate_ensemble(cfg, o);
    EXPECT_GT(rt.gates_simulated, 4000u * 20u);
    auto var0 = [](const TraceEnsemble& e) {
        double s2 = 0.0;
        for (std::size_t t = 0; t < e.X0.size(); ++t) s2 += e.X0[t] * e.X0[t] + e.P0[t] * e.P0[t];
        return s2 / (2.0 * e.X0.size());
    };
    // herald-instant second moment; relative error ~ sqrt(2.5 / n) for the tilted law
    const double a = var0(cond), b = var0(rt);
    EXPECT_LT(std::abs(a - b) / a, 3.0 * std::sqrt(2.0 * 2.5 / 8000.0));
}

TEST(TraceSimulator, HistogramOfThermalState) {
    SimConfig cfg;
    const auto e = unheralded(cfg, 3000);
    HistogramConfig hc;
    hc.half_width = 12.0;
    const auto g = herald_histogram(e, hc);
    const double sp = g.spacing();
    EXPECT_NEAR(g.integral() * sp * sp, 1.0, 1e-3);
    double m2 = 0.0;
    for (std::size_t i = 0; i < g.npts(); ++i)
        for (std::size_t j = 0; j < g.npts(); ++j) m2 += g.at(i, j) * g.coord(i) * g.coord(i) * sp * sp;
    // bin-centre second moment carries a sp^2/12 Sheppard term
    EXPECT_NEAR((m2 - sp * sp / 12.0) / (1.0 + cfg.params.eta_total * cfg.params.nbar_th), 1.0, 0.08);
    hc.bins = 24;
    EXPECT_THROW(herald_histogram(e, hc), DomainError);
}
