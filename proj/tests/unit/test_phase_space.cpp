#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "phonon_forge/convolution.hpp"
#include "phonon_forge/error.hpp"
#include "phonon_forge/phase_space.hpp"
#include "phonon_forge/random.hpp"

using namespace phonon_forge;

namespace {

constexpr double kEta = 0.0091;

StateSpec het_state(int n, double eta_nbar) { return StateSpec{eta_nbar, n, 1.0}; }

Marginal grid_marginal_het(int n, double eta_nbar, double s) {
    // eta implied by s, state expressed in zero-point units
    const double eta = 2.0 / (1.0 - s);
    const StateSpec spec{eta_nbar / eta, n, eta};
    GridConfig cfg;
    cfg.units = Units::zero_point;
    cfg.s_override = s;
    const auto grid = wigner_s(spec, cfg);
    return convert_units(marginal_from_grid(grid), Units::zero_point, Units::heterodyne_vacuum, eta);
}

}  // namespace

TEST(SParameter, Values) {
    EXPECT_DOUBLE_EQ(s_from_eta(1.0), -1.0);
    EXPECT_DOUBLE_EQ(s_from_eta(0.5), -3.0);
    EXPECT_NEAR(s_from_eta(kEta), -218.78021978021978, 1e-10);
    EXPECT_LT(std::abs(s_from_eta(kEta) + 219.0), 0.5);
    EXPECT_THROW(s_from_eta(0.0), DomainError);
    EXPECT_THROW(s_from_eta(1.5), DomainError);
    EXPECT_LT(s_from_eta(0.99), -1.0);
}

TEST(AddedNoise, Values) {
    EXPECT_DOUBLE_EQ(added_noise_quanta(-219.0), 109.5);
    EXPECT_DOUBLE_EQ(added_noise_quanta(-1.0), 0.5);
    EXPECT_DOUBLE_EQ(added_noise_quanta(-3.0), 1.5);
    EXPECT_THROW(added_noise_quanta(0.0), DomainError);
}

TEST(PFunction, ThermalAndRing) {
    const StateSpec th{3.0, 0, 1.0};
    EXPECT_NEAR(p_function(th, Units::zero_point, 0, 0), 1.0 / (2 * std::numbers::pi * 3.0), 1e-15);
    const StateSpec one{3.0, 1, 1.0};
    EXPECT_EQ(p_function(one, Units::zero_point, 0, 0), 0.0);
    // radial maximum of r^2 exp(-r^2/(2 nbar)) at r = sqrt(2 nbar)
    const double r0 = std::sqrt(6.0);
    const double at = p_function(one, Units::zero_point, r0, 0);
    EXPECT_GT(at, p_function(one, Units::zero_point, r0 * 1.01, 0));
    EXPECT_GT(at, p_function(one, Units::zero_point, 0, r0 * 0.99));
    // heterodyne units rescale nbar -> eta nbar
    const StateSpec lossy{3.0, 1, 0.5};
    EXPECT_NEAR(p_function(lossy, Units::heterodyne_vacuum, 1.0, 0.4),
                p_function(StateSpec{1.5, 1, 1.0}, Units::zero_point, 1.0, 0.4), 1e-15);
    // normalization by midpoint rule
    for (int n : {0, 1, 2, 3}) {
        const StateSpec s{2.0, n, 1.0};
        const double h = 0.05;
        double sum = 0.0;
        for (double x = -20 + h / 2; x < 20; x += h)
            for (double p = -20 + h / 2; p < 20; p += h) sum += p_function(s, Units::zero_point, x, p);
        EXPECT_NEAR(sum * h * h, 1.0, 1e-9) << n;
    }
}

TEST(GaussianKernel, NormalizationAndVariance) {
    for (double s : {-1.0, -3.0, -219.0}) {
        const double v = (1 - s) / 2;
        const double hw = 10 * std::sqrt(v);
        const int N = 801;
        const double h = 2 * hw / (N - 1);
        double sum = 0, var = 0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                const double x = -hw + i * h, p = -hw + j * h;
                const double g = gaussian_kernel(s, x, p);
                sum += g;
                var += g * x * x;
            }
        EXPECT_NEAR(sum * h * h, 1.0, 1e-6);
        EXPECT_NEAR(var * h * h / v, 1.0, 1e-6);
    }
    EXPECT_THROW(gaussian_kernel(1.0, 0, 0), DomainError);
}

TEST(Convolution, FftMatchesDirect) {
    const std::size_t n = 21;
    Rng rng(4);
    std::vector<double> f(n * n), k((2 * n - 1) * (2 * n - 1));
    for (auto& v : f) v = rng.uniform();
    for (auto& v : k) v = rng.uniform() - 0.3;
    const auto a = convolve_same(f, k, n);
    const auto b = convolve_same_direct(f, k, n);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-11);
    EXPECT_EQ(fft_friendly_size(1025), 1029u);
    EXPECT_EQ(fft_friendly_size(1024), 1024u);
}

TEST(WignerS, ThermalIsGaussian) {
    const StateSpec spec{2.0, 0, 0.5};
    GridConfig cfg;
    cfg.npts = 201;
    const auto grid = wigner_s(spec, cfg);
    const double var = 2.0 + (1 - grid.s_param()) / 2;
    EXPECT_NEAR(grid.integral(), 1.0, 1e-6);
    double max_err = 0.0;
    for (std::size_t i = 0; i < grid.npts(); ++i)
        for (std::size_t j = 0; j < grid.npts(); ++j) {
            const double x = grid.coord(i), p = grid.coord(j);
            const double g = std::exp(-(x * x + p * p) / (2 * var)) / (2 * std::numbers::pi * var);
            max_err = std::max(max_err, std::abs(grid.at(i, j) - g));
        }
    EXPECT_LT(max_err, 1e-9);
    const auto m = marginal_from_grid(grid);
    EXPECT_NEAR(m.variance(), var, 1e-6);
}

TEST(WignerS, EtaOneIsQFunction) {
    const StateSpec spec{3.0, 0, 1.0};
    const auto grid = wigner_s(spec, GridConfig{.npts = 201});
    EXPECT_DOUBLE_EQ(grid.s_param(), -1.0);
    EXPECT_NEAR(marginal_from_grid(grid).variance(), 4.0, 1e-6);
}

TEST(WignerS, MatchesClosedFormPointwise) {
    for (int n : {1, 2, 3}) {
        const StateSpec spec{4.1 / kEta, n, kEta};
        const auto grid = wigner_s(spec);
        double peak = 0.0, err = 0.0;
        for (std::size_t i = 0; i < grid.npts(); i += 4)
            for (std::size_t j = 0; j < grid.npts(); j += 4) {
                const double w = wigner_s_value(spec, Units::zero_point, grid.s_param(), grid.coord(i),
                                                grid.coord(j));
                peak = std::max(peak, w);
                err = std::max(err, std::abs(w - grid.at(i, j)));
            }
        EXPECT_LT(err / peak, 1e-9) << n;
    }
}

TEST(WignerS, NormalizationSymmetryPositivity) {
    for (int n : {0, 1, 2}) {
        for (Units u : {Units::zero_point, Units::heterodyne_vacuum}) {
            const StateSpec spec{4.1 / kEta, n, kEta};
            GridConfig cfg;
            cfg.units = u;
            const auto g = wigner_s(spec, cfg);
            EXPECT_NEAR(g.integral(), 1.0, 1e-3);
            const std::size_t N = g.npts();
            double peak = 0.0;
            for (double v : g.values()) {
                EXPECT_GE(v, -1e-12);
                peak = std::max(peak, v);
            }
            double worst = 0.0;
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j)
                    worst = std::max(worst, std::abs(g.at(i, j) - g.at(j, N - 1 - i)));
            EXPECT_LT(worst / peak, 1e-6);
        }
    }
}

TEST(WignerS, RingRadiiZeroPointUnits) {
    const StateSpec one{4.1 / kEta, 1, kEta};
    const auto g1 = wigner_s(one);
    const double exact1 = exact_ring_radius(1, 4.1, 1.0) / std::sqrt(kEta);
    EXPECT_NEAR(g1.argmax_radius(), exact1, g1.spacing());
    // sqrt(2) X_1 / sqrt(eta) = 23.96 sits well inside the true ring
    EXPECT_GT(std::abs(g1.argmax_radius() - 23.96), 3.0);

    const StateSpec two{4.1 / kEta, 2, kEta};
    const auto g2 = wigner_s(two);
    EXPECT_NEAR(g2.argmax_radius(), 42.32, g2.spacing());
    EXPECT_GT(g2.argmax_radius(), g1.argmax_radius());
}

TEST(WignerS, GridErrors) {
    const StateSpec spec{4.1 / kEta, 2, kEta};
    GridConfig cfg;
    cfg.half_width = 60.0;
    try {
        wigner_s(spec, cfg);
        FAIL() << "expected GridError";
    } catch (const GridError& e) {
        EXPECT_GT(e.suggested_half_width(), 60.0);
        cfg.half_width = e.suggested_half_width();
        EXPECT_NO_THROW(wigner_s(spec, cfg));
    }
    GridConfig even;
    even.npts = 100;
    EXPECT_THROW(wigner_s(spec, even), DomainError);
    EXPECT_THROW(wigner_s(StateSpec{0.0, 1, 0.5}), DomainError);
    // P function far narrower than a grid cell
    GridConfig coarse;
    coarse.npts = 11;
    EXPECT_THROW(wigner_s(StateSpec{0.01, 1, 1.0}, coarse), GridError);
}

TEST(WignerS, VacuumHasNoPFunctionSampling) {
    const auto grid = wigner_s(StateSpec{0.0, 0, 0.25}, GridConfig{.npts = 101});
    EXPECT_NEAR(marginal_from_grid(grid).variance(), (1 - s_from_eta(0.25)) / 2, 1e-6);
}

TEST(MeasuredMarginal, FrozenValues) {
    // 25-digit quadrature of the closed-form W over P (eta*nbar = 4.1, vacuum variance 1)
    struct Case { int n; double X; double pr; };
    for (const Case c : {Case{1, 0.0, 0.1056463850082548208}, Case{1, 1.3, 0.1094528530295119427},
                         Case{1, 3.7, 0.0774058865857080715}, Case{2, 0.0, 0.0774519423360903834},
                         Case{2, 1.3, 0.0827864225047018900}, Case{2, 3.7, 0.0866538949760270579}}) {
        EXPECT_NEAR(measured_marginal(het_state(c.n, 4.1), c.X), c.pr, 1e-15);
        EXPECT_NEAR(measured_marginal_general(het_state(c.n, 4.1), c.X), c.pr, 1e-15);
    }
}

TEST(MeasuredMarginal, ThermalVariance) {
    const auto xs = linspace(-40, 40, 4001);
    const auto m = sample_marginal(xs, true, [](double x) { return measured_marginal(het_state(0, 6.97), x); });
    EXPECT_NEAR(m.integral(), 1.0, 1e-10);
    EXPECT_NEAR(m.variance(), 7.97, 1e-8);
    EXPECT_NEAR(kEta * 766 + 1, 7.9706, 1e-12);
}

TEST(MeasuredMarginal, VanishingSignalIsVacuum) {
    for (double x : {0.0, 0.7, 2.5}) {
        EXPECT_NEAR(measured_marginal(het_state(1, 1e-12), x),
                    std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi), 1e-11);
    }
}

TEST(MeasuredMarginal, GeneralMatchesClosedForms) {
    for (int n : {0, 1, 2})
        for (double A : {0.3, 2.0, 4.1, 10.0, 50.0})
            for (double x = -10; x <= 10; x += 0.25) {
                const double a = measured_marginal(het_state(n, A), x);
                const double b = measured_marginal_general(het_state(n, A), x);
                ASSERT_NEAR(a, b, 1e-10 * std::max(1.0, a)) << n << " " << A << " " << x;
            }
    EXPECT_THROW(measured_marginal(het_state(3, 1.0), 0.0), UnsupportedError);
}

TEST(MeasuredMarginal, GeneralNormalizesAndIsSymmetric) {
    for (int n = 0; n <= 8; ++n) {
        const double A = 3.3;
        const double w = 12 * std::sqrt((n + 1) * A + 1);
        const auto xs = linspace(-w, w, 6001);
        const auto m = sample_marginal(xs, true, [&](double x) { return measured_marginal_general(het_state(n, A), x); });
        EXPECT_NEAR(m.integral(), 1.0, 1e-6) << n;
        for (std::size_t i = 0; i < xs.size(); ++i)
            ASSERT_NEAR(m.density[i], m.density[xs.size() - 1 - i], 1e-10);
        // mean of X^2 for the n-subtracted state: (n+1) A + 1
        EXPECT_NEAR(m.variance(), (n + 1) * A + 1, 1e-6) << n;
    }
}

TEST(MeasuredMarginal, MechanicalMatchesSmoothedHalfVacuum) {
    for (int n : {0, 1, 2, 4})
        for (double x : {-3.0, 0.0, 0.5, 7.0})
            EXPECT_NEAR(mechanical_marginal(2.5, n, x), smoothed_marginal(2.5, 0.5, n, x), 1e-14);
}

TEST(MeasuredMarginal, TwoPhononBimodal) {
    const StateSpec spec = het_state(2, 4.1);
    const auto rr = ring_radius(2, 4.1);
    // golden section on the right lobe
    double lo = 0.5, hi = 6.0;
    for (int i = 0; i < 200; ++i) {
        const double m1 = hi - 0.618 * (hi - lo), m2 = lo + 0.618 * (hi - lo);
        if (measured_marginal(spec, m1) < measured_marginal(spec, m2)) lo = m1; else hi = m2;
    }
    EXPECT_NEAR(0.5 * (lo + hi), rr.marginal_max, 1e-6);
    EXPECT_LT(measured_marginal(spec, 0.0), measured_marginal(spec, rr.marginal_max));
}

TEST(RingRadius, Values) {
    auto r = ring_radius(1, 2.0);
    EXPECT_FALSE(r.is_nongaussian);
    EXPECT_EQ(r.marginal_max, 0.0);
    r = ring_radius(1, 4.1);
    EXPECT_TRUE(r.is_nongaussian);
    EXPECT_NEAR(r.marginal_max, 1.616228672543343884, 1e-14);
    EXPECT_NEAR(r.wigner_radius, 2.285692508607060869, 1e-14);
    EXPECT_NEAR(r.exact_wigner_radius, 2.777083924182202224, 1e-8);
    r = ring_radius(2, 4.1);
    EXPECT_NEAR(r.marginal_max, 2.854688820649121524, 1e-14);
    EXPECT_NEAR(r.wigner_radius, 4.037139646516843568, 1e-14);
    EXPECT_FALSE(ring_radius(2, 2 * std::sqrt(6.0) - 4).is_nongaussian);
    EXPECT_TRUE(ring_radius(2, 2 * std::sqrt(6.0) - 4 + 1e-9).is_nongaussian);
    EXPECT_THROW(ring_radius(3, 1.0), UnsupportedError);
    EXPECT_THROW(ring_radius(1, -1.0), DomainError);
}

TEST(RingRadius, ExactRadiusClosedFormForSingle) {
    // exp(-u)(1 + a u) peaks at u = (a - 1)/a
    for (double a : {1.5, 4.1, 6.97, 30.0}) {
        const double expect = std::sqrt(2 * (1 + a) * (a - 1) / a);
        EXPECT_NEAR(exact_ring_radius(1, a, 1.0), expect, 1e-8);
    }
    EXPECT_EQ(exact_ring_radius(1, 0.9, 1.0), 0.0);
}

TEST(RingRadius, TwoExceedsOne) {
    for (double A = 2.05; A < 40; A *= 1.3) {
        EXPECT_GT(ring_radius(2, A).wigner_radius, ring_radius(1, A).wigner_radius);
        EXPECT_GT(ring_radius(2, A).exact_wigner_radius, ring_radius(1, A).exact_wigner_radius);
    }
}

TEST(RingRadius, ThresholdsAreBifurcations) {
    // sign of the curvature of Pr at the origin flips at the thresholds
    const auto curvature = [](int n, double A) {
        const double h = 1e-3;
        const auto spec = het_state(n, A);
        return measured_marginal(spec, h) - measured_marginal(spec, 0.0);
    };
    EXPECT_LT(curvature(1, 2.0 - 1e-3), 0.0);
    EXPECT_GT(curvature(1, 2.0 + 1e-3), 0.0);
    const double t2 = 2 * std::sqrt(6.0) - 4;
    EXPECT_LT(curvature(2, t2 - 1e-3), 0.0);
    EXPECT_GT(curvature(2, t2 + 1e-3), 0.0);
}

TEST(MarginalFromGrid, MatchesClosedForm) {
    for (int n : {0, 1, 2})
        for (double A : {0.5, 2.0, 4.1, 10.0})
            for (double s : {-1.0, -3.0, s_from_eta(kEta)}) {
                const auto m = grid_marginal_het(n, A, s);
                const auto ref = sample_marginal(m.xs, true, [&](double x) { return measured_marginal(het_state(n, A), x); });
                EXPECT_LT(l1_distance(m, ref), 1e-3) << n << " " << A << " " << s;
                for (std::size_t i = 0; i < m.xs.size(); ++i)
                    ASSERT_NEAR(m.density[i], m.density[m.xs.size() - 1 - i], 1e-10);
            }
}

TEST(LossyMarginal, Identity) {
    const auto xs = linspace(-15, 15, 1201);
    const auto pr = sample_marginal(xs, true, [](double x) { return mechanical_marginal(3.0, 1, x); });
    const auto out = lossy_marginal_convolution(pr, 1.0);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(out.density[i], pr.density[i], 1e-15);
}

TEST(LossyMarginal, RescalingIdentity) {
    {
        const auto xs = linspace(-30, 30, 12001);
        const auto pr = sample_marginal(xs, true, [](double x) { return mechanical_marginal(4.0, 0, x); });
        const auto out = lossy_marginal_convolution(pr, 0.25, linspace(-12, 12, 801));
        const auto ref = sample_marginal(out.xs, true, [](double x) { return mechanical_marginal(1.0, 0, x); });
        EXPECT_LT(l1_distance(out, ref), 1e-6);
        EXPECT_NEAR(out.variance(), 1.5, 2e-6);
    }
    {
        const double nbar = 453.0;
        const auto xs = linspace(-250, 250, 20001);
        const auto pr = sample_marginal(xs, true, [&](double x) { return mechanical_marginal(nbar, 1, x); });
        const auto out = lossy_marginal_convolution(pr, kEta, linspace(-20, 20, 801));
        const auto ref = sample_marginal(out.xs, true, [&](double x) { return mechanical_marginal(kEta * nbar, 1, x); });
        EXPECT_LT(l1_distance(out, ref), 1e-6);
    }
    const Marginal dummy{{0.0, 1.0}, {0.5, 0.5}, false};
    EXPECT_THROW(lossy_marginal_convolution(dummy, 0.0), DomainError);
}
