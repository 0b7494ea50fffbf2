#include "phonon_forge/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "phonon_forge/convolution.hpp"
#include "phonon_forge/error.hpp"

namespace phonon_forge {

namespace {

constexpr double kPi = std::numbers::pi;

double log_factorial(double m) { return std::lgamma(m + 1.0); }

double log_binomial(int top, int k) {
    return log_factorial(top) - log_factorial(k) - log_factorial(top - k);
}

// log Gamma(m + 1/2) = log((2m)! sqrt(pi) / (4^m m!))
double log_gamma_half(int m) {
    return log_factorial(2.0 * m) - m * std::log(4.0) - log_factorial(m) + 0.5 * std::log(kPi);
}

// L_n(y) by the three-term recurrence.
double laguerre(int n, double y) {
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = 1.0 - y;
    for (int k = 1; k < n; ++k) {
        const double next = ((2.0 * k + 1.0 - y) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

// P_{n-} in (X, P) measure with per-quadrature thermal variance a.
double p_density(double a, int n, double r2) {
    if (n > 0 && r2 == 0.0) return 0.0;
    double log_v = -r2 / (2.0 * a) - std::log(2.0 * kPi * a);
    if (n > 0) log_v += n * std::log(r2) - log_factorial(n) - n * std::log(2.0 * a);
    return std::exp(log_v);
}

double closed_form_w(double a, double v, int n, double r2) {
    const double T = a + v;
    const double g = std::exp(-r2 / (2.0 * T)) / (2.0 * kPi * T);
    if (n == 0) return g;
    const double y = a * r2 / (2.0 * v * T);
    return g * std::pow(v / T, n) * laguerre(n, -y);
}

// Triple-sum measured marginal with vacuum variance 1 and signal A = eta*nbar.
double triple_sum_marginal(double A, int n, double X) {
    if (n < 0) throw DomainError("order must be >= 0");
    const double log_pref = -X * X / (2.0 * (1.0 + A)) - log_factorial(n) - 2.0 * std::log(kPi) -
                            0.5 * std::log(2.0 * (1.0 + A));
    const double log_x2 = X == 0.0 ? 0.0 : std::log(X * X);
    const double log_2a = A > 0.0 ? std::log(2.0 * A) : 0.0;
    const double log_1p2a = std::log1p(2.0 * A);
    const double log_2p2a = std::log(2.0 * (1.0 + A));
    std::vector<double> logs;
    for (int k = 0; k <= n; ++k) {
        for (int l = 0; l <= k; ++l) {
            if (A == 0.0 && k > l) continue;
            for (int r = 0; r <= k - l; ++r) {
                const int px = k - l - r;
                if (X == 0.0 && px > 0) continue;
                logs.push_back(log_binomial(n, k) + log_binomial(2 * k, 2 * l) +
                               log_binomial(2 * (k - l), 2 * r) + log_gamma_half(n - k) +
                               log_gamma_half(l) + log_gamma_half(r) + px * log_x2 +
                               (k - l) * log_2a - (l + r) * log_1p2a -
                               (2 * (k - l) - r) * log_2p2a);
            }
        }
    }
    const double mx = *std::max_element(logs.begin(), logs.end());
    double s = 0.0;
    for (double v : logs) s += std::exp(v - mx);
    return std::exp(log_pref + mx + std::log(s));
}

double trapezoid(const std::vector<double>& xs, const std::vector<double>& ys) {
    double s = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) s += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
    return s;
}

// Mass of the 1D marginal beyond |X| > h.
double two_sided_tail(double a, double v, int n, double h) {
    const double T = a + v;
    const double hi = h + 20.0 * std::sqrt(T * (n + 1.0)) + 1.0;
    const int segments = 4000;
    const double dx = (hi - h) / segments;
    double s = smoothed_marginal(a, v, n, h) + smoothed_marginal(a, v, n, hi);
    for (int i = 1; i < segments; ++i) {
        s += (i % 2 ? 4.0 : 2.0) * smoothed_marginal(a, v, n, h + i * dx);
    }
    return 2.0 * s * dx / 3.0;
}

}  // namespace

const char* to_string(Units units) {
    return units == Units::heterodyne_vacuum ? "heterodyne_vacuum" : "zero_point";
}

Units units_from_string(const char* name) {
    if (std::strcmp(name, "heterodyne_vacuum") == 0 || std::strcmp(name, "heterodyne") == 0)
        return Units::heterodyne_vacuum;
    if (std::strcmp(name, "zero_point") == 0) return Units::zero_point;
    throw ConfigError(std::string("unknown units '") + name +
                      "' (expected heterodyne_vacuum or zero_point)");
}

void StateSpec::validate() const {
    if (!std::isfinite(nbar) || nbar < 0.0) throw DomainError("nbar must be finite and >= 0");
    if (n < 0) throw DomainError("subtraction order must be >= 0");
    if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
    if (n >= 1 && nbar == 0.0) throw DomainError("subtraction from the ground state is undefined");
}

double s_from_eta(double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw DomainError("eta must lie in (0, 1], got " + std::to_string(eta));
    }
    return (eta - 2.0) / eta;
}

double added_noise_quanta(double s) {
    if (!(s <= -1.0)) throw DomainError("added noise defined for s <= -1");
    return std::abs(s) / 2.0;
}

WignerVariances wigner_variances(const StateSpec& spec, Units units, double s) {
    spec.validate();
    if (!(s < 1.0)) throw DomainError("s must be < 1");
    const double v0 = (1.0 - s) / 2.0;
    if (units == Units::heterodyne_vacuum) return {spec.eta * spec.nbar, spec.eta * v0};
    return {spec.nbar, v0};
}

double p_function(const StateSpec& spec, Units units, double X, double P) {
    spec.validate();
    const double a = units == Units::heterodyne_vacuum ? spec.eta * spec.nbar : spec.nbar;
    if (a == 0.0) throw DomainError("P function of the vacuum is a delta distribution");
    return p_density(a, spec.n, X * X + P * P);
}

double gaussian_kernel(double s, double X, double P) {
    if (!(s < 1.0)) throw DomainError("kernel requires s < 1");
    return std::exp(-(X * X + P * P) / (1.0 - s)) / (kPi * (1.0 - s));
}

double wigner_s_value(const StateSpec& spec, Units units, double s, double X, double P) {
    const auto [a, v] = wigner_variances(spec, units, s);
    return closed_form_w(a, v, spec.n, X * X + P * P);
}

PhaseSpaceGrid::PhaseSpaceGrid(double half_width, std::size_t npts, double s_param, Units units,
                               std::vector<double> values)
    : half_width_(half_width), npts_(npts), s_param_(s_param), units_(units),
      values_(std::move(values)) {
    if (npts_ < 3 || npts_ % 2 == 0) throw DomainError("grid npts must be odd and >= 3");
    if (!(half_width_ > 0.0)) throw DomainError("grid half_width must be > 0");
    if (values_.size() != npts_ * npts_) throw DomainError("grid values must be npts*npts");
}

double PhaseSpaceGrid::spacing() const noexcept {
    return 2.0 * half_width_ / static_cast<double>(npts_ - 1);
}

double PhaseSpaceGrid::coord(std::size_t i) const noexcept {
    return -half_width_ + static_cast<double>(i) * spacing();
}

double PhaseSpaceGrid::integral() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s * spacing() * spacing();
}

double PhaseSpaceGrid::argmax_radius() const {
    const auto it = std::max_element(values_.begin(), values_.end());
    const auto idx = static_cast<std::size_t>(it - values_.begin());
    return std::hypot(coord(idx / npts_), coord(idx % npts_));
}

double default_half_width(const StateSpec& spec, Units units, double s) {
    const auto [a, v] = wigner_variances(spec, units, s);
    return 6.0 * std::sqrt((spec.n + 1.0) * a + v);
}

PhaseSpaceGrid wigner_s(const StateSpec& spec, const GridConfig& cfg) {
    spec.validate();
    const double s = cfg.s_override.value_or(s_from_eta(spec.eta));
    const auto [a, v] = wigner_variances(spec, cfg.units, s);
    const std::size_t N = cfg.npts;
    if (N < 3 || N % 2 == 0) throw DomainError("grid npts must be odd and >= 3");
    const double hw = cfg.half_width.value_or(default_half_width(spec, cfg.units, s));
    if (!(hw > 0.0)) throw DomainError("grid half_width must be > 0");

    // Union bound over the four half-planes outside the square.
    const double edge = 2.0 * two_sided_tail(a, v, spec.n, hw);
    if (edge > cfg.max_edge_mass) {
        double suggest = hw;
        while (2.0 * two_sided_tail(a, v, spec.n, suggest) > 0.25 * cfg.max_edge_mass) suggest *= 1.1;
        throw GridError("grid half_width " + std::to_string(hw) + " leaves edge mass " +
                            std::to_string(edge) + "; use half_width >= " + std::to_string(suggest),
                        suggest);
    }
    const double dx = 2.0 * hw / static_cast<double>(N - 1);
    const auto coord = [&](long i) { return static_cast<double>(i) * dx; };
    const long c = static_cast<long>(N / 2);

    std::vector<double> values(N * N);
    if (a == 0.0) {
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                const double x = coord(static_cast<long>(i) - c);
                const double p = coord(static_cast<long>(j) - c);
                values[i * N + j] = closed_form_w(0.0, v, 0, x * x + p * p);
            }
    } else {
        // The sampled convolution is accurate while the product of the two
        // Gaussians (variance a v / (a + v)) spans at least one cell.
        const double w = a * v / (a + v);
        if (w < dx * dx) {
            const double suggest = std::sqrt(w) * static_cast<double>(N - 1) / 2.0;
            throw GridError("grid spacing " + std::to_string(dx) +
                                " does not resolve the distribution; increase npts or use half_width <= " +
                                std::to_string(suggest),
                            suggest);
        }
        std::vector<double> field(N * N);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                const double x = coord(static_cast<long>(i) - c);
                const double p = coord(static_cast<long>(j) - c);
                field[i * N + j] = p_density(a, spec.n, x * x + p * p);
            }
        const std::size_t nk = 2 * N - 1;
        std::vector<double> kernel(nk * nk);
        const double two_v = 2.0 * v;
        for (std::size_t i = 0; i < nk; ++i)
            for (std::size_t j = 0; j < nk; ++j) {
                const double x = coord(static_cast<long>(i) - static_cast<long>(N - 1));
                const double p = coord(static_cast<long>(j) - static_cast<long>(N - 1));
                kernel[i * nk + j] = std::exp(-(x * x + p * p) / two_v) / (kPi * two_v);
            }
        values = convolve_same(field, kernel, N);
        const double cell = dx * dx;
        for (double& val : values) val *= cell;
    }

    PhaseSpaceGrid grid(hw, N, s, cfg.units, std::move(values));
    const double total = grid.integral();
    if (std::abs(total - 1.0) > 1e-3) {
        throw NumericalError("W_s grid normalization " + std::to_string(total) + " outside 1 +- 1e-3");
    }
    return grid;
}

double Marginal::integral() const { return trapezoid(xs, density); }

double Marginal::mean() const {
    std::vector<double> t(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) t[i] = xs[i] * density[i];
    return trapezoid(xs, t) / integral();
}

double Marginal::variance() const {
    const double mu = mean();
    std::vector<double> t(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) t[i] = (xs[i] - mu) * (xs[i] - mu) * density[i];
    return trapezoid(xs, t) / integral();
}

double measured_marginal(const StateSpec& spec, double X) {
    spec.validate();
    const double A = spec.eta_nbar();
    const double onep = 1.0 + A;
    const double g = std::exp(-X * X / (2.0 * onep));
    switch (spec.n) {
        case 0:
            return g / std::sqrt(2.0 * kPi * onep);
        case 1:
            return g / std::sqrt(8.0 * kPi * onep) *
                   ((2.0 + A) / onep + 4.0 * A / std::pow(2.0 * onep, 2) * X * X);
        case 2: {
            const double X2 = X * X;
            return g / std::sqrt(8.0 * kPi * onep) *
                   ((8.0 + 8.0 * A + 3.0 * A * A) / (4.0 * onep * onep) +
                    (4.0 * A + A * A) / (2.0 * onep * onep * onep) * X2 +
                    (2.0 * A) * (2.0 * A) / std::pow(2.0 * onep, 4) * X2 * X2);
        }
        default:
            throw UnsupportedError("closed-form marginal covers n <= 2; use measured_marginal_general");
    }
}

double measured_marginal_general(const StateSpec& spec, double X) {
    spec.validate();
    return triple_sum_marginal(spec.eta_nbar(), spec.n, X);
}

double mechanical_marginal(double nbar, int n, double X) {
    StateSpec{nbar, n, 1.0}.validate();
    const double d = 1.0 + 2.0 * nbar;
    const double log_pref = -X * X / d - log_factorial(n) - 1.5 * std::log(kPi) - 0.5 * std::log(d);
    const double log_x2 = X == 0.0 ? 0.0 : std::log(X * X);
    std::vector<double> logs;
    for (int k = 0; k <= n; ++k)
        for (int l = 0; l <= k; ++l) {
            if (k > l && (nbar == 0.0 || X == 0.0)) continue;
            logs.push_back(log_binomial(n, k) + log_binomial(2 * k, 2 * l) + log_gamma_half(n - k) +
                           log_gamma_half(l) + (k - l) * (log_x2 + std::log(2.0 * nbar)) -
                           (2 * k - l) * std::log(d));
        }
    const double mx = *std::max_element(logs.begin(), logs.end());
    double s = 0.0;
    for (double v : logs) s += std::exp(v - mx);
    return std::exp(log_pref + mx + std::log(s));
}

double smoothed_marginal(double a, double v, int n, double X) {
    if (!(v > 0.0)) throw DomainError("smoothing variance must be > 0");
    if (a < 0.0) throw DomainError("P variance must be >= 0");
    const double sv = std::sqrt(v);
    return triple_sum_marginal(a / v, n, X / sv) / sv;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> xs(count);
    if (count == 1) {
        xs[0] = lo;
        return xs;
    }
    for (std::size_t i = 0; i < count; ++i)
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return xs;
}

double exact_ring_radius(int n, double a, double v) {
    if (n < 0 || a < 0.0 || !(v > 0.0)) throw DomainError("exact_ring_radius: invalid arguments");
    if (n == 0 || a == 0.0) return 0.0;
    const double c = a / v;
    // W(r) ~ exp(-u) L_n(-c u) with u = r^2 / (2T); dL_n/dy = -L^{(1)}_{n-1}(y)
    const auto h = [&](double u) { return -u + std::log(laguerre(n, -c * u)); };
    const auto dh = [&](double u) {
        const double y = -c * u;
        double prev = 1.0;
        double cur = 2.0 - y;
        if (n == 1) cur = 1.0;
        for (int k = 1; k < n - 1; ++k) {
            const double next = ((2.0 * k + 2.0 - y) * cur - (k + 1.0) * prev) / (k + 1.0);
            prev = cur;
            cur = next;
        }
        return -1.0 + c * cur / laguerre(n, y);
    };
    const double upper = n + 12.0;
    const int scan = 4000;
    int best = 0;
    double best_h = h(0.0);
    for (int i = 1; i <= scan; ++i) {
        const double hv = h(upper * i / scan);
        if (hv > best_h) {
            best_h = hv;
            best = i;
        }
    }
    if (best == 0) return 0.0;
    double lo = upper * (best - 1) / scan;
    double hi = upper * std::min(best + 1, scan) / scan;
    if (!(dh(lo) > 0.0 && dh(hi) < 0.0)) {
        throw NumericalError("exact_ring_radius: maximum not bracketed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (dh(mid) > 0.0) lo = mid; else hi = mid;
    }
    const double u = 0.5 * (lo + hi);
    return std::sqrt(2.0 * (a + v) * u);
}

RingRadius ring_radius(int n, double eta_nbar) {
    if (n != 1 && n != 2) throw UnsupportedError("ring_radius covers n in {1, 2}");
    if (!(eta_nbar >= 0.0)) throw DomainError("eta*nbar must be >= 0");
    const double A = eta_nbar;
    RingRadius r;
    if (n == 1) {
        r.is_nongaussian = A > 2.0;
        if (r.is_nongaussian) r.marginal_max = std::sqrt((1.0 + A) * (A - 2.0) / A);
    } else {
        r.is_nongaussian = A > 2.0 * std::sqrt(6.0) - 4.0;
        if (r.is_nongaussian)
            r.marginal_max = std::sqrt((1.0 + A) / A * (-4.0 + A + std::sqrt(2.0 * (4.0 + A * A))));
    }
    r.wigner_radius = std::sqrt(2.0) * r.marginal_max;
    r.exact_wigner_radius = exact_ring_radius(n, A, 1.0);
    return r;
}

Marginal marginal_from_grid(const PhaseSpaceGrid& grid) {
    const std::size_t N = grid.npts();
    Marginal m;
    m.closed_form = false;
    m.xs.resize(N);
    m.density.resize(N);
    const double dp = grid.spacing();
    for (std::size_t i = 0; i < N; ++i) {
        m.xs[i] = grid.coord(i);
        double s = 0.0;
        for (std::size_t j = 0; j < N; ++j) s += grid.at(i, j);
        m.density[i] = s * dp;
    }
    return m;
}

Marginal lossy_marginal_convolution(const Marginal& pr, double eta, std::span<const double> out_xs) {
    if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
    if (pr.xs.size() < 2 || pr.xs.size() != pr.density.size())
        throw DomainError("marginal needs >= 2 matching samples");
    std::vector<double> xs;
    if (out_xs.empty()) {
        xs = pr.xs;
        for (double& x : xs) x *= std::sqrt(eta);
    } else {
        xs.assign(out_xs.begin(), out_xs.end());
    }
    Marginal out;
    out.xs = xs;
    out.closed_form = false;
    out.density.resize(xs.size());
    if (eta == 1.0) {
        // kernel collapses to a delta: interpolate
        for (std::size_t o = 0; o < xs.size(); ++o) {
            const double x = xs[o];
            double val = 0.0;
            if (x >= pr.xs.front() && x <= pr.xs.back()) {
                const auto it = std::upper_bound(pr.xs.begin(), pr.xs.end(), x);
                const std::size_t i = std::min<std::size_t>(
                    static_cast<std::size_t>(std::max<long>(it - pr.xs.begin() - 1, 0)), pr.xs.size() - 2);
                const double t = (x - pr.xs[i]) / (pr.xs[i + 1] - pr.xs[i]);
                val = (1.0 - t) * pr.density[i] + t * pr.density[i + 1];
            }
            out.density[o] = val;
        }
        return out;
    }
    // pr(X; eta) = (pi (1-eta))^{-1/2} int pr(X') exp(-c (X' - X/sqrt(eta))^2), c = eta/(1-eta)
    const double c = eta / (1.0 - eta);
    const double sc = std::sqrt(c);
    const double norm = 1.0 / std::sqrt(kPi * (1.0 - eta));
    const auto erf_diff = [](double z0, double z1) {
        if (z0 >= 0.0) return std::erfc(z0) - std::erfc(z1);
        if (z1 <= 0.0) return std::erfc(-z1) - std::erfc(-z0);
        return std::erf(z1) - std::erf(z0);
    };
    for (std::size_t o = 0; o < xs.size(); ++o) {
        const double m = xs[o] / std::sqrt(eta);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < pr.xs.size(); ++i) {
            const double x0 = pr.xs[i];
            const double x1 = pr.xs[i + 1];
            const double f0 = pr.density[i];
            const double slope = (pr.density[i + 1] - f0) / (x1 - x0);
            const double z0 = sc * (x0 - m);
            const double z1 = sc * (x1 - m);
            if ((z0 > 40.0 || z1 < -40.0)) continue;
            const double i0 = 0.5 * std::sqrt(kPi / c) * erf_diff(z0, z1);
            const double i1 = -(std::exp(-z1 * z1) - std::exp(-z0 * z0)) / (2.0 * c);
            acc += (f0 + slope * (m - x0)) * i0 + slope * i1;
        }
        out.density[o] = norm * acc;
    }
    return out;
}

Marginal convert_units(const Marginal& m, Units from, Units to, double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
    if (from == to) return m;
    // x_het = sqrt(eta) x_zp
    const double f = from == Units::zero_point ? std::sqrt(eta) : 1.0 / std::sqrt(eta);
    Marginal out = m;
    for (double& x : out.xs) x *= f;
    for (double& d : out.density) d /= f;
    return out;
}

double l1_distance(const Marginal& a, const Marginal& b) {
    if (a.xs.size() < 2) throw DomainError("l1_distance needs >= 2 samples");
    std::vector<double> diff(a.xs.size());
    const bool same = a.xs.size() == b.xs.size() &&
                      std::equal(a.xs.begin(), a.xs.end(), b.xs.begin(),
                                 [](double p, double q) { return std::abs(p - q) <= 1e-12 * (1.0 + std::abs(p)); });
    for (std::size_t i = 0; i < a.xs.size(); ++i) {
        double bv = 0.0;
        if (same) {
            bv = b.density[i];
        } else {
            const double x = a.xs[i];
            if (x >= b.xs.front() && x <= b.xs.back()) {
                const auto it = std::upper_bound(b.xs.begin(), b.xs.end(), x);
                const std::size_t k = std::min<std::size_t>(
                    static_cast<std::size_t>(std::max<long>(it - b.xs.begin() - 1, 0)), b.xs.size() - 2);
                const double t = (x - b.xs[k]) / (b.xs[k + 1] - b.xs[k]);
                bv = (1.0 - t) * b.density[k] + t * b.density[k + 1];
            }
        }
        diff[i] = std::abs(a.density[i] - bv);
    }
    return trapezoid(a.xs, diff);
}

}  // namespace phonon_forge
