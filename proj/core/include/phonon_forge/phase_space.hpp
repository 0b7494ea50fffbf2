#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace phonon_forge {

// heterodyne_vacuum: optical coordinates in which the vacuum heterodyne marginal has
// unit variance (thermal state: 1 + eta*nbar). zero_point: mechanical coordinates,
// heterodyne coordinates scaled by eta^{-1/2}.
enum class Units { heterodyne_vacuum, zero_point };

const char* to_string(Units units);
Units units_from_string(const char* name);

// n-fold subtracted thermal state observed with overall efficiency eta.
struct StateSpec {
    double nbar = 0.0;
    int n = 0;
    double eta = 1.0;

    void validate() const;
    double eta_nbar() const { return eta * nbar; }
};

double s_from_eta(double eta);
double added_noise_quanta(double s);

// Variances (per quadrature) of the P function and of the smoothing kernel in
// the requested units. The W_s density is their 2D convolution.
struct WignerVariances {
    double p;       // a: nbar (zero_point) or eta*nbar (heterodyne)
    double kernel;  // v: (1-s)/2 (zero_point) or eta*(1-s)/2 (heterodyne)
};
WignerVariances wigner_variances(const StateSpec& spec, Units units, double s);

// P function of the state; in heterodyne units nbar -> eta*nbar.
double p_function(const StateSpec& spec, Units units, double X, double P);

// G_s in zero-point units: per-quadrature variance (1-s)/2.
double gaussian_kernel(double s, double X, double P);

// Closed form of P_{n-} * G_s: g_T(r) (v/T)^n L_n(-a r^2 / (2 v T)), T = a + v.
double wigner_s_value(const StateSpec& spec, Units units, double s, double X, double P);

struct GridConfig {
    std::size_t npts = 513;
    std::optional<double> half_width;  // default 6*sqrt((n+1) a + v)
    Units units = Units::zero_point;
    std::optional<double> s_override;
    double max_edge_mass = 1e-4;
};

class PhaseSpaceGrid {
public:
    PhaseSpaceGrid() = default;
    PhaseSpaceGrid(double half_width, std::size_t npts, double s_param, Units units,
                   std::vector<double> values);

    double half_width() const noexcept { return half_width_; }
    std::size_t npts() const noexcept { return npts_; }
    double s_param() const noexcept { return s_param_; }
    Units units() const noexcept { return units_; }
    double spacing() const noexcept;
    double coord(std::size_t i) const noexcept;

    // Row-major, first index along X, second along P.
    double at(std::size_t ix, std::size_t ip) const { return values_[ix * npts_ + ip]; }
    const std::vector<double>& values() const noexcept { return values_; }

    double integral() const;
    // Radius of the largest grid value.
    double argmax_radius() const;

private:
    double half_width_ = 0.0;
    std::size_t npts_ = 0;
    double s_param_ = 0.0;
    Units units_ = Units::zero_point;
    std::vector<double> values_;
};

double default_half_width(const StateSpec& spec, Units units, double s);

// W_s on a square grid by FFT convolution of the sampled P function with G_s.
PhaseSpaceGrid wigner_s(const StateSpec& spec, const GridConfig& cfg = {});

struct Marginal {
    std::vector<double> xs;
    std::vector<double> density;
    bool closed_form = false;

    double integral() const;  // trapezoid
    double mean() const;
    double variance() const;
};

// Closed forms in heterodyne units (vacuum variance 1) for n in {0, 1, 2}.
double measured_marginal(const StateSpec& spec, double X);
// Triple-sum closed form for any n, evaluated in log space.
double measured_marginal_general(const StateSpec& spec, double X);
// Lossless mechanical marginal pr_{n-}(X), vacuum variance 1/2.
double mechanical_marginal(double nbar, int n, double X);
// Marginal of P_{n-}(a) * g_v for arbitrary variances.
double smoothed_marginal(double a, double v, int n, double X);

Marginal sample_marginal(std::span<const double> xs, bool closed_form, auto&& fn) {
    Marginal m;
    m.closed_form = closed_form;
    m.xs.assign(xs.begin(), xs.end());
    m.density.reserve(xs.size());
    for (double x : xs) m.density.push_back(fn(x));
    return m;
}

std::vector<double> linspace(double lo, double hi, std::size_t count);

struct RingRadius {
    double marginal_max = 0.0;       // X_n
    double wigner_radius = 0.0;      // sqrt(2) X_n
    bool is_nongaussian = false;
    double exact_wigner_radius = 0.0;  // argmax of the closed-form W_s
};

// Heterodyne units. n in {1, 2}.
RingRadius ring_radius(int n, double eta_nbar);

// Radius of the W_s maximum for P variance a and kernel variance v.
double exact_ring_radius(int n, double a, double v);

Marginal marginal_from_grid(const PhaseSpaceGrid& grid);

// Beam-splitter loss applied to a lossless marginal. Input treated as piecewise
// linear; output sampled at out_xs (default: input xs scaled by sqrt(eta)).
Marginal lossy_marginal_convolution(const Marginal& pr, double eta,
                                    std::span<const double> out_xs = {});

Marginal convert_units(const Marginal& m, Units from, Units to, double eta);

double l1_distance(const Marginal& a, const Marginal& b);

}  // namespace phonon_forge
