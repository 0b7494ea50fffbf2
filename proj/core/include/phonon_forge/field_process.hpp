#pragma once

#include <array>
#include <complex>

#include "phonon_forge/dynamics.hpp"
#include "phonon_forge/random.hpp"

namespace phonon_forge {

using cplx = std::complex<double>;
// (alpha, beta): anti-Stokes cavity amplitude and mechanical amplitude, both in
// P-representation (normally ordered) units.
using FieldState = std::array<cplx, 2>;
// Row-major 2x2 complex matrix.
using Mat2 = std::array<cplx, 4>;

// x' = Phi x + L z with z a pair of independent circular unit complex normals.
struct Transition {
    Mat2 phi{};
    Mat2 noise{};
    bool rank_one = false;

    FieldState apply(const FieldState& x, Rng& rng) const {
        const cplx z0 = rng.complex_normal();
        FieldState y{phi[0] * x[0] + phi[1] * x[1] + noise[0] * z0,
                     phi[2] * x[0] + phi[3] * x[1] + noise[2] * z0};
        if (!rank_one) {
            const cplx z1 = rng.complex_normal();
            y[0] += noise[1] * z1;
            y[1] += noise[3] * z1;
        }
        return y;
    }
};

// Stationary two-mode Gauss-Markov process of the linearized anti-Stokes
// interaction: mechanics driven by a thermal bath of occupation nbar_th, optical
// mode driven by vacuum (no noise in P-representation).
//   coupled:     da = (-kappa a - i G b) dt,  db = (-gamma b - i G a) dt + dW
//   first_order: da = (-kappa a - i G b) dt,  db = -gamma b dt + dW
//   adiabatic:   db = -gamma_eff b dt + dW,   a = -i (G / kappa) b
// with E|dW|^2 = 2 gamma nbar_th dt and kappa = kappa2.
class FieldProcess {
public:
    FieldProcess(const SystemParams& p, double G, FieldModel model);

    FieldModel model() const noexcept { return model_; }
    double coupling() const noexcept { return G_; }
    // Stationary covariance E[x x^dag].
    const Mat2& stationary_covariance() const noexcept { return sigma_; }
    double occupation() const noexcept { return sigma_[0].real(); }

    FieldState stationary(Rng& rng) const;
    // Stationary law reweighted by |alpha|^{2k}.
    FieldState tilted_stationary(int k, Rng& rng) const;

    // Exact forward transition over h >= 0.
    Transition forward(double h) const;
    // Exact time-reversed transition: law of x(t - h) given x(t).
    Transition backward(double h) const;

    // E[alpha^*(0) alpha(tau)] from the exact propagator.
    cplx autocorrelation(double tau) const;

private:
    Mat2 propagator(double h) const;

    SystemParams params_;
    double G_;
    FieldModel model_;
    Mat2 drift_{};
    Mat2 sigma_{};
    Mat2 sigma_pinv_{};
    cplx c_{};  // adiabatic output map a = c b
    double gamma_eff_ = 0.0;
    cplx cond_gain_{};      // E[beta | alpha] = cond_gain * alpha
    double cond_var_ = 0.0;  // Var[beta | alpha]
    Mat2 chol_sigma_{};
};

}  // namespace phonon_forge
