#include "phonon_forge/field_process.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

#include "phonon_forge/error.hpp"

namespace phonon_forge {

namespace {

using M2 = Eigen::Matrix2cd;
using M4 = Eigen::Matrix4cd;

constexpr double kVanLoanLimit = 4.0;

M2 to_eigen(const Mat2& m) {
    M2 e;
    e << m[0], m[1], m[2], m[3];
    return e;
}

Mat2 from_eigen(const M2& e) { return {e(0, 0), e(0, 1), e(1, 0), e(1, 1)}; }

M2 hermitian_part(const M2& m) { return 0.5 * (m + m.adjoint()); }

// L with L L^dag = Q for Hermitian PSD Q; tiny negative eigenvalues from
// rounding are clamped.
Transition factor_noise(const M2& phi, const M2& q_raw) {
    const M2 q = hermitian_part(q_raw);
    Eigen::SelfAdjointEigenSolver<M2> es(q);
    const auto& lam = es.eigenvalues();
    const auto& vec = es.eigenvectors();
    const double top = std::max(lam(1), 0.0);
    Transition t;
    t.phi = from_eigen(phi);
    M2 L = M2::Zero();
    L.col(0) = vec.col(1) * std::sqrt(top);
    const double low = lam(0) > 1e-13 * top ? lam(0) : 0.0;
    t.rank_one = low == 0.0;
    L.col(1) = vec.col(0) * std::sqrt(low);
    t.noise = from_eigen(L);
    return t;
}

// Van Loan: Phi = e^{A h}, Q = int_0^h e^{A s} D e^{A^dag s} ds. Accurate
// for short steps where Sigma - Phi Sigma Phi^dag cancels badly; the block
// exponential overflows once |A| h is large.
std::pair<M2, M2> van_loan(const M2& A, const M2& D, double h) {
    M4 blk = M4::Zero();
    blk.block<2, 2>(0, 0) = -A * h;
    blk.block<2, 2>(0, 2) = D * h;
    blk.block<2, 2>(2, 2) = A.adjoint() * h;
    const M4 e = blk.exp();
    const M2 phi = e.block<2, 2>(2, 2).adjoint();
    const M2 q = phi * e.block<2, 2>(0, 2);
    return {phi, q};
}

M2 lyapunov(const M2& A, const M2& D) {
    // (I (x) A + conj(A) (x) I) vec(S) = -vec(D), column-major vec
    M4 K = M4::Zero();
    const M2 I = M2::Identity();
    const M2 Ac = A.conjugate();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            K.block<2, 2>(2 * i, 2 * j) += I(i, j) * A;
            K.block<2, 2>(2 * i, 2 * j) += Ac(i, j) * I;
        }
    Eigen::Vector4cd d;
    d << D(0, 0), D(1, 0), D(0, 1), D(1, 1);
    const Eigen::Vector4cd s = K.fullPivLu().solve(-d);
    M2 S;
    S << s(0), s(2), s(1), s(3);
    return hermitian_part(S);
}

M2 hermitian_pinv(const M2& s) {
    Eigen::SelfAdjointEigenSolver<M2> es(hermitian_part(s));
    const auto& lam = es.eigenvalues();
    const double top = std::max(std::abs(lam(0)), std::abs(lam(1)));
    M2 inv = M2::Zero();
    for (int i = 0; i < 2; ++i) {
        if (top > 0.0 && std::abs(lam(i)) > 1e-12 * top)
            inv += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint() / lam(i);
    }
    return inv;
}

}  // namespace

FieldProcess::FieldProcess(const SystemParams& p, double G, FieldModel model)
    : params_(p), G_(G), model_(model) {
    if (!(G >= 0.0)) throw DomainError("coupling G must be >= 0");
    check_weak_coupling(p, G);
    const cplx iG(0.0, G);
    const double k = p.kappa2;
    const double diffusion = 2.0 * p.gamma * p.nbar_th;
    if (model == FieldModel::adiabatic) {
        gamma_eff_ = p.gamma + G * G / k;
        c_ = -iG / k;
        const double S = diffusion / (2.0 * gamma_eff_);
        sigma_ = {std::norm(c_) * S, c_ * S, std::conj(c_) * S, S};
        drift_ = {0.0, 0.0, 0.0, -gamma_eff_};
    } else {
        const cplx back = model == FieldModel::coupled ? -iG : cplx(0.0);
        drift_ = {-k, -iG, back, -p.gamma};
        M2 D = M2::Zero();
        D(1, 1) = diffusion;
        sigma_ = from_eigen(lyapunov(to_eigen(drift_), D));
    }
    sigma_pinv_ = from_eigen(hermitian_pinv(to_eigen(sigma_)));
    const double saa = sigma_[0].real();
    if (saa > 0.0) {
        // E[beta alpha^*] = sigma(1, 0)
        cond_gain_ = sigma_[2] / saa;
        cond_var_ = std::max(0.0, sigma_[3].real() - std::norm(sigma_[2]) / saa);
    }
    Eigen::LLT<M2> llt(to_eigen(sigma_));
    if (llt.info() == Eigen::Success && sigma_[0].real() > 0.0 &&
        (to_eigen(sigma_)).determinant().real() > 1e-12 * std::norm(sigma_[3])) {
        chol_sigma_ = from_eigen(llt.matrixL());
    } else {
        chol_sigma_ = factor_noise(M2::Zero(), to_eigen(sigma_)).noise;
    }
}

Mat2 FieldProcess::propagator(double h) const {
    if (model_ == FieldModel::adiabatic) {
        const double phi = std::exp(-gamma_eff_ * h);
        return {0.0, c_ * phi, 0.0, phi};
    }
    return from_eigen((to_eigen(drift_) * h).exp());
}

FieldState FieldProcess::stationary(Rng& rng) const {
    const cplx z0 = rng.complex_normal();
    const cplx z1 = rng.complex_normal();
    const auto& L = chol_sigma_;
    return {L[0] * z0 + L[1] * z1, L[2] * z0 + L[3] * z1};
}

FieldState FieldProcess::tilted_stationary(int k, Rng& rng) const {
    if (k < 0) throw DomainError("tilt order must be >= 0");
    const double saa = sigma_[0].real();
    if (!(saa > 0.0)) throw NumericalError("cannot tilt by |alpha|^2: the optical mode is empty");
    const double r2 = saa * rng.gamma_int(k + 1);
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    const cplx alpha = std::polar(std::sqrt(r2), phase);
    const cplx beta = cond_gain_ * alpha + std::sqrt(cond_var_) * rng.complex_normal();
    return {alpha, beta};
}

Transition FieldProcess::forward(double h) const {
    if (!(h >= 0.0)) throw DomainError("transition step must be >= 0");
    if (model_ == FieldModel::adiabatic) {
        const double phi = std::exp(-gamma_eff_ * h);
        const double q = sigma_[3].real() * (1.0 - phi * phi);
        Transition t;
        t.phi = propagator(h);
        t.noise = {c_ * std::sqrt(q), 0.0, std::sqrt(q), 0.0};
        t.rank_one = true;
        return t;
    }
    const M2 A = to_eigen(drift_);
    if (A.cwiseAbs().maxCoeff() * h > kVanLoanLimit) {
        const M2 phi = (A * h).exp();
        const M2 S = to_eigen(sigma_);
        return factor_noise(phi, S - phi * S * phi.adjoint());
    }
    M2 D = M2::Zero();
    D(1, 1) = 2.0 * params_.gamma * params_.nbar_th;
    const auto [phi, q] = van_loan(A, D, h);
    return factor_noise(phi, q);
}

Transition FieldProcess::backward(double h) const {
    if (!(h >= 0.0)) throw DomainError("transition step must be >= 0");
    if (model_ == FieldModel::adiabatic) {
        // stationary law lives on alpha = c beta; reversal is the same OU step
        Transition t = forward(h);
        const double phi = std::exp(-gamma_eff_ * h);
        const double nu = 1.0 + std::norm(c_);
        t.phi = {std::norm(c_) * phi / nu, c_ * phi / nu, std::conj(c_) * phi / nu, phi / nu};
        return t;
    }
    const M2 S = to_eigen(sigma_);
    Eigen::SelfAdjointEigenSolver<M2> es(S);
    const bool regular = es.eigenvalues()(0) > 1e-10 * es.eigenvalues()(1);
    if (regular) {
        // reversed drift -A - D Sigma^{-1}, same diffusion
        M2 D = M2::Zero();
        D(1, 1) = 2.0 * params_.gamma * params_.nbar_th;
        const M2 rev = -to_eigen(drift_) - D * S.inverse();
        if (rev.cwiseAbs().maxCoeff() * h <= kVanLoanLimit) {
            const auto [phi, q] = van_loan(rev, D, h);
            return factor_noise(phi, q);
        }
    }
    const M2 phi_f = to_eigen(propagator(h));
    const M2 psi = S * phi_f.adjoint() * to_eigen(sigma_pinv_);
    const M2 q = S - psi * S * psi.adjoint();
    return factor_noise(psi, q);
}

cplx FieldProcess::autocorrelation(double tau) const {
    const double t = std::abs(tau);
    const M2 c = to_eigen(propagator(t)) * to_eigen(sigma_);
    return tau >= 0.0 ? c(0, 0) : std::conj(c(0, 0));
}

}  // namespace phonon_forge
