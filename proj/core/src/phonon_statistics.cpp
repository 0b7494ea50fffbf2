#include "phonon_forge/phonon_statistics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "phonon_forge/error.hpp"

namespace phonon_forge {

namespace {

void require_order(int n) {
    if (n < 0) throw DomainError("ladder order must be >= 0, got " + std::to_string(n));
}

double log_binomial(double top, double k) {
    return std::lgamma(top + 1.0) - std::lgamma(k + 1.0) - std::lgamma(top - k + 1.0);
}

// Kahan-summed reductions keep 1e-10 normalization checks honest at m ~ 1e4.
template <typename F>
double compensated_sum(std::size_t count, F&& term) {
    double sum = 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double y = term(i) - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace

ThermalSpec::ThermalSpec(double nbar) : nbar_(nbar), x_(0.0) {
    if (!std::isfinite(nbar) || nbar < 0.0) {
        throw DomainError("thermal occupation must be finite and >= 0, got " +
                          std::to_string(nbar));
    }
    x_ = nbar / (1.0 + nbar);
}

double NumberPmf::total() const {
    return compensated_sum(probs.size(), [&](std::size_t m) { return probs[m]; });
}

double NumberPmf::mean() const {
    return compensated_sum(probs.size(),
                           [&](std::size_t m) { return static_cast<double>(m) * probs[m]; });
}

double NumberPmf::variance() const {
    const double mu = mean();
    return compensated_sum(probs.size(), [&](std::size_t m) {
        const double d = static_cast<double>(m) - mu;
        return d * d * probs[m];
    });
}

std::size_t default_truncation(const ThermalSpec& spec, int n) {
    require_order(n);
    return static_cast<std::size_t>(
        std::ceil(20.0 * (n + 1) * std::max(spec.nbar(), 1.0)));
}

NumberPmf thermal_pmf(const ThermalSpec& spec, std::size_t m_max) {
    return subtracted_pmf(spec, 0, m_max);
}

NumberPmf subtracted_pmf(const ThermalSpec& spec, int n, std::size_t m_max) {
    require_order(n);
    if (n >= 1 && spec.nbar() == 0.0) {
        throw DomainError("subtraction from the ground state is undefined (zero herald probability)");
    }
    NumberPmf pmf;
    pmf.m_max = m_max;
    pmf.probs.assign(m_max + 1, 0.0);
    const double x = spec.x();
    if (x == 0.0) {
        pmf.probs[0] = 1.0;
        pmf.tail_mass = 0.0;
        return pmf;
    }
    const double log_x = std::log(x);
    double log_p = (n + 1) * std::log1p(-x);
    for (std::size_t m = 0; m <= m_max; ++m) {
        pmf.probs[m] = std::exp(log_p);
        const double md = static_cast<double>(m);
        log_p += log_x + std::log((md + n + 1.0) / (md + 1.0));
    }
    pmf.tail_mass = subtracted_tail(spec, n, m_max);
    return pmf;
}

double subtracted_tail(const ThermalSpec& spec, int n, std::size_t k) {
    require_order(n);
    const double x = spec.x();
    if (x == 0.0) return 0.0;
    const double trials = static_cast<double>(k) + n + 1.0;
    const double log_x = std::log(x);
    const double log_1mx = std::log1p(-x);
    double tail = 0.0;
    for (int j = 0; j <= n; ++j) {
        tail += std::exp(log_binomial(trials, j) + j * log_1mx + (trials - j) * log_x);
    }
    return std::min(tail, 1.0);
}

NumberPmf added_pmf(const ThermalSpec& spec, int n, std::size_t m_max) {
    require_order(n);
    NumberPmf pmf;
    pmf.m_max = m_max;
    pmf.probs.assign(m_max + 1, 0.0);
    const auto un = static_cast<std::size_t>(n);
    if (m_max < un) {
        pmf.tail_mass = 1.0;
        return pmf;
    }
    // Addition is well defined from the ground state; reuse the subtraction
    // recursion with x = 0 handled separately.
    if (spec.x() == 0.0) {
        pmf.probs[un] = 1.0;
        return pmf;
    }
    const NumberPmf sub = subtracted_pmf(spec, n, m_max - un);
    std::copy(sub.probs.begin(), sub.probs.end(), pmf.probs.begin() + static_cast<long>(un));
    pmf.tail_mass = sub.tail_mass;
    return pmf;
}

double mean_occupation(const ThermalSpec& spec, int n, LadderKind kind) {
    require_order(n);
    const double base = (n + 1) * spec.nbar();
    return kind == LadderKind::subtract ? base : base + n;
}

FidelityResult add_sub_fidelity(const ThermalSpec& spec, int n, std::size_t m_max, double eps) {
    if (n < 1) throw DomainError("fidelity needs order n >= 1");
    if (spec.nbar() <= 0.0) throw DomainError("fidelity needs nbar > 0");
    const NumberPmf sub = subtracted_pmf(spec, n, m_max);
    const NumberPmf add = added_pmf(spec, n, m_max);
    if (sub.tail_mass >= eps || add.tail_mass >= eps) {
        throw TruncationError("m_max=" + std::to_string(m_max) + " leaves tail mass " +
                              std::to_string(std::max(sub.tail_mass, add.tail_mass)) +
                              " >= " + std::to_string(eps));
    }
    const double f = compensated_sum(m_max + 1, [&](std::size_t m) {
        return std::sqrt(sub.probs[m] * add.probs[m]);
    });
    const double bound = std::pow(spec.x(), 0.5 * n);
    if (!(f > bound) || !(f < 1.0)) {
        throw NumericalError("fidelity " + std::to_string(f) + " violates bound (" +
                             std::to_string(bound) + ", 1)");
    }
    return {f, bound};
}

double similarity_threshold(int n) {
    require_order(n);
    const double nd = n;
    return (-(1.0 + nd) + std::sqrt(4.0 * nd * nd * nd + 5.0 * nd * nd + 2.0 * nd + 1.0)) /
           (2.0 * (1.0 + nd));
}

NumberPmf fock_oracle(const ThermalSpec& spec, int n, LadderKind kind, std::size_t m_max) {
    require_order(n);
    const double x = spec.x();
    const double thermal_tail = std::pow(x, static_cast<double>(m_max) + 1.0);
    if (thermal_tail >= 1e-12) {
        throw TruncationError("fock_oracle: thermal tail " + std::to_string(thermal_tail) +
                              " at m_max=" + std::to_string(m_max) + " exceeds 1e-12");
    }
    if (kind == LadderKind::subtract && n >= 1 && spec.nbar() == 0.0) {
        throw DomainError("subtraction from the ground state is undefined (zero herald probability)");
    }
    const auto un = static_cast<std::size_t>(n);
    // Diagonal of the density operator, carried n levels past m_max so that the
    // ladder steps see every level that feeds [0, m_max].
    std::vector<double> rho(m_max + 1 + un, 0.0);
    for (std::size_t m = 0; m < rho.size(); ++m) {
        rho[m] = (1.0 - x) * std::pow(x, static_cast<double>(m));
    }
    for (int step = 0; step < n; ++step) {
        if (kind == LadderKind::subtract) {
            // <m| b rho b^dag |m> = (m+1) rho_{m+1}
            for (std::size_t m = 0; m + 1 < rho.size(); ++m) {
                const double elem = std::sqrt(static_cast<double>(m + 1));
                rho[m] = elem * rho[m + 1] * elem;
            }
            rho.back() = 0.0;
        } else {
            // <m| b^dag rho b |m> = m rho_{m-1}
            for (std::size_t m = rho.size() - 1; m >= 1; --m) {
                const double elem = std::sqrt(static_cast<double>(m));
                rho[m] = elem * rho[m - 1] * elem;
            }
            rho[0] = 0.0;
        }
    }
    const double norm = compensated_sum(rho.size(), [&](std::size_t m) { return rho[m]; });
    if (!(norm > 0.0)) throw NumericalError("fock_oracle: conditional state has zero norm");
    NumberPmf pmf;
    pmf.m_max = m_max;
    pmf.probs.resize(m_max + 1);
    for (std::size_t m = 0; m <= m_max; ++m) pmf.probs[m] = rho[m] / norm;
    pmf.tail_mass = compensated_sum(un, [&](std::size_t i) { return rho[m_max + 1 + i]; }) / norm;
    return pmf;
}

}  // namespace phonon_forge
