#pragma once

#include <cstddef>
#include <vector>

namespace phonon_forge {

inline constexpr double kDefaultTailEpsilon = 1e-8;

// Thermal state of a single bosonic mode.
class ThermalSpec {
public:
    explicit ThermalSpec(double nbar);

    double nbar() const noexcept { return nbar_; }
    // x = nbar / (1 + nbar)
    double x() const noexcept { return x_; }

private:
    double nbar_;
    double x_;
};

// Truncated phonon-number distribution. tail_mass is the exact mass beyond m_max.
struct NumberPmf {
    std::vector<double> probs;
    std::size_t m_max = 0;
    double tail_mass = 0.0;

    double total() const;
    double mean() const;
    double variance() const;
};

enum class LadderKind { subtract, add };

// ceil(20 (n+1) max(nbar, 1))
std::size_t default_truncation(const ThermalSpec& spec, int n);

NumberPmf thermal_pmf(const ThermalSpec& spec, std::size_t m_max);

// n-phonon-subtracted thermal state, p(m) = (1-x)^{n+1} x^m C(m+n, n).
NumberPmf subtracted_pmf(const ThermalSpec& spec, int n, std::size_t m_max);

// n-phonon-added thermal state, p(m) = p_sub(m - n) for m >= n.
NumberPmf added_pmf(const ThermalSpec& spec, int n, std::size_t m_max);

// Analytic P(M > k) of the subtracted distribution.
double subtracted_tail(const ThermalSpec& spec, int n, std::size_t k);

double mean_occupation(const ThermalSpec& spec, int n, LadderKind kind);

struct FidelityResult {
    double fidelity;
    double lower_bound;  // (nbar/(1+nbar))^{n/2}
};

// Bhattacharyya overlap of the added and subtracted pmfs. Throws TruncationError
// when either pmf leaves tail mass >= eps beyond m_max.
FidelityResult add_sub_fidelity(const ThermalSpec& spec, int n, std::size_t m_max,
                                double eps = kDefaultTailEpsilon);

// Occupation above which the added and subtracted states become similar.
double similarity_threshold(int n);

// Brute-force oracle: applies b (or b^dag) n times to the truncated thermal
// density matrix and renormalizes. Requires thermal tail < 1e-12 at m_max.
NumberPmf fock_oracle(const ThermalSpec& spec, int n, LadderKind kind, std::size_t m_max);

}  // namespace phonon_forge
