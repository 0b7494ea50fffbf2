#include "phonon_forge/convolution.hpp"

#include <algorithm>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "fftw_support.hpp"
#include "phonon_forge/error.hpp"

namespace phonon_forge {

using detail::Plan;
using detail::fftw_buffer;
using detail::planner_mutex;


std::size_t fft_friendly_size(std::size_t min_size) {
    for (std::size_t m = std::max<std::size_t>(min_size, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2u, 3u, 5u, 7u})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

std::vector<double> convolve_same(std::span<const double> field,
                                  std::span<const double> kernel, std::size_t n) {
    const std::size_t nk = 2 * n - 1;
    if (field.size() != n * n || kernel.size() != nk * nk) {
        throw DomainError("convolve_same: field must be n*n and kernel (2n-1)^2");
    }
    const std::size_t L = fft_friendly_size(nk);
    const std::size_t Lc = L / 2 + 1;
    auto f = fftw_buffer<double>(L * L);
    auto k = fftw_buffer<double>(L * L);
    auto F = fftw_buffer<fftw_complex>(L * Lc);
    auto K = fftw_buffer<fftw_complex>(L * Lc);

    std::unique_ptr<Plan> pf, pk, pinv;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        const int Li = static_cast<int>(L);
        pf = std::make_unique<Plan>(fftw_plan_dft_r2c_2d(Li, Li, f.get(), F.get(), FFTW_ESTIMATE));
        pk = std::make_unique<Plan>(fftw_plan_dft_r2c_2d(Li, Li, k.get(), K.get(), FFTW_ESTIMATE));
        pinv = std::make_unique<Plan>(fftw_plan_dft_c2r_2d(Li, Li, F.get(), f.get(), FFTW_ESTIMATE));
    }

    std::fill(f.get(), f.get() + L * L, 0.0);
    std::fill(k.get(), k.get() + L * L, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) f[i * L + j] = field[i * n + j];
    // offset d in [-(n-1), n-1] wraps to d mod L; L >= 2n-1 keeps them distinct
    const auto wrap = [&](std::size_t idx) {
        const long d = static_cast<long>(idx) - static_cast<long>(n - 1);
        return static_cast<std::size_t>(d < 0 ? d + static_cast<long>(L) : d);
    };
    for (std::size_t a = 0; a < nk; ++a)
        for (std::size_t b = 0; b < nk; ++b) k[wrap(a) * L + wrap(b)] = kernel[a * nk + b];

    pf->execute();
    pk->execute();
    const double scale = 1.0 / (static_cast<double>(L) * static_cast<double>(L));
    for (std::size_t i = 0; i < L * Lc; ++i) {
        const double re = F[i][0] * K[i][0] - F[i][1] * K[i][1];
        const double im = F[i][0] * K[i][1] + F[i][1] * K[i][0];
        F[i][0] = re * scale;
        F[i][1] = im * scale;
    }
    pinv->execute();

    std::vector<double> out(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = f[i * L + j];
    return out;
}

std::vector<double> convolve_same_direct(std::span<const double> field,
                                         std::span<const double> kernel, std::size_t n) {
    const std::size_t nk = 2 * n - 1;
    if (field.size() != n * n || kernel.size() != nk * nk) {
        throw DomainError("convolve_same_direct: field must be n*n and kernel (2n-1)^2");
    }
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    acc += field[a * n + b] * kernel[(i + n - 1 - a) * nk + (j + n - 1 - b)];
            out[i * n + j] = acc;
        }
    return out;
}

}  // namespace phonon_forge
