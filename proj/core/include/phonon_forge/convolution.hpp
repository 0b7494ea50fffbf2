#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace phonon_forge {

// Smallest size >= min_size whose only prime factors are 2, 3, 5, 7.
std::size_t fft_friendly_size(std::size_t min_size);

// Linear 2D convolution of an n x n field with a kernel sampled on the
// (2n-1) x (2n-1) offset grid (offset d stored at index d + n - 1).
// Returns out[i][j] = sum_{k,l} field[k][l] kernel[i-k][j-l], i, j in [0, n).
// Zero-padded FFT, so the result equals the direct sum up to rounding.
std::vector<double> convolve_same(std::span<const double> field,
                                  std::span<const double> kernel, std::size_t n);

// O(n^4) direct summation of the same quantity. Reference for tests.
std::vector<double> convolve_same_direct(std::span<const double> field,
                                         std::span<const double> kernel, std::size_t n);

}  // namespace phonon_forge
