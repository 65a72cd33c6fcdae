#pragma once

#include <cstddef>

namespace tfssl::numcore {

// Elementwise kernels built in a separate translation unit with vectorized
// libm calls. Inputs must be finite; exp arguments are clamped to the range
// where the result is finite and nonzero.
void VecExp(const double* x, double* y, std::size_t n);
// y = x * sigmoid(x)
void VecSilu(const double* x, double* y, std::size_t n);
// y = sigmoid(x)
void VecSigmoid(const double* x, double* y, std::size_t n);

}  // namespace tfssl::numcore
