#include "tfssl/numcore/vecmath.hpp"

#include <algorithm>
#include <cmath>

// Compiled with -ffast-math so the exp loops map onto libmvec. Nothing here
// relies on NaN or Inf semantics.

namespace tfssl::numcore {

void VecExp(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::exp(std::clamp(x[i], -708.0, 708.0));
}

void VecSigmoid(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(std::clamp(-x[i], -708.0, 708.0)));
}

void VecSilu(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] = x[i] / (1.0 + std::exp(std::clamp(-x[i], -708.0, 708.0)));
}

}  // namespace tfssl::numcore
