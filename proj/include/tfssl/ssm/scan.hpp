#pragma once

#include "tfssl/numcore/tensor.hpp"

namespace tfssl::ssm {

using numcore::Tensor;

// Discrete inputs of one linear recurrence over L steps, E channels and
// S state dimensions:
//   a  [L][E][S]  per-step transition (A_bar)
//   bx [L][E][S]  per-step input injection (B_bar x)
//   c  [L][S]     per-step output map, shared across channels
struct ScanInputs {
  Tensor a;
  Tensor bx;
  Tensor c;

  std::size_t steps() const { return a.dim(0); }
  std::size_t channels() const { return a.dim(1); }
  std::size_t state() const { return a.dim(2); }
  void Validate() const;
};

// h_t = a_t * h_{t-1} + bx_t with h_0 = 0; y_t[e] = sum_s c_t[s] h_t[e][s].
// Returns y [L][E].
Tensor ScanSequential(const ScanInputs& in);

// Same contract, computed with a work-efficient up-sweep/down-sweep scan
// over the affine maps (a, b), combined as (a2, b2) o (a1, b1) = (a2 a1, a2 b1 + b2).
Tensor ScanParallel(const ScanInputs& in);

// Convolution kernel of a time-invariant system, K[k][e] = sum_s c[s] a[e][s]^k b[e][s]
// for k = 0..length-1, with a, b of shape [E][S] and c of shape [S].
Tensor SsmKernel(const Tensor& a_bar, const Tensor& b_bar, const Tensor& c, std::size_t length);

// y[t][e] = sum_{k<=t} kernel[k][e] x[t-k][e], x [L][E], kernel [>=L][E].
Tensor CausalConvolve(const Tensor& x, const Tensor& kernel);

}  // namespace tfssl::ssm
