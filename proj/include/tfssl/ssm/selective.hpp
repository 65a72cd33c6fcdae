#pragma once

#include <random>
#include <string>

#include "tfssl/numcore/params.hpp"
#include "tfssl/ssm/scan.hpp"

namespace tfssl::ssm {

using numcore::ParamScope;
using numcore::TensorMap;
using numcore::Var;

// Zero-order hold for the diagonal A and Euler for B:
//   a[t][e][s]  = exp(delta[t][e] * A[e][s])
//   bx[t][e][s] = delta[t][e] * B[t][s] * x[t][e]
// delta, x: [L][E]; A: [E][S]; B, C: [L][S]. Throws on delta <= 0.
ScanInputs Discretize(const Tensor& delta, const Tensor& A, const Tensor& B, const Tensor& C,
                      const Tensor& x);

// Shapes of one selective SSM branch (one scan direction).
struct BranchShape {
  std::size_t inner = 0;    // E = expand * model width
  std::size_t d_state = 16;
  std::size_t conv_width = 4;
  std::size_t dt_rank = 1;
};

// Step size and per-step B, C of the selection mechanism:
//   delta = softplus(dt_proj(x_proj_dt(x)) + dt_bias)
//   B = x B_proj + B_bias,  C = x C_proj + C_bias
struct SelectiveProjections {
  Var delta;  // [N][L][E]
  Var B;      // [N][L][S]
  Var C;      // [N][L][S]
};
SelectiveProjections SelectiveParams(const ParamScope& p, const Var& x);

// Same, outside any graph. x is [L][E]; branch parameters are looked up in
// `store` under `prefix`.
struct SelectiveValues {
  Tensor delta;
  Tensor B;
  Tensor C;
};
SelectiveValues SelectiveParamsValues(const TensorMap& store, const std::string& prefix,
                                      const Tensor& x);

// Causal depthwise conv + SiLU + selective scan + D skip over u [N][L][E].
Var SelectiveBranch(const ParamScope& p, const Var& u, const BranchShape& shape);

// Parameter tensors of one branch under `prefix`:
//   conv_w [K][E], conv_b [E], x_proj_dt [E][R], dt_proj [R][E], dt_bias [E],
//   B_proj [E][S], B_bias [S], C_proj [E][S], C_bias [S], log_A [E][S], D [E].
// A = -exp(log_A) stays strictly negative for any log_A.
void InitBranch(TensorMap& store, const std::string& prefix, const BranchShape& shape,
                std::mt19937_64& rng);
std::size_t BranchParamCount(const BranchShape& shape);

// softplus^{-1}(y) for y > 0.
double InverseSoftplus(double y);

}  // namespace tfssl::ssm
