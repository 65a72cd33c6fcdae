#pragma once

#include "tfssl/numcore/graph.hpp"

// Differentiable primitives. Every function adds one node to the graph that
// owns its inputs. Shapes follow the channel-last convention used by the
// network: sequences are [batch][length][channels].
namespace tfssl::numcore::ops {

Var Identity(const Var& x);
Var Reshape(const Var& x, Shape shape);

// Elementwise, same shape.
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& x, double s);

// x[..., C] + b[C]
Var AddBias(const Var& x, const Var& bias);
// x[..., C] * v[C]
Var MulChannels(const Var& x, const Var& v);

// x / sqrt(mean(x^2) + eps) over the last axis, without a learned gain.
Var RmsNorm(const Var& x, double eps = 1e-6);

Var Silu(const Var& x);
Var Tanh(const Var& x);
Var Softplus(const Var& x);
Var Exp(const Var& x);

// x[..., K] @ w[K, M] -> [..., M]
Var MatMul(const Var& x, const Var& w);

enum class Padding { kSame, kCausal };

// Full 1-D convolution along axis 1 of x[N][L][Cin] with w[K][Cin][Cout].
// kSame centers the kernel (K odd); kCausal only looks back. Zero padding.
Var Conv1d(const Var& x, const Var& w, std::size_t dilation, Padding padding);
// Per-channel convolution, x[N][L][C], w[K][C].
Var DepthwiseConv1d(const Var& x, const Var& w, std::size_t dilation, Padding padding);

// Averages groups of `factor` consecutive entries along axis 0; a trailing
// remainder is dropped.
Var MeanPool(const Var& x, std::size_t factor);

// Rows [begin, end) along axis 0.
Var Slice(const Var& x, std::size_t begin, std::size_t end);
// Reverses axis 1 of a rank-3 tensor.
Var Reverse(const Var& x);
// Concatenates along the last axis. Leading dims must agree.
Var Concat(const std::vector<Var>& xs);
// Swaps axes 0 and 1 of a rank-3 tensor.
Var SwapLeadingAxes(const Var& x);

Var Sum(const Var& x);
Var Mean(const Var& x);

// Linear recurrence h_t = a_t * h_{t-1} + b_t, y_t[e] = sum_s c_t[s] h_t[e][s]
// with a, b of shape [N][L][E][S], c of shape [N][L][S]; y is [N][L][E].
Var Scan(const Var& a, const Var& b, const Var& c);

// Fused selective scan: a_t = exp(delta_t * A), b_t = delta_t * B_t * u_t.
// u, delta: [N][L][E]; A: [E][S]; B, C: [N][L][S]. Returns [N][L][E].
Var SelectiveScan(const Var& u, const Var& delta, const Var& A, const Var& B, const Var& C);

// mean over rows with mask[r] != 0 of (pred - target)^2, for pred and target
// of shape [R][M]. Throws when every row is masked out.
Var MaskedMse(const Var& pred, const Tensor& target, const std::vector<bool>& mask);

}  // namespace tfssl::numcore::ops
