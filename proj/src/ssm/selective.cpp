#include "tfssl/ssm/selective.hpp"

#include <cmath>

#include "tfssl/error.hpp"
#include "tfssl/numcore/ops.hpp"

namespace tfssl::ssm {

namespace ops = numcore::ops;
using numcore::Graph;

ScanInputs Discretize(const Tensor& delta, const Tensor& A, const Tensor& B, const Tensor& C,
                      const Tensor& x) {
  Require(delta.rank() == 2 && x.shape() == delta.shape() && A.rank() == 2 &&
              A.dim(0) == delta.dim(1) && B.rank() == 2 && B.dim(0) == delta.dim(0) &&
              B.dim(1) == A.dim(1) && C.shape() == B.shape(),
          ErrorKind::kShape, "discretize: inconsistent shapes");
  for (double d : delta.values())
    Require(d > 0.0, ErrorKind::kInvalidArgument, "discretize: step size must be positive");
  const std::size_t L = delta.dim(0), E = delta.dim(1), S = A.dim(1);
  ScanInputs out{Tensor({L, E, S}), Tensor({L, E, S}), C};
  for (std::size_t t = 0; t < L; ++t)
    for (std::size_t e = 0; e < E; ++e) {
      const double dt = delta[t * E + e];
      for (std::size_t s = 0; s < S; ++s) {
        const std::size_t i = (t * E + e) * S + s;
        out.a[i] = std::exp(dt * A[e * S + s]);
        out.bx[i] = dt * B[t * S + s] * x[t * E + e];
      }
    }
  return out;
}

SelectiveProjections SelectiveParams(const ParamScope& p, const Var& x) {
  Var dt_low = ops::MatMul(x, p("x_proj_dt"));
  Var delta = ops::Softplus(ops::AddBias(ops::MatMul(dt_low, p("dt_proj")), p("dt_bias")));
  Var B = ops::AddBias(ops::MatMul(x, p("B_proj")), p("B_bias"));
  Var C = ops::AddBias(ops::MatMul(x, p("C_proj")), p("C_bias"));
  return {delta, B, C};
}

SelectiveValues SelectiveParamsValues(const TensorMap& store, const std::string& prefix,
                                      const Tensor& x) {
  Require(x.rank() == 2, ErrorKind::kShape, "selective params: x must be [L][E]");
  Graph g(false);
  ParamScope p(g, store, prefix);
  Var in = g.Constant(x.Reshaped({1, x.dim(0), x.dim(1)}));
  SelectiveProjections sp = SelectiveParams(p, in);
  const std::size_t L = x.dim(0);
  return {sp.delta.value().Reshaped({L, sp.delta.dim(2)}), sp.B.value().Reshaped({L, sp.B.dim(2)}),
          sp.C.value().Reshaped({L, sp.C.dim(2)})};
}

Var SelectiveBranch(const ParamScope& p, const Var& u, const BranchShape& shape) {
  Var conv = ops::AddBias(
      ops::DepthwiseConv1d(u, p("conv_w"), 1, ops::Padding::kCausal), p("conv_b"));
  Var a = ops::Silu(conv);
  SelectiveProjections sp = SelectiveParams(p, a);
  Var A = ops::Scale(ops::Exp(p("log_A")), -1.0);
  Require(A.dim(1) == shape.d_state, ErrorKind::kShape, "branch state size mismatch");
  Var y = ops::SelectiveScan(a, sp.delta, A, sp.B, sp.C);
  return ops::Add(y, ops::MulChannels(a, p("D")));
}

double InverseSoftplus(double y) {
  Require(y > 0.0, ErrorKind::kInvalidArgument, "inverse softplus needs y > 0");
  return y + std::log(-std::expm1(-y));
}

void InitBranch(TensorMap& store, const std::string& prefix, const BranchShape& shape,
                std::mt19937_64& rng) {
  const std::size_t E = shape.inner, S = shape.d_state, K = shape.conv_width, R = shape.dt_rank;
  Require(E >= 1 && S >= 1 && K >= 1 && R >= 1, ErrorKind::kConfig, "branch sizes must be >= 1");
  auto uniform = [&rng](Tensor t, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : t.storage()) v = u(rng);
    return t;
  };
  const double inv_sqrt_e = 1.0 / std::sqrt(static_cast<double>(E));
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(K));
  store[prefix + "conv_w"] = uniform(Tensor({K, E}), inv_sqrt_k);
  store[prefix + "conv_b"] = uniform(Tensor({E}), inv_sqrt_k);
  store[prefix + "x_proj_dt"] = uniform(Tensor({E, R}), inv_sqrt_e);
  store[prefix + "dt_proj"] = uniform(Tensor({R, E}), 1.0 / std::sqrt(static_cast<double>(R)));
  // Initial step sizes log-uniform in [1e-3, 1e-1].
  Tensor dt_bias({E});
  std::uniform_real_distribution<double> logu(std::log(1e-3), std::log(1e-1));
  for (double& v : dt_bias.storage()) v = InverseSoftplus(std::exp(logu(rng)));
  store[prefix + "dt_bias"] = dt_bias;
  store[prefix + "B_proj"] = uniform(Tensor({E, S}), inv_sqrt_e);
  store[prefix + "B_bias"] = Tensor({S});
  store[prefix + "C_proj"] = uniform(Tensor({E, S}), inv_sqrt_e);
  store[prefix + "C_bias"] = Tensor({S});
  Tensor log_a({E, S});
  for (std::size_t e = 0; e < E; ++e)
    for (std::size_t s = 0; s < S; ++s) log_a[e * S + s] = std::log(static_cast<double>(s + 1));
  store[prefix + "log_A"] = log_a;
  store[prefix + "D"] = Tensor({E}, 1.0);
}

std::size_t BranchParamCount(const BranchShape& s) {
  return s.inner * (s.conv_width + 3 + 2 * s.dt_rank + 3 * s.d_state) + 2 * s.d_state;
}

}  // namespace tfssl::ssm
