#include "tfssl/ssm/bimamba.hpp"

#include <cmath>

#include "tfssl/error.hpp"
#include "tfssl/numcore/ops.hpp"

namespace tfssl::ssm {

namespace ops = numcore::ops;

BranchShape BiMambaShape::Branch() const {
  BranchShape b;
  b.inner = expand * width;
  b.d_state = d_state;
  b.conv_width = conv_width;
  b.dt_rank = dt_rank ? dt_rank : (width + 15) / 16;
  return b;
}

Var BiMamba(const ParamScope& p, const Var& x, const BiMambaShape& shape, bool tie_directions) {
  Require(x.value().rank() == 3 && x.dim(2) == shape.width && x.dim(1) >= 1, ErrorKind::kShape,
          "bimamba: input " + numcore::ShapeString(x.shape()) + " for width " +
              std::to_string(shape.width));
  const BranchShape branch = shape.Branch();
  const Var xn = ops::RmsNorm(x);
  Var u = ops::MatMul(xn, p("in_proj"));
  Var gate = ops::Silu(ops::MatMul(xn, p("gate_proj")));
  Var fwd = SelectiveBranch(p.Sub("fwd."), u, branch);
  Var rev = ops::Reverse(
      SelectiveBranch(p.Sub(tie_directions ? "fwd." : "rev."), ops::Reverse(u), branch));
  Var avg = ops::Scale(ops::Add(fwd, rev), 0.5);
  Var out = ops::MatMul(ops::Mul(avg, gate), p("out_proj"));
  return ops::Add(out, x);
}

void InitBiMamba(TensorMap& store, const std::string& prefix, const BiMambaShape& shape,
                 std::mt19937_64& rng) {
  const std::size_t D = shape.width, E = shape.expand * shape.width;
  Require(D >= 1 && shape.expand >= 1, ErrorKind::kConfig, "bimamba width/expand must be >= 1");
  auto uniform = [&rng](Tensor t, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : t.storage()) v = u(rng);
    return t;
  };
  store[prefix + "in_proj"] = uniform(Tensor({D, E}), 1.0 / std::sqrt(static_cast<double>(D)));
  store[prefix + "gate_proj"] = uniform(Tensor({D, E}), 1.0 / std::sqrt(static_cast<double>(D)));
  store[prefix + "out_proj"] = uniform(Tensor({E, D}), 1.0 / std::sqrt(static_cast<double>(E)));
  InitBranch(store, prefix + "fwd.", shape.Branch(), rng);
  InitBranch(store, prefix + "rev.", shape.Branch(), rng);
}

std::size_t BiMambaParamCount(const BiMambaShape& shape) {
  const std::size_t D = shape.width, E = shape.expand * shape.width;
  return 3 * D * E + 2 * BranchParamCount(shape.Branch());
}

Tensor BiMambaForward(const TensorMap& store, const std::string& prefix, const Tensor& x,
                      const BiMambaShape& shape, bool tie_directions) {
  Require(x.rank() == 2, ErrorKind::kShape, "bimamba forward: x must be [L][D]");
  numcore::Graph g(false);
  ParamScope p(g, store, prefix);
  Var in = g.Constant(x.Reshaped({1, x.dim(0), x.dim(1)}));
  return BiMamba(p, in, shape, tie_directions).value().Reshaped(x.shape());
}

}  // namespace tfssl::ssm
