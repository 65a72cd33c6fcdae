#pragma once

#include "tfssl/ssm/selective.hpp"

namespace tfssl::ssm {

struct BiMambaShape {
  std::size_t width = 16;   // model channels D
  std::size_t expand = 2;   // inner channels E = expand * width
  std::size_t d_state = 16;
  std::size_t conv_width = 4;
  std::size_t dt_rank = 0;  // 0: ceil(width / 16)

  BranchShape Branch() const;
};

// Bidirectional Mamba layer over x [N][L][D]:
//   n = rms_norm(x)  (per position, no gain)
//   u = n W_in, g = silu(n W_gate)
//   y = (branch_fwd(u) + reverse(branch_rev(reverse(u)))) / 2
//   out = (y * g) W_out + x
// With tie_directions the reverse branch reuses the "fwd." parameters.
Var BiMamba(const ParamScope& p, const Var& x, const BiMambaShape& shape,
            bool tie_directions = false);

// Parameters under `prefix`: in_proj [D][E], gate_proj [D][E], out_proj [E][D],
// plus branches "fwd." and "rev.".
void InitBiMamba(TensorMap& store, const std::string& prefix, const BiMambaShape& shape,
                 std::mt19937_64& rng);
std::size_t BiMambaParamCount(const BiMambaShape& shape);

// Graph-free evaluation of one layer on a single sequence x [L][D].
Tensor BiMambaForward(const TensorMap& store, const std::string& prefix, const Tensor& x,
                      const BiMambaShape& shape, bool tie_directions = false);

}  // namespace tfssl::ssm
