#pragma once

#include <cstdint>

#include "tfssl/net/config.hpp"
#include "tfssl/numcore/params.hpp"
#include "tfssl/ssm/bimamba.hpp"

namespace tfssl::net {

using numcore::ParamScope;
using numcore::Tensor;
using numcore::TensorMap;
using numcore::Var;
using numcore::Shape;

// FeatureTensor [C][T][F] -> channel-last [T][F][C] used inside the network.
Tensor ToChannelLast(const Tensor& features);

// conv -> dilated dense layers along frequency -> 1x1 conv.
// x [T][F][in_channels] -> [T][F][model_width].
Var FeatureEncoder(const ParamScope& p, const Var& x, const NetConfig& cfg);

struct TfBlockState {
  Var x;
  Var t_skip;  // previous block's T-BiMamba output (null before the first block)
  Var f_skip;  // previous block's F-BiMamba output
};

// One TF-Mamba block on x [T][F][W]: the T-BiMamba runs per frame over the
// frequency sequence, the F-BiMamba per bin over the time sequence.
//   t = T(x);  x1 = t + t_skip;  f = F(x1);  x' = f + f_skip
TfBlockState TfBlock(const ParamScope& p, const TfBlockState& in, std::size_t expand,
                     const NetConfig& cfg);

// RMS-normalize each T-F position, mean-pool over time by pool_factor,
// flatten each pooled frame and divide by sqrt(F * W), fully connected to
// 181 values, tanh. x [T][F][W] -> [T / pool][181].
Var Decode(const ParamScope& p, const Var& x, const NetConfig& cfg);

class TfMambaNet {
 public:
  explicit TfMambaNet(NetConfig cfg);

  void Init(std::uint64_t seed);

  const NetConfig& config() const { return cfg_; }
  TensorMap& params() { return params_; }
  const TensorMap& params() const { return params_; }
  // Replaces the parameters; names and shapes must match Init's layout.
  void SetParams(TensorMap params);

  // Whole network in a graph: x [T][F][in_channels] -> [T / pool][181].
  Var Forward(const ParamScope& p, const Var& x) const;

  // Graph-free inference on a FeatureTensor [C][T][F], layer by layer with
  // sequences batched in chunks to bound memory.
  Tensor Predict(const Tensor& features) const;

  static std::size_t ParamCount(const NetConfig& cfg);
  std::size_t NumParams() const;

 private:
  ssm::BiMambaShape LayerShape(std::size_t expand) const;

  NetConfig cfg_;
  TensorMap params_;
};

}  // namespace tfssl::net
