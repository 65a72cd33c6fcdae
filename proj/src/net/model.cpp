#include "tfssl/net/model.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "tfssl/error.hpp"
#include "tfssl/numcore/ops.hpp"

namespace tfssl::net {

namespace ops = numcore::ops;
using numcore::Graph;

namespace {

Tensor SwapLeading(const Tensor& x) {
  const std::size_t A = x.dim(0), B = x.dim(1), C = x.dim(2);
  Tensor out({B, A, C});
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < B; ++b)
      std::copy_n(x.data() + (a * B + b) * C, C, out.data() + (b * A + a) * C);
  return out;
}

// Runs fn on row chunks of x (split along axis 0) and stitches the outputs.
Tensor RunChunked(const TensorMap& params, const Tensor& x, std::size_t chunk,
                  const std::function<Var(const ParamScope&, const Var&)>& fn) {
  const std::size_t rows = x.dim(0);
  const std::size_t inner = x.Stride(0);
  Tensor out;
  std::size_t out_inner = 0;
  for (std::size_t start = 0; start < rows; start += chunk) {
    const std::size_t n = std::min(chunk, rows - start);
    Shape s = x.shape();
    s[0] = n;
    Tensor piece(s, std::vector<double>(x.data() + start * inner, x.data() + (start + n) * inner));
    Graph g(false);
    ParamScope p(g, params);
    Tensor y = fn(p, g.Constant(std::move(piece))).value();
    if (start == 0) {
      Shape os = y.shape();
      os[0] = rows;
      out = Tensor(os);
      out_inner = y.Stride(0);
    }
    std::copy(y.storage().begin(), y.storage().end(), out.data() + start * out_inner);
  }
  return out;
}

std::size_t ChunkRows(std::size_t row_elems) {
  constexpr std::size_t kBudget = 1u << 22;  // doubles per intermediate tensor
  return std::max<std::size_t>(1, kBudget / std::max<std::size_t>(1, row_elems));
}

std::string DenseName(std::size_t i) { return "enc.dense" + std::to_string(i) + "."; }
std::string BlockName(std::size_t b) { return "block" + std::to_string(b) + "."; }

}  // namespace

Tensor ToChannelLast(const Tensor& f) {
  Require(f.rank() == 3, ErrorKind::kShape, "feature tensor must be [C][T][F]");
  const std::size_t C = f.dim(0), T = f.dim(1), F = f.dim(2);
  Tensor out({T, F, C});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t k = 0; k < F; ++k) out[(t * F + k) * C + c] = f[(c * T + t) * F + k];
  return out;
}

Var FeatureEncoder(const ParamScope& p, const Var& x, const NetConfig& cfg) {
  Require(x.value().rank() == 3 && x.dim(2) == cfg.in_channels, ErrorKind::kShape,
          "feature encoder expects " + std::to_string(cfg.in_channels) + " input channels, got " +
              numcore::ShapeString(x.shape()));
  Var h = ops::Silu(ops::AddBias(ops::Conv1d(x, p("enc.conv_in.w"), 1, ops::Padding::kSame),
                                 p("enc.conv_in.b")));
  std::vector<Var> feats{h};
  for (std::size_t i = 0; i < cfg.dense_dilations.size(); ++i) {
    Var in = feats.size() == 1 ? feats[0] : ops::Concat(feats);
    Var y = ops::Silu(ops::AddBias(
        ops::Conv1d(in, p(DenseName(i) + "w"), cfg.dense_dilations[i], ops::Padding::kSame),
        p(DenseName(i) + "b")));
    feats.push_back(y);
  }
  Var all = feats.size() == 1 ? feats[0] : ops::Concat(feats);
  return ops::AddBias(ops::Conv1d(all, p("enc.conv_out.w"), 1, ops::Padding::kSame),
                      p("enc.conv_out.b"));
}

TfBlockState TfBlock(const ParamScope& p, const TfBlockState& in, std::size_t expand,
                     const NetConfig& cfg) {
  ssm::BiMambaShape shape;
  shape.width = cfg.model_width;
  shape.expand = expand;
  shape.d_state = cfg.d_state;
  shape.conv_width = cfg.conv_width;
  shape.dt_rank = cfg.dt_rank;
  Require(in.x.value().rank() == 3 && in.x.dim(2) == cfg.model_width, ErrorKind::kShape,
          "tf block input " + numcore::ShapeString(in.x.shape()));
  Var t = cfg.use_t_mamba ? ssm::BiMamba(p.Sub("t."), in.x, shape) : in.x;
  Var x1 = in.t_skip ? ops::Add(t, in.t_skip) : t;
  Var f = x1;
  if (cfg.use_f_mamba) {
    f = ops::SwapLeadingAxes(ssm::BiMamba(p.Sub("f."), ops::SwapLeadingAxes(x1), shape));
  }
  Var out = in.f_skip ? ops::Add(f, in.f_skip) : f;
  return {out, t, f};
}

Var Decode(const ParamScope& p, const Var& x, const NetConfig& cfg) {
  Require(x.value().rank() == 3, ErrorKind::kShape, "decoder expects [T][F][W]");
  Require(x.dim(0) >= cfg.pool_factor, ErrorKind::kShape,
          "decoder needs at least pool_factor (" + std::to_string(cfg.pool_factor) +
              ") frames, got " + std::to_string(x.dim(0)));
  Var pooled = ops::MeanPool(ops::RmsNorm(x), cfg.pool_factor);
  const std::size_t fan_in = pooled.dim(1) * pooled.dim(2);
  // Unit L2 norm per frame instead of unit RMS: with thousands of inputs of
  // consistent sign, one Adam step on the weights would otherwise move every
  // logit by O(1) and saturate the tanh.
  Var flat = ops::Scale(ops::Reshape(pooled, {pooled.dim(0), fan_in}),
                        1.0 / std::sqrt(static_cast<double>(fan_in)));
  return ops::Tanh(ops::AddBias(ops::MatMul(flat, p("dec.fc.w")), p("dec.fc.b")));
}

TfMambaNet::TfMambaNet(NetConfig cfg) : cfg_(std::move(cfg)) { cfg_.Validate(); }

ssm::BiMambaShape TfMambaNet::LayerShape(std::size_t expand) const {
  ssm::BiMambaShape s;
  s.width = cfg_.model_width;
  s.expand = expand;
  s.d_state = cfg_.d_state;
  s.conv_width = cfg_.conv_width;
  s.dt_rank = cfg_.dt_rank;
  return s;
}

void TfMambaNet::Init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  params_.clear();
  auto uniform = [&rng](Shape shape, double bound) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : t.storage()) v = u(rng);
    return t;
  };
  const std::size_t W = cfg_.model_width, K = cfg_.encoder_kernel, G = cfg_.dense_growth;
  auto conv = [&](const std::string& name, std::size_t k, std::size_t cin, std::size_t cout) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(k * cin));
    params_[name + "w"] = uniform({k, cin, cout}, bound);
    params_[name + "b"] = uniform({cout}, bound);
  };
  conv("enc.conv_in.", K, cfg_.in_channels, W);
  std::size_t ch = W;
  for (std::size_t i = 0; i < cfg_.dense_dilations.size(); ++i) {
    conv(DenseName(i), K, ch, G);
    ch += G;
  }
  conv("enc.conv_out.", 1, ch, W);
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
    const auto shape = LayerShape(cfg_.expand_per_block[b]);
    if (cfg_.use_t_mamba) ssm::InitBiMamba(params_, BlockName(b) + "t.", shape, rng);
    if (cfg_.use_f_mamba) ssm::InitBiMamba(params_, BlockName(b) + "f.", shape, rng);
  }
  // Shrink the residual branches by the number of BiMamba layers so the two
  // skip chains start close to the identity.
  const double residual_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(cfg_.n_blocks));
  for (auto& [name, t] : params_)
    if (name.ends_with("out_proj"))
      for (double& v : t.storage()) v *= residual_scale;
  const std::size_t fan_in = cfg_.n_bins * W;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  params_["dec.fc.w"] = uniform({fan_in, cfg_.n_doa}, bound);
  params_["dec.fc.b"] = Tensor({cfg_.n_doa});
}

void TfMambaNet::SetParams(TensorMap params) {
  TfMambaNet reference(cfg_);
  reference.Init(0);
  for (const auto& [name, t] : reference.params_) {
    auto it = params.find(name);
    Require(it != params.end(), ErrorKind::kData, "checkpoint is missing parameter '" + name + "'");
    Require(it->second.shape() == t.shape(), ErrorKind::kData,
            "parameter '" + name + "' has shape " + numcore::ShapeString(it->second.shape()) +
                ", model config expects " + numcore::ShapeString(t.shape()));
  }
  for (const auto& [name, t] : params)
    Require(reference.params_.contains(name), ErrorKind::kData,
            "checkpoint has unexpected parameter '" + name + "'");
  params_ = std::move(params);
}

Var TfMambaNet::Forward(const ParamScope& p, const Var& x) const {
  Require(x.value().rank() == 3 && x.dim(1) == cfg_.n_bins, ErrorKind::kShape,
          "network input " + numcore::ShapeString(x.shape()) + " does not have " +
              std::to_string(cfg_.n_bins) + " bins");
  TfBlockState s{FeatureEncoder(p, x, cfg_), Var(), Var()};
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b)
    s = TfBlock(p.Sub(BlockName(b)), s, cfg_.expand_per_block[b], cfg_);
  return Decode(p, s.x, cfg_);
}

Tensor TfMambaNet::Predict(const Tensor& features) const {
  Require(features.rank() == 3 && features.dim(0) == cfg_.in_channels &&
              features.dim(2) == cfg_.n_bins,
          ErrorKind::kShape,
          "feature tensor " + numcore::ShapeString(features.shape()) + " does not match the model");
  const Tensor x = ToChannelLast(features);
  const std::size_t T = x.dim(0), F = x.dim(1), W = cfg_.model_width;
  const std::size_t enc_width = W + cfg_.dense_growth * cfg_.dense_dilations.size();
  Tensor h = RunChunked(params_, x, ChunkRows(F * enc_width),
                        [this](const ParamScope& p, const Var& v) {
                          return FeatureEncoder(p, v, cfg_);
                        });
  Tensor t_skip, f_skip;
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
    const auto shape = LayerShape(cfg_.expand_per_block[b]);
    const std::size_t E = shape.expand * W;
    const std::string prefix = BlockName(b);
    Tensor t = h;
    if (cfg_.use_t_mamba) {
      t = RunChunked(params_, h, ChunkRows(F * E * 4), [&](const ParamScope& p, const Var& v) {
        return ssm::BiMamba(p.Sub(prefix + "t."), v, shape);
      });
    }
    Tensor x1 = t;
    if (t_skip.size()) {
      for (std::size_t i = 0; i < x1.size(); ++i) x1[i] += t_skip[i];
    }
    Tensor f = x1;
    if (cfg_.use_f_mamba) {
      f = SwapLeading(RunChunked(params_, SwapLeading(x1), ChunkRows(T * E * 4),
                                 [&](const ParamScope& p, const Var& v) {
                                   return ssm::BiMamba(p.Sub(prefix + "f."), v, shape);
                                 }));
    }
    h = f;
    if (f_skip.size()) {
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += f_skip[i];
    }
    t_skip = std::move(t);
    f_skip = std::move(f);
  }
  Graph g(false);
  ParamScope p(g, params_);
  return Decode(p, g.Constant(std::move(h)), cfg_).value();
}

std::size_t TfMambaNet::ParamCount(const NetConfig& cfg) {
  cfg.Validate();
  const std::size_t W = cfg.model_width, K = cfg.encoder_kernel, G = cfg.dense_growth;
  std::size_t n = K * cfg.in_channels * W + W;
  std::size_t ch = W;
  for (std::size_t i = 0; i < cfg.dense_dilations.size(); ++i) {
    n += K * ch * G + G;
    ch += G;
  }
  n += ch * W + W;
  for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
    ssm::BiMambaShape s;
    s.width = W;
    s.expand = cfg.expand_per_block[b];
    s.d_state = cfg.d_state;
    s.conv_width = cfg.conv_width;
    s.dt_rank = cfg.dt_rank;
    const std::size_t layer = ssm::BiMambaParamCount(s);
    n += (cfg.use_t_mamba ? layer : 0) + (cfg.use_f_mamba ? layer : 0);
  }
  n += cfg.n_bins * W * cfg.n_doa + cfg.n_doa;
  return n;
}

std::size_t TfMambaNet::NumParams() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

}  // namespace tfssl::net
