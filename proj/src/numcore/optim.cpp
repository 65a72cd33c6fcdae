#include "tfssl/numcore/optim.hpp"

#include <cmath>

#include "tfssl/error.hpp"

namespace tfssl::numcore {
namespace {

constexpr const char* kPrefix = "__optim__/";

double ScalarAt(const TensorMap& in, const std::string& key) {
  auto it = in.find(kPrefix + key);
  Require(it != in.end() && it->second.size() == 1, ErrorKind::kData,
          "checkpoint is missing optimizer field '" + key + "'");
  return it->second[0];
}

}  // namespace

OptimState OptimState::Create(const AdamWOptions& options, const StepLrOptions& schedule) {
  Require(options.lr > 0.0, ErrorKind::kConfig, "learning rate must be positive");
  Require(schedule.step_size >= 1, ErrorKind::kConfig, "StepLR step_size must be >= 1");
  OptimState s;
  s.options = options;
  s.schedule = schedule;
  s.base_lr = options.lr;
  s.lr = options.lr;
  return s;
}

void AdamWStep(OptimState& state, TensorMap& params, const TensorMap& grads) {
  Require(state.lr > 0.0, ErrorKind::kConfig, "learning rate must be positive");
  ++state.step;
  const auto& o = state.options;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    Require(g.shape() == p.shape(), ErrorKind::kShape,
            "gradient for '" + name + "' has shape " + ShapeString(g.shape()) +
                ", parameter has " + ShapeString(p.shape()));
    auto [mit, m_new] = state.m.try_emplace(name, p.shape(), 0.0);
    auto [vit, v_new] = state.v.try_emplace(name, p.shape(), 0.0);
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    Require(m.shape() == p.shape() && v.shape() == p.shape(), ErrorKind::kShape,
            "optimizer moments for '" + name + "' do not match the parameter shape");
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] -= state.lr * o.weight_decay * p[i];
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= state.lr * mhat / (std::sqrt(vhat) + o.eps);
    }
  }
}

double StepLr(OptimState& state, int epoch) {
  Require(epoch >= 0, ErrorKind::kInvalidArgument, "epoch must be non-negative");
  const int k = epoch / state.schedule.step_size;
  state.lr = state.base_lr * std::pow(state.schedule.gamma, k);
  return state.lr;
}

void ExportOptimState(const OptimState& state, TensorMap& out) {
  const std::string p = kPrefix;
  out[p + "step"] = Tensor::Scalar(static_cast<double>(state.step));
  out[p + "base_lr"] = Tensor::Scalar(state.base_lr);
  out[p + "lr"] = Tensor::Scalar(state.lr);
  out[p + "beta1"] = Tensor::Scalar(state.options.beta1);
  out[p + "beta2"] = Tensor::Scalar(state.options.beta2);
  out[p + "eps"] = Tensor::Scalar(state.options.eps);
  out[p + "weight_decay"] = Tensor::Scalar(state.options.weight_decay);
  out[p + "step_size"] = Tensor::Scalar(state.schedule.step_size);
  out[p + "gamma"] = Tensor::Scalar(state.schedule.gamma);
  for (const auto& [name, t] : state.m) out[p + "m/" + name] = t;
  for (const auto& [name, t] : state.v) out[p + "v/" + name] = t;
}

OptimState ImportOptimState(const TensorMap& in) {
  OptimState s;
  s.step = static_cast<std::int64_t>(ScalarAt(in, "step"));
  s.base_lr = ScalarAt(in, "base_lr");
  s.lr = ScalarAt(in, "lr");
  s.options.lr = s.base_lr;
  s.options.beta1 = ScalarAt(in, "beta1");
  s.options.beta2 = ScalarAt(in, "beta2");
  s.options.eps = ScalarAt(in, "eps");
  s.options.weight_decay = ScalarAt(in, "weight_decay");
  s.schedule.step_size = static_cast<int>(ScalarAt(in, "step_size"));
  s.schedule.gamma = ScalarAt(in, "gamma");
  const std::string mp = std::string(kPrefix) + "m/";
  const std::string vp = std::string(kPrefix) + "v/";
  for (const auto& [name, t] : in) {
    if (name.starts_with(mp)) s.m[name.substr(mp.size())] = t;
    if (name.starts_with(vp)) s.v[name.substr(vp.size())] = t;
  }
  return s;
}

}  // namespace tfssl::numcore
