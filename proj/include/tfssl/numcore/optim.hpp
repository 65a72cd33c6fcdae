#pragma once

#include <cstdint>

#include "tfssl/numcore/tensor.hpp"

namespace tfssl::numcore {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct StepLrOptions {
  int step_size = 30;  // epochs
  double gamma = 0.5;
};

// AdamW moments plus the learning-rate schedule. `lr` is the rate used by
// the next step; StepLr() recomputes it from `base_lr`.
struct OptimState {
  AdamWOptions options;
  StepLrOptions schedule;
  double base_lr = 1e-3;
  double lr = 1e-3;
  std::int64_t step = 0;
  TensorMap m;
  TensorMap v;

  static OptimState Create(const AdamWOptions& options, const StepLrOptions& schedule);
};

// One AdamW update with decoupled weight decay:
//   p <- p - lr * wd * p, then p <- p - lr * m_hat / (sqrt(v_hat) + eps).
// Parameters without a gradient entry are left alone.
void AdamWStep(OptimState& state, TensorMap& params, const TensorMap& grads);

// lr = base_lr * gamma^floor(epoch / step_size); also stored in state.lr.
double StepLr(OptimState& state, int epoch);

// Optimizer state as named tensors under the reserved "__optim__/" prefix,
// for the checkpoint container.
void ExportOptimState(const OptimState& state, TensorMap& out);
OptimState ImportOptimState(const TensorMap& in);

}  // namespace tfssl::numcore
