#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tfssl::net {

inline constexpr std::size_t kNumDoa = 181;

struct NetConfig {
  std::size_t n_blocks = 5;
  std::vector<std::size_t> expand_per_block = {2, 2, 4, 4, 8};
  // Picked by sweeping ParamCount() so the five-block default lands at ~1.8M.
  std::size_t model_width = 32;
  std::size_t pool_factor = 4;
  std::size_t n_doa = kNumDoa;
  std::size_t in_channels = 4;  // 2 x microphones (real, imag)
  std::size_t n_bins = 253;
  std::size_t d_state = 16;
  std::size_t conv_width = 4;
  std::size_t dt_rank = 0;  // 0: ceil(model_width / 16)
  // Encoder: conv -> dense layers (dilated along frequency) -> 1x1 conv.
  std::size_t encoder_kernel = 3;
  std::size_t dense_growth = 8;
  std::vector<std::size_t> dense_dilations = {1, 2, 4, 8};
  // Ablation switches; both on for the real network.
  bool use_t_mamba = true;
  bool use_f_mamba = true;

  void Validate() const;

  // "key = value" lines, one per field, in a fixed order.
  std::string ToText() const;
  static NetConfig FromText(const std::string& text);
};

// Desk-scale configuration used for the overfit and generalization runs.
NetConfig DeskConfig();

}  // namespace tfssl::net
