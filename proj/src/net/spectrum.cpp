#include "tfssl/net/spectrum.hpp"

#include <cmath>

#include "tfssl/error.hpp"

namespace tfssl::net {

Tensor EncodeTarget(std::span<const double> azimuth_deg, const std::vector<bool>& active,
                    double sigma_deg) {
  Require(active.size() == azimuth_deg.size(), ErrorKind::kShape,
          "target: azimuth and activity lengths differ");
  Require(sigma_deg > 0.0, ErrorKind::kConfig, "target sigma must be positive");
  const std::size_t T = azimuth_deg.size();
  Tensor out({T, kNumDoa});
  const double inv = 1.0 / (sigma_deg * sigma_deg);
  for (std::size_t t = 0; t < T; ++t) {
    const double src = azimuth_deg[t];
    Require(src >= 0.0 && src <= 180.0, ErrorKind::kInvalidArgument,
            "target azimuth " + std::to_string(src) + " outside [0, 180]");
    if (!active[t]) continue;
    for (std::size_t i = 0; i < kNumDoa; ++i) {
      const double d = static_cast<double>(i) - src;
      out[t * kNumDoa + i] = std::exp(-d * d * inv);
    }
  }
  return out;
}

std::vector<double> DecodeDoa(const Tensor& spectrum) {
  Require(spectrum.rank() == 2 && spectrum.dim(1) == kNumDoa, ErrorKind::kShape,
          "spatial spectrum must be [frames][181]");
  std::vector<double> out(spectrum.dim(0));
  for (std::size_t t = 0; t < out.size(); ++t) {
    const double* row = spectrum.data() + t * kNumDoa;
    std::size_t best = 0;
    for (std::size_t i = 1; i < kNumDoa; ++i)
      if (row[i] > row[best]) best = i;
    out[t] = static_cast<double>(best);
  }
  return out;
}

double MseLoss(const Tensor& pred, const Tensor& target, const std::vector<bool>& mask) {
  Require(pred.rank() == 2 && pred.shape() == target.shape() && mask.size() == pred.dim(0),
          ErrorKind::kShape, "mse: frame counts differ");
  double acc = 0.0;
  std::size_t kept = 0;
  const std::size_t M = pred.dim(1);
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (!mask[t]) continue;
    ++kept;
    for (std::size_t i = 0; i < M; ++i) {
      const double d = pred[t * M + i] - target[t * M + i];
      acc += d * d;
    }
  }
  Require(kept > 0, ErrorKind::kData, "mse: every frame is masked out");
  return acc / static_cast<double>(kept * M);
}

}  // namespace tfssl::net
