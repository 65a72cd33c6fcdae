#pragma once

#include <span>
#include <vector>

#include "tfssl/net/config.hpp"
#include "tfssl/numcore/tensor.hpp"

namespace tfssl::net {

using numcore::Tensor;

inline constexpr double kTargetSigmaDeg = 8.0;

// 181-point map per output frame; index i is azimuth i degrees.
struct SpatialSpectrum {
  Tensor values;  // [frames][181]
  double frame_rate = 25.0;

  std::size_t frames() const { return values.rank() ? values.dim(0) : 0; }
};

// Gaussian target exp(-(theta - src)^2 / sigma^2) per frame; inactive frames
// are all zero. Azimuths must lie in [0, 180].
Tensor EncodeTarget(std::span<const double> azimuth_deg, const std::vector<bool>& active,
                    double sigma_deg = kTargetSigmaDeg);

// Argmax per frame; ties go to the lower index.
std::vector<double> DecodeDoa(const Tensor& spectrum);

// Mean of squared differences over unmasked frames x 181 points.
double MseLoss(const Tensor& pred, const Tensor& target, const std::vector<bool>& mask);

// Index of the STFT frame representing output frame k: the center of its
// pooling window.
inline std::size_t CenterFrame(std::size_t k, std::size_t pool) { return k * pool + pool / 2; }

// Samples a 100 Hz per-frame sequence at the output frame rate.
template <typename T>
std::vector<T> AlignToOutput(const std::vector<T>& per_frame, std::size_t pool) {
  std::vector<T> out(per_frame.size() / pool);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = per_frame[CenterFrame(k, pool)];
  return out;
}

}  // namespace tfssl::net
