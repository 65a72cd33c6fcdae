#include "tfssl/frontend/features.hpp"

#include "tfssl/error.hpp"

namespace tfssl::frontend {

FeatureTensor AssembleFeatures(const ComplexSpectrogram& spec) {
  Require(spec.mics() == 2, ErrorKind::kInvalidArgument,
          "feature assembly expects 2 microphones, got " + std::to_string(spec.mics()));
  const std::size_t T = spec.frames(), F = spec.bins();
  double mean_mag = 0.0;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < F; ++j) mean_mag += std::abs(spec.at(0, t, j));
  mean_mag /= static_cast<double>(T * F);
  // An all-zero reference channel leaves the features unscaled.
  FeatureTensor out{numcore::Tensor({2 * spec.mics(), T, F}), mean_mag > 0.0 ? mean_mag : 1.0};
  const double inv = 1.0 / out.scale;
  for (std::size_t m = 0; m < spec.mics(); ++m)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < F; ++j) {
        const Complex v = spec.at(m, t, j);
        out.values[((2 * m) * T + t) * F + j] = v.real() * inv;
        out.values[((2 * m + 1) * T + t) * F + j] = v.imag() * inv;
      }
  return out;
}

}  // namespace tfssl::frontend
