#pragma once

#include "tfssl/frontend/stft.hpp"

namespace tfssl::frontend {

// Network input [2 * mics][frames][bins] ordered Re(m1), Im(m1), Re(m2), Im(m2),
// divided by `scale`, the mean magnitude of mic 1 over the utterance.
struct FeatureTensor {
  numcore::Tensor values;
  double scale = 1.0;
};

FeatureTensor AssembleFeatures(const ComplexSpectrogram& spec);

}  // namespace tfssl::frontend
