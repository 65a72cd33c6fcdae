#pragma once

#include <vector>

#include "tfssl/frontend/stft.hpp"

namespace tfssl::sim {

using frontend::MultiWave;
using frontend::Waveform;

inline constexpr double kVadRangeDb = 40.0;

// Frame active iff its RMS is within 40 dB of the loudest frame, on the STFT
// frame grid (frame_length window, hop). An all-zero signal has no active
// frames.
std::vector<bool> VadMask(std::span<const double> signal, const frontend::StftOptions& opts = {});

// Samples covered by at least one active frame.
std::vector<bool> ActiveSamples(const std::vector<bool>& vad, std::size_t n_samples,
                                const frontend::StftOptions& opts = {});

// Mean square of channel 0 over the marked samples.
double ActivePower(std::span<const double> x, const std::vector<bool>& active);

struct Mixture {
  MultiWave channels;            // clean + gain * noise
  std::vector<double> azimuth;   // degrees per STFT frame
  std::vector<bool> vad;
  double snr_db = 0.0;
  double noise_gain = 1.0;
};

// Scales the noise so that the channel-1 powers over VAD-active samples have
// the requested ratio, and adds it to the clean image.
Mixture MixSnr(const MultiWave& clean, const MultiWave& noise, double snr_db,
               std::vector<bool> vad, std::vector<double> azimuth,
               const frontend::StftOptions& opts = {});

}  // namespace tfssl::sim
