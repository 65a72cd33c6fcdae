#pragma once

#include <random>
#include <span>
#include <string>

#include "tfssl/frontend/stft.hpp"

namespace tfssl::sim {

using frontend::MultiWave;
using frontend::Waveform;

struct DiffuseOptions {
  double mic_spacing = 0.08;
  double c = 343.0;
  double fs = 16000.0;
  std::size_t frame = 512;
  std::size_t hop = 256;
};

// Target inter-channel coherence of a spherically isotropic field:
// sin(x) / x with x = 2 pi f d / c.
double DiffuseCoherence(double f_hz, double spacing, double c = 343.0);

// Two-channel diffuse noise of `length` samples from a mono source. Two
// non-overlapping excerpts (circularly wrapped if the source is short) give
// independent spectra N1, N2; per bin the channels are N1 and
// gamma N1 + sqrt(1 - gamma^2) N2, resynthesised by sqrt-Hann overlap-add.
MultiWave DiffuseNoise(std::span<const double> mono, std::size_t length, std::mt19937_64& rng,
                       const DiffuseOptions& opts = {});

// Synthetic noise types used when no recorded noise corpus is supplied.
enum class NoiseKind { kWhite, kBabble, kFactory };
NoiseKind ParseNoiseKind(const std::string& name);
std::string NoiseKindName(NoiseKind kind);

Waveform WhiteNoise(std::size_t length, std::mt19937_64& rng);
// Sum of several independent synthetic talkers.
Waveform BabbleNoise(std::size_t length, std::mt19937_64& rng, double fs = 16000.0);
// Mains hum harmonics, pink background and random impacts.
Waveform FactoryNoise(std::size_t length, std::mt19937_64& rng, double fs = 16000.0);
Waveform MakeNoise(NoiseKind kind, std::size_t length, std::mt19937_64& rng, double fs = 16000.0);

}  // namespace tfssl::sim
