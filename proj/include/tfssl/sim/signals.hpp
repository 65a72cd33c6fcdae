#pragma once

#include <random>

#include "tfssl/frontend/stft.hpp"

namespace tfssl::sim {

using frontend::Waveform;

// Parameters of the synthetic speech-like source: voiced syllables with
// gliding pitch and formant-shaped harmonics, separated by short pauses,
// some followed by a noisy fricative.
struct SpeechOptions {
  double min_lead = 0.15, max_lead = 0.40;        // leading silence, s
  double min_syllable = 0.12, max_syllable = 0.35;
  double min_gap = 0.04, max_gap = 0.25;
  double min_f0 = 90.0, max_f0 = 240.0;
  double fricative_prob = 0.3;
  double rms = 0.1;  // RMS over the voiced part
};

Waveform SynthSpeech(std::size_t length, std::mt19937_64& rng, double fs = 16000.0,
                     const SpeechOptions& opts = {});

// cos(2 pi f n / fs) scaled by amplitude.
Waveform Tone(std::size_t length, double freq_hz, double amplitude = 1.0, double fs = 16000.0);

}  // namespace tfssl::sim
