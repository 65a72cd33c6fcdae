#pragma once

#include <filesystem>

#include "tfssl/frontend/stft.hpp"

namespace tfssl::cli {

using frontend::MultiWave;

struct WavData {
  int sample_rate = 16000;
  MultiWave channels;  // [channel][sample], full scale = 1.0
};

// 16-bit PCM, little-endian, interleaved. Samples are clipped to [-1, 1)
// and rounded to the nearest code.
void WriteWav(const std::filesystem::path& path, const MultiWave& channels, int sample_rate = 16000);

// Reads 16-bit PCM WAV files; other encodings are rejected.
WavData ReadWav(const std::filesystem::path& path);

// Round-trip a waveform through 16-bit quantization without touching disk.
MultiWave Quantize16(const MultiWave& channels);

}  // namespace tfssl::cli
