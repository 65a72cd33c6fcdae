#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "tfssl/numcore/tensor.hpp"

namespace tfssl::frontend {

using Complex = std::complex<double>;
using Waveform = std::vector<double>;
using MultiWave = std::vector<Waveform>;  // [mic][sample]

struct StftOptions {
  double sample_rate = 16000.0;
  std::size_t frame_length = 512;  // 32 ms
  std::size_t hop = 160;           // 10 ms
  std::size_t n_fft = 512;
  // First bin whose center is >= 100 Hz; 31.25 Hz spacing gives bin 4 (125 Hz).
  std::size_t first_bin = 4;
  std::size_t last_bin = 256;  // inclusive, 8000 Hz

  std::size_t num_bins() const { return last_bin - first_bin + 1; }
  double bin_hz(std::size_t k) const {
    return static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
  }
};

std::size_t NumFrames(std::size_t num_samples, const StftOptions& opts = {});

// Periodic Hann window of the given length.
std::vector<double> HannWindow(std::size_t length);

// Complex STFT with only the retained band, indexed [mic][frame][bin];
// bin j corresponds to FFT bin first_bin + j.
class ComplexSpectrogram {
 public:
  ComplexSpectrogram() = default;
  ComplexSpectrogram(std::size_t mics, std::size_t frames, std::size_t bins, StftOptions opts)
      : mics_(mics), frames_(frames), bins_(bins), opts_(opts), data_(mics * frames * bins) {}

  std::size_t mics() const { return mics_; }
  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  const StftOptions& options() const { return opts_; }
  double bin_hz(std::size_t j) const { return opts_.bin_hz(opts_.first_bin + j); }

  Complex& at(std::size_t m, std::size_t t, std::size_t j) {
    return data_[(m * frames_ + t) * bins_ + j];
  }
  const Complex& at(std::size_t m, std::size_t t, std::size_t j) const {
    return data_[(m * frames_ + t) * bins_ + j];
  }
  std::span<const Complex> frame(std::size_t m, std::size_t t) const {
    return {data_.data() + (m * frames_ + t) * bins_, bins_};
  }

 private:
  std::size_t mics_ = 0, frames_ = 0, bins_ = 0;
  StftOptions opts_;
  std::vector<Complex> data_;
};

// All n_fft/2 + 1 bins of every frame of one channel: [frame][bin].
std::vector<std::vector<Complex>> StftFull(std::span<const double> signal,
                                           const StftOptions& opts = {});

// Hann-windowed STFT of every channel, keeping bins first_bin..last_bin.
// Throws when the signal is shorter than one frame or channel lengths differ.
ComplexSpectrogram Stft(const MultiWave& wave, const StftOptions& opts = {});

// tau = spacing * cos(azimuth) / c, in seconds. Positive tau: mic 2 lags mic 1.
double AnalyticTdoa(double azimuth_deg, double spacing_m, double speed_of_sound = 343.0);

// Real-to-complex FFT helpers shared by the simulator and the baseline.
std::vector<Complex> RealFft(std::span<const double> x, std::size_t n_fft);
std::vector<double> InverseRealFft(std::span<const Complex> spectrum, std::size_t n_fft);

}  // namespace tfssl::frontend
