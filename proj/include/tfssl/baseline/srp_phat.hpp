#pragma once

#include <vector>

#include "tfssl/frontend/stft.hpp"

namespace tfssl::baseline {

using frontend::Complex;
using frontend::ComplexSpectrogram;

// Candidate azimuths 0..180 deg in 1 deg steps and their per-bin steering
// phasors exp(-j 2 pi f tau(theta)).
struct SteeringGrid {
  std::vector<double> azimuth_deg;
  std::vector<double> tau_s;
  std::vector<Complex> phasors;  // [azimuth][bin]
  std::size_t bins = 0;

  static SteeringGrid Build(const frontend::StftOptions& opts, double spacing_m = 0.08,
                            double speed_of_sound = 343.0);
  const Complex& phasor(std::size_t a, std::size_t j) const { return phasors[a * bins + j]; }
};

inline constexpr int kMaxGccLag = 8;
inline constexpr double kPhatFloor = 1e-12;

// PHAT-weighted cross-spectrum X1 conj(X2) / max(|X1 conj(X2)|, eps) of one frame.
std::vector<Complex> PhatCrossSpectrum(const ComplexSpectrogram& spec, std::size_t frame);

// GCC-PHAT at integer lags -8..8 (index lag + 8), normalized by the bin count.
// A positive lag means mic 2 lags mic 1.
std::vector<double> GccPhat(const ComplexSpectrogram& spec, std::size_t frame);

// value[t][a] = mean over bins of Re{ phat(f) * steer_a(f) }, in [-1, 1].
// Peaks where tau(theta) matches the delay of mic 2 relative to mic 1.
numcore::Tensor SrpPhat(const ComplexSpectrogram& spec, const SteeringGrid& grid);

// Centered running median; the window shrinks at the edges.
std::vector<double> MedianFilter(const std::vector<double>& x, std::size_t width);

struct SrpTrack {
  std::vector<double> azimuth_deg;  // smoothed
  std::vector<double> peak_value;   // spectrum value at the raw per-frame argmax
};

// Per-frame argmax of SrpPhat followed by the median smoother
// (median_width <= 1 disables smoothing).
SrpTrack LocateSrpPhat(const ComplexSpectrogram& spec, const SteeringGrid& grid,
                       std::size_t median_width = 5);

}  // namespace tfssl::baseline
