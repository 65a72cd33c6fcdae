#pragma once

#include <span>
#include <vector>

#include "tfssl/frontend/stft.hpp"
#include "tfssl/sim/room.hpp"
#include "tfssl/sim/trajectory.hpp"

namespace tfssl::sim {

using frontend::MultiWave;
using frontend::Waveform;

inline constexpr double kCrossfadeSeconds = 0.01;

// Full linear convolution (length a + b - 1) through FFTW.
Waveform FftConvolve(std::span<const double> a, std::span<const double> b);

// Weight of segment k at sample n. Segments are `seg` samples long; each
// boundary has a linear ramp of `fade` samples centred on it. The weights
// of all segments sum to one at every sample.
double SegmentWeight(std::size_t k, std::size_t n_segments, long n, long seg, long fade);

// Piecewise-static rendering of a moving source: the signal is cut into
// waypoint-interval segments with crossfaded edges, each segment convolved
// with the RIR pair of its waypoint, and the results overlap-added. Output
// has the input's length on both channels.
MultiWave MovingConvolve(std::span<const double> signal, const Trajectory& traj,
                         const RoomSpec& room);

}  // namespace tfssl::sim
