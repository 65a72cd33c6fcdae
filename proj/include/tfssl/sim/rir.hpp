#pragma once

#include <vector>

#include "tfssl/sim/room.hpp"

namespace tfssl::sim {

inline constexpr int kSincTaps = 81;
inline constexpr double kHighPassHz = 100.0;

// Samples in an RIR for this room: ceil(1.25 * rt60 * fs), extended if
// needed so the direct path of `distance` metres and its kernel fit.
std::size_t RirLength(const RoomSpec& room, double distance);

// Image-source impulse response from src to mic in a shoebox room with a
// uniform reflection coefficient. Every image within the RIR length adds
// beta^reflections / (4 pi dist) at delay dist / c * fs through an 81-tap
// Hann-windowed sinc. The direct path uses the exact kernel; reflections use
// a kernel table at 1/1024-sample resolution and pass through a 100 Hz
// high-pass.
std::vector<double> IsmRir(const RoomSpec& room, const Vec3& src, const Vec3& mic);

// Same, for a caller-fixed length.
std::vector<double> IsmRir(const RoomSpec& room, const Vec3& src, const Vec3& mic,
                           std::size_t length);

}  // namespace tfssl::sim
