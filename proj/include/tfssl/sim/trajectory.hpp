#pragma once

#include <random>
#include <vector>

#include "tfssl/sim/room.hpp"

namespace tfssl::sim {

inline constexpr double kWaypointInterval = 0.1;  // seconds between waypoints

struct Trajectory {
  std::vector<Vec3> waypoints;  // one per 100 ms segment
  double interval = kWaypointInterval;

  bool IsStatic() const;
  // Waypoint whose segment contains time t (clamped to the ends).
  const Vec3& At(double t) const;
};

struct TrajectoryOptions {
  double max_amplitude = 0.5;      // metres of sinusoidal deviation
  int min_oscillations = 1;
  int max_oscillations = 3;
  double min_array_distance = 1.0;
  // Largest azimuth change between consecutive waypoints, degrees (exclusive).
  double max_azimuth_step = 5.0;
  double wall_margin = 0.1;
};

// Number of waypoints that cover `duration` seconds.
std::size_t WaypointCount(double duration, double interval = kWaypointInterval);

Trajectory StaticTrajectory(const Vec3& p, double duration);

// Straight start -> end path with independent sinusoidal wobble in x and y,
// at the array height. Resampled until every waypoint stays inside the wall
// margin, at least min_array_distance from the array center, and within
// max_azimuth_step of its predecessor's azimuth.
Trajectory SampleTrajectory(std::mt19937_64& rng, const RoomSpec& room, double duration,
                            const TrajectoryOptions& opts = {});

// Azimuth per STFT frame, taken from the waypoint active at the frame center.
std::vector<double> FrameAzimuths(const RoomSpec& room, const Trajectory& traj,
                                  std::size_t n_frames, std::size_t frame_len, std::size_t hop);

}  // namespace tfssl::sim
