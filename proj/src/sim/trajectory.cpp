#include "tfssl/sim/trajectory.hpp"

#include <algorithm>
#include <numbers>

#include "tfssl/error.hpp"

namespace tfssl::sim {

bool Trajectory::IsStatic() const {
  return std::all_of(waypoints.begin(), waypoints.end(),
                     [&](const Vec3& p) { return p == waypoints.front(); });
}

const Vec3& Trajectory::At(double t) const {
  Require(!waypoints.empty(), ErrorKind::kInvalidArgument, "empty trajectory");
  const double k = std::floor(t / interval);
  const auto idx = static_cast<std::size_t>(std::clamp(k, 0.0, double(waypoints.size() - 1)));
  return waypoints[idx];
}

std::size_t WaypointCount(double duration, double interval) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(duration / interval - 1e-9)));
}

Trajectory StaticTrajectory(const Vec3& p, double duration) {
  Trajectory t;
  t.waypoints.assign(WaypointCount(duration), p);
  return t;
}

Trajectory SampleTrajectory(std::mt19937_64& rng, const RoomSpec& room, double duration,
                            const TrajectoryOptions& opts) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> osc(opts.min_oscillations, opts.max_oscillations);
  const double m = opts.wall_margin;
  const double z = room.array_center().z;
  const Vec3 center = room.array_center();
  const std::size_t n = WaypointCount(duration);
  auto random_point = [&] {
    return Vec3{m + (room.dims.x - 2 * m) * unit(rng), m + (room.dims.y - 2 * m) * unit(rng), z};
  };
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Vec3 a = random_point(), b = random_point();
    const double ax = opts.max_amplitude * unit(rng), ay = opts.max_amplitude * unit(rng);
    const int nx = osc(rng), ny = osc(rng);
    const double px = 2 * std::numbers::pi * unit(rng), py = 2 * std::numbers::pi * unit(rng);
    Trajectory t;
    t.waypoints.reserve(n);
    bool ok = true;
    for (std::size_t k = 0; k < n && ok; ++k) {
      const double u = n > 1 ? double(k) / double(n - 1) : 0.0;
      Vec3 p = a + (b - a) * u;
      p.x += ax * std::sin(2 * std::numbers::pi * nx * u + px);
      p.y += ay * std::sin(2 * std::numbers::pi * ny * u + py);
      const Vec3 d{p.x - center.x, p.y - center.y, 0.0};
      ok = room.Contains(p, m) && d.norm() >= opts.min_array_distance;
      if (ok && k > 0)
        ok = std::abs(AzimuthOf(room, p) - AzimuthOf(room, t.waypoints.back())) <
             opts.max_azimuth_step;
      t.waypoints.push_back(p);
    }
    if (ok) return t;
  }
  Fail(ErrorKind::kConfig, "cannot fit a source trajectory in the room");
}

std::vector<double> FrameAzimuths(const RoomSpec& room, const Trajectory& traj,
                                  std::size_t n_frames, std::size_t frame_len, std::size_t hop) {
  std::vector<double> az(n_frames);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double center = (double(t * hop) + 0.5 * double(frame_len)) / room.fs;
    az[t] = AzimuthOf(room, traj.At(center));
  }
  return az;
}

}  // namespace tfssl::sim
