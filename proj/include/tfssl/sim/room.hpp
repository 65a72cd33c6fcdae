#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>

namespace tfssl::sim {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  bool operator==(const Vec3&) const = default;
};

inline constexpr double kSpeedOfSound = 343.0;
inline constexpr double kSampleRate = 16000.0;

// kImageDecay picks the coefficient whose image-source energy decay has the
// requested Schroeder T60; the two formulas assume a diffuse field, which a
// shoebox image lattice decays more slowly than.
enum class AbsorptionModel { kImageDecay, kEyring, kSabine };

// "image", "eyring", "sabine".
AbsorptionModel ParseAbsorption(const std::string& name);
std::string AbsorptionName(AbsorptionModel model);

struct RoomSpec {
  Vec3 dims{6.0, 5.0, 3.0};
  double rt60 = 0.4;   // seconds; 0 with beta = 0 for anechoic rendering
  double beta = 0.0;   // uniform wall reflection coefficient
  std::array<Vec3, 2> mics{};
  double c = kSpeedOfSound;
  double fs = kSampleRate;

  Vec3 array_center() const { return (mics[0] + mics[1]) * 0.5; }
  double mic_spacing() const { return (mics[0] - mics[1]).norm(); }
  bool Contains(const Vec3& p, double margin) const;
};

struct RoomRanges {
  Vec3 min_dims{4.0, 2.0, 2.0};
  Vec3 max_dims{10.0, 8.0, 5.0};
  double min_rt60 = 0.2;
  double max_rt60 = 0.6;
  double mic_spacing = 0.08;
  double wall_margin = 0.1;
  AbsorptionModel absorption = AbsorptionModel::kImageDecay;
};

// Reflection coefficient that makes a shoebox room of these dimensions decay
// by 60 dB in rt60 seconds under the chosen model.
double ReflectionFromRt60(const Vec3& dims, double rt60, AbsorptionModel model);

// Two microphones `spacing` apart centered at `center`, horizontal axis at
// angle `orientation` (radians) from the x axis. Mic 1 sits at +axis/2.
std::array<Vec3, 2> MicPair(const Vec3& center, double orientation, double spacing);

// Uniform dims, rt60, array position and orientation; resamples the array
// until both mics clear the wall margin.
RoomSpec SampleRoom(std::mt19937_64& rng, const RoomRanges& ranges);

// Unit vector from mic 2 to mic 1. Azimuth 0 points along it.
Vec3 ArrayAxis(const RoomSpec& room);

// Azimuth of a point relative to the array axis, degrees in [0, 180].
double AzimuthOf(const RoomSpec& room, const Vec3& p);

// A point at `distance` from the array center in the array's horizontal
// plane at the given azimuth. `side` picks one of the two mirror solutions.
Vec3 PointAtAzimuth(const RoomSpec& room, double azimuth_deg, double distance, int side);

}  // namespace tfssl::sim
