#include "tfssl/sim/room.hpp"

#include <algorithm>
#include <cmath>
#include <vector>
#include <numbers>

#include "tfssl/error.hpp"

namespace tfssl::sim {

bool RoomSpec::Contains(const Vec3& p, double margin) const {
  return p.x >= margin && p.x <= dims.x - margin && p.y >= margin && p.y <= dims.y - margin &&
         p.z >= margin && p.z <= dims.z - margin;
}

namespace {

// Unit directions over one octant (the decay only depends on |u|).
const std::vector<Vec3>& OctantDirections() {
  static const std::vector<Vec3> dirs = [] {
    constexpr int n = 128;
    std::vector<Vec3> d;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - (i + 0.5) / n;  // z in (0, 1): upper hemisphere
      const double r = std::sqrt(1.0 - z * z);
      const double a = golden * i;
      d.push_back({std::abs(r * std::cos(a)), std::abs(r * std::sin(a)), z});
    }
    return d;
  }();
  return dirs;
}

// Schroeder T60 (-5 to -25 dB fit) of the image-source energy decay of a
// shoebox room, truncated at `window` seconds. Along direction u an image at
// distance r has about r * sum(|u_i| / L_i) reflections, and image density
// times 1/r^2 spreading is constant in time, so the energy envelope is the
// direction average of exp(-lambda_u t).
double ImageDecayT60(const Vec3& dims, double beta, double window, double c) {
  const auto& dirs = OctantDirections();
  const double log_b2 = std::log(beta * beta);
  std::vector<double> lambda(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i)
    lambda[i] = -c * log_b2 * (dirs[i].x / dims.x + dirs[i].y / dims.y + dirs[i].z / dims.z);
  constexpr int kSteps = 256;
  std::vector<double> edc(kSteps, 0.0);
  for (double l : lambda) {
    // exp(-l t_k) by repeated multiplication on the uniform grid.
    const double step = std::exp(-l * window / kSteps), tail = std::exp(-l * window);
    double e = 1.0;
    for (int k = 0; k < kSteps; ++k, e *= step) edc[k] += (e - tail) / l;
  }
  double st = 0.0, sd = 0.0, stt = 0.0, std_ = 0.0;
  int n = 0;
  for (int k = 0; k < kSteps; ++k) {
    const double db = 10.0 * std::log10(edc[k] / edc[0]);
    if (db > -5.0 || db < -25.0) continue;
    const double t = window * k / kSteps;
    st += t;
    sd += db;
    stt += t * t;
    std_ += t * db;
    ++n;
  }
  Require(n >= 2, ErrorKind::kNumeric, "image decay model: too few points in the fit range");
  const double slope = (n * std_ - st * sd) / (n * stt - st * st);
  return -60.0 / slope;
}

}  // namespace

AbsorptionModel ParseAbsorption(const std::string& name) {
  if (name == "image") return AbsorptionModel::kImageDecay;
  if (name == "eyring") return AbsorptionModel::kEyring;
  if (name == "sabine") return AbsorptionModel::kSabine;
  Fail(ErrorKind::kConfig, "unknown absorption model '" + name + "' (image, eyring, sabine)");
}

std::string AbsorptionName(AbsorptionModel model) {
  switch (model) {
    case AbsorptionModel::kImageDecay: return "image";
    case AbsorptionModel::kEyring: return "eyring";
    case AbsorptionModel::kSabine: return "sabine";
  }
  return "image";
}

double ReflectionFromRt60(const Vec3& dims, double rt60, AbsorptionModel model) {
  Require(rt60 > 0.0, ErrorKind::kInvalidArgument, "rt60 must be positive");
  const double V = dims.x * dims.y * dims.z;
  const double S = 2.0 * (dims.x * dims.y + dims.x * dims.z + dims.y * dims.z);
  const double k = 0.161 * V / (S * rt60);
  double alpha = model == AbsorptionModel::kSabine ? k : 1.0 - std::exp(-k);
  alpha = std::clamp(alpha, 0.0, 1.0);
  double beta = std::sqrt(1.0 - alpha);
  if (model != AbsorptionModel::kImageDecay || beta <= 0.0) return beta;

  // Start from Eyring. The model T60 is nearly inversely proportional to
  // -log(beta), which makes this fixed-point update converge in a few steps.
  const double window = 1.25 * rt60;
  double log_beta = std::log(beta);
  for (int it = 0; it < 50; ++it) {
    const double t60 = ImageDecayT60(dims, std::exp(log_beta), window, kSpeedOfSound);
    log_beta *= t60 / rt60;
    if (std::abs(t60 / rt60 - 1.0) < 1e-5) break;
  }
  return std::exp(log_beta);
}

std::array<Vec3, 2> MicPair(const Vec3& center, double orientation, double spacing) {
  const Vec3 axis{std::cos(orientation), std::sin(orientation), 0.0};
  return {center + axis * (0.5 * spacing), center - axis * (0.5 * spacing)};
}

RoomSpec SampleRoom(std::mt19937_64& rng, const RoomRanges& r) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  RoomSpec room;
  room.dims = {between(r.min_dims.x, r.max_dims.x), between(r.min_dims.y, r.max_dims.y),
               between(r.min_dims.z, r.max_dims.z)};
  room.rt60 = between(r.min_rt60, r.max_rt60);
  room.beta = ReflectionFromRt60(room.dims, room.rt60, r.absorption);
  for (int attempt = 0;; ++attempt) {
    Require(attempt < 10000, ErrorKind::kConfig, "cannot place the microphone pair in the room");
    const Vec3 center{between(0.0, room.dims.x), between(0.0, room.dims.y),
                      between(r.wall_margin, room.dims.z - r.wall_margin)};
    room.mics = MicPair(center, between(0.0, 2.0 * std::numbers::pi), r.mic_spacing);
    if (room.Contains(room.mics[0], r.wall_margin) && room.Contains(room.mics[1], r.wall_margin))
      break;
  }
  return room;
}

Vec3 ArrayAxis(const RoomSpec& room) {
  const Vec3 d = room.mics[0] - room.mics[1];
  return d * (1.0 / d.norm());
}

double AzimuthOf(const RoomSpec& room, const Vec3& p) {
  const Vec3 v = p - room.array_center();
  const double n = v.norm();
  Require(n > 0.0, ErrorKind::kInvalidArgument, "source coincides with the array center");
  const double cosang = std::clamp(ArrayAxis(room).dot(v) / n, -1.0, 1.0);
  return std::acos(cosang) * 180.0 / std::numbers::pi;
}

Vec3 PointAtAzimuth(const RoomSpec& room, double azimuth_deg, double distance, int side) {
  const Vec3 axis = ArrayAxis(room);
  const Vec3 perp{-axis.y, axis.x, 0.0};
  const double a = azimuth_deg * std::numbers::pi / 180.0;
  const double s = side >= 0 ? 1.0 : -1.0;
  return room.array_center() + axis * (distance * std::cos(a)) + perp * (s * distance * std::sin(a));
}

}  // namespace tfssl::sim
