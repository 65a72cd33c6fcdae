#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tfssl/sim/mix.hpp"
#include "tfssl/sim/noise.hpp"
#include "tfssl/sim/room.hpp"
#include "tfssl/sim/trajectory.hpp"

namespace tfssl::sim {

struct SimConfig {
  RoomRanges room;
  TrajectoryOptions trajectory;
  double duration = 4.0;  // seconds per utterance
  double min_snr_db = -10.0;
  double max_snr_db = 10.0;
  bool add_noise = true;
  bool anechoic = false;
  // Probability that an utterance uses a static source on the azimuth grid
  // instead of a moving trajectory.
  double static_fraction = 0.0;
  double static_grid_deg = 5.0;
  double static_min_distance = 1.0;
  double static_max_distance = 2.5;
  std::vector<NoiseKind> noise_kinds{NoiseKind::kWhite, NoiseKind::kBabble, NoiseKind::kFactory};
  double peak_level = 0.9;  // mixture peak after normalisation

  void Validate() const;
};

// Optional recorded material (mono, 16 kHz). Synthetic speech and noise are
// used for whichever list is empty.
struct Corpus {
  std::vector<Waveform> sources;
  std::vector<Waveform> noises;
  std::vector<std::string> noise_names;
};

// Independent generator for utterance `index` of a run seeded with `seed`.
std::mt19937_64 UtteranceRng(std::uint64_t seed, std::uint64_t index);

struct Utterance {
  RoomSpec room;
  Trajectory trajectory;
  bool is_static = false;
  std::string noise_name;  // synthetic kind or corpus name, empty without noise
  Mixture mixture;
  MultiWave clean;  // reverberant source image, after peak normalisation
  MultiWave noise;  // scaled noise, after peak normalisation
};

Utterance RenderUtterance(const SimConfig& cfg, std::uint64_t seed, std::uint64_t index,
                          const Corpus& corpus = {});

// Anechoic or reverberant render of one static source at an exact azimuth,
// without noise. Used by fixtures and tests.
Utterance RenderStatic(const RoomSpec& room, double azimuth_deg, double distance,
                       const Waveform& source);

// First source position at this azimuth that fits in the room, trying
// distances from the given range and both sides of the array.
std::optional<Vec3> PlaceStaticSource(const RoomSpec& room, double azimuth_deg,
                                      std::mt19937_64& rng, const SimConfig& cfg);

}  // namespace tfssl::sim
