#include "tfssl/sim/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "tfssl/error.hpp"
#include "tfssl/sim/render.hpp"
#include "tfssl/sim/signals.hpp"

namespace tfssl::sim {
namespace {

constexpr int kMaxRoomAttempts = 100;

Waveform Excerpt(const Waveform& src, std::size_t length, std::mt19937_64& rng) {
  Waveform out(length, 0.0);
  if (src.size() <= length) {
    std::copy(src.begin(), src.end(), out.begin());
    return out;
  }
  const auto off = std::uniform_int_distribution<std::size_t>(0, src.size() - length)(rng);
  std::copy_n(src.begin() + std::ptrdiff_t(off), length, out.begin());
  return out;
}

void NormalizePeak(Utterance& u, double level) {
  double peak = 0.0;
  for (const auto& ch : u.mixture.channels)
    for (double v : ch) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) return;
  const double g = level / peak;
  for (auto* wave : {&u.mixture.channels, &u.clean, &u.noise})
    for (auto& ch : *wave)
      for (double& v : ch) v *= g;
}

}  // namespace

void SimConfig::Validate() const {
  auto ordered = [](double lo, double hi, const char* what) {
    Require(lo <= hi, ErrorKind::kConfig, std::string(what) + ": minimum exceeds maximum");
  };
  ordered(room.min_dims.x, room.max_dims.x, "room length");
  ordered(room.min_dims.y, room.max_dims.y, "room width");
  ordered(room.min_dims.z, room.max_dims.z, "room height");
  ordered(room.min_rt60, room.max_rt60, "rt60");
  ordered(min_snr_db, max_snr_db, "snr");
  ordered(static_min_distance, static_max_distance, "static distance");
  Require(room.min_rt60 > 0.0, ErrorKind::kConfig, "rt60 must be positive");
  Require(min_snr_db >= -10.0 && max_snr_db <= 10.0, ErrorKind::kConfig,
          "snr range must lie within [-10, 10] dB");
  Require(duration * kSampleRate >= 512.0, ErrorKind::kConfig, "duration shorter than one frame");
  Require(static_fraction >= 0.0 && static_fraction <= 1.0, ErrorKind::kConfig,
          "static_fraction must lie in [0, 1]");
  Require(static_grid_deg > 0.0 && static_grid_deg <= 180.0, ErrorKind::kConfig,
          "static grid step must lie in (0, 180]");
  Require(trajectory.max_azimuth_step > 0.0, ErrorKind::kConfig,
          "max_azimuth_step must be positive");
  Require(room.mic_spacing > 0.0, ErrorKind::kConfig, "mic spacing must be positive");
  Require(!add_noise || !noise_kinds.empty(), ErrorKind::kConfig, "no noise types configured");
  Require(peak_level > 0.0 && peak_level < 1.0, ErrorKind::kConfig, "peak level must lie in (0, 1)");
}

std::mt19937_64 UtteranceRng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(index),
                    std::uint32_t(index >> 32)};
  return std::mt19937_64(seq);
}

std::optional<Vec3> PlaceStaticSource(const RoomSpec& room, double azimuth_deg,
                                      std::mt19937_64& rng, const SimConfig& cfg) {
  std::uniform_real_distribution<double> dist(cfg.static_min_distance, cfg.static_max_distance);
  const double margin = cfg.room.wall_margin;
  for (int attempt = 0; attempt < 50; ++attempt) {
    const double d = dist(rng);
    const int side = std::uniform_int_distribution<int>(0, 1)(rng) ? 1 : -1;
    const Vec3 p = PointAtAzimuth(room, azimuth_deg, d, side);
    if (room.Contains(p, margin)) return p;
  }
  for (double d = cfg.static_max_distance; d >= cfg.static_min_distance; d -= 0.05)
    for (int side : {1, -1}) {
      const Vec3 p = PointAtAzimuth(room, azimuth_deg, d, side);
      if (room.Contains(p, margin)) return p;
    }
  return std::nullopt;
}

Utterance RenderUtterance(const SimConfig& cfg, std::uint64_t seed, std::uint64_t index,
                          const Corpus& corpus) {
  cfg.Validate();
  auto rng = UtteranceRng(seed, index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const frontend::StftOptions stft;
  const auto N = static_cast<std::size_t>(std::lround(cfg.duration * kSampleRate));

  Utterance u;
  u.is_static = unit(rng) < cfg.static_fraction;
  double static_az = 0.0;
  if (u.is_static) {
    const int steps = int(std::floor(180.0 / cfg.static_grid_deg + 1e-9));
    static_az = cfg.static_grid_deg * std::uniform_int_distribution<int>(0, steps)(rng);
  }
  bool placed = false;
  for (int attempt = 0; attempt < kMaxRoomAttempts && !placed; ++attempt) {
    u.room = SampleRoom(rng, cfg.room);
    if (cfg.anechoic) u.room.beta = 0.0;
    if (u.is_static) {
      if (auto p = PlaceStaticSource(u.room, static_az, rng, cfg)) {
        u.trajectory = StaticTrajectory(*p, cfg.duration);
        placed = true;
      }
    } else {
      try {
        u.trajectory = SampleTrajectory(rng, u.room, cfg.duration, cfg.trajectory);
        placed = true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kConfig) throw;
      }
    }
  }
  Require(placed, ErrorKind::kConfig, "cannot place a source in any sampled room");

  const Waveform source = corpus.sources.empty()
                              ? SynthSpeech(N, rng)
                              : Excerpt(corpus.sources[std::uniform_int_distribution<std::size_t>(
                                            0, corpus.sources.size() - 1)(rng)],
                                        N, rng);
  u.clean = MovingConvolve(source, u.trajectory, u.room);
  auto vad = VadMask(source, stft);
  Require(std::any_of(vad.begin(), vad.end(), [](bool b) { return b; }), ErrorKind::kData,
          "source signal is silent");
  auto az = FrameAzimuths(u.room, u.trajectory, vad.size(), stft.frame_length, stft.hop);

  MultiWave noise(2, Waveform(N, 0.0));
  double snr = 0.0;
  if (cfg.add_noise) {
    Waveform mono;
    if (corpus.noises.empty()) {
      const auto kind = cfg.noise_kinds[std::uniform_int_distribution<std::size_t>(
          0, cfg.noise_kinds.size() - 1)(rng)];
      u.noise_name = NoiseKindName(kind);
      mono = MakeNoise(kind, 2 * (N + 1024), rng);
    } else {
      const auto pick = std::uniform_int_distribution<std::size_t>(0, corpus.noises.size() - 1)(rng);
      u.noise_name = pick < corpus.noise_names.size() ? corpus.noise_names[pick] : "corpus";
      mono = corpus.noises[pick];
      if (mono.size() < N) {  // loop short recordings
        Waveform looped(N);
        for (std::size_t n = 0; n < N; ++n) looped[n] = mono[n % mono.size()];
        mono = std::move(looped);
      }
    }
    DiffuseOptions dopt;
    dopt.mic_spacing = u.room.mic_spacing();
    dopt.c = u.room.c;
    noise = DiffuseNoise(mono, N, rng, dopt);
    snr = cfg.min_snr_db + (cfg.max_snr_db - cfg.min_snr_db) * unit(rng);
  }
  u.mixture = MixSnr(u.clean, noise, snr, std::move(vad), std::move(az), stft);
  for (auto& ch : noise)
    for (double& v : ch) v *= u.mixture.noise_gain;
  u.noise = std::move(noise);
  NormalizePeak(u, cfg.peak_level);
  return u;
}

Utterance RenderStatic(const RoomSpec& room, double azimuth_deg, double distance,
                       const Waveform& source) {
  Vec3 p = PointAtAzimuth(room, azimuth_deg, distance, 1);
  if (!room.Contains(p, 0.1)) p = PointAtAzimuth(room, azimuth_deg, distance, -1);
  Require(room.Contains(p, 0.1), ErrorKind::kInvalidArgument,
          "static source does not fit in the room at this distance");
  const frontend::StftOptions stft;
  Utterance u;
  u.room = room;
  u.is_static = true;
  u.trajectory = StaticTrajectory(p, double(source.size()) / room.fs);
  u.clean = MovingConvolve(source, u.trajectory, room);
  auto vad = VadMask(source, stft);
  auto az = FrameAzimuths(room, u.trajectory, vad.size(), stft.frame_length, stft.hop);
  u.noise.assign(2, Waveform(source.size(), 0.0));
  u.mixture.channels = u.clean;
  u.mixture.vad = std::move(vad);
  u.mixture.azimuth = std::move(az);
  u.mixture.noise_gain = 0.0;
  NormalizePeak(u, 0.9);
  return u;
}

}  // namespace tfssl::sim
