#include "tfssl/sim/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tfssl/error.hpp"
#include "tfssl/sim/signals.hpp"

namespace tfssl::sim {
namespace {

void NormalizeRms(Waveform& w, double rms) {
  double e = 0.0;
  for (double v : w) e += v * v;
  if (e <= 0.0) return;
  const double g = rms / std::sqrt(e / double(w.size()));
  for (double& v : w) v *= g;
}

Waveform CircularExcerpt(std::span<const double> src, std::size_t offset, std::size_t length) {
  Waveform out(length);
  for (std::size_t n = 0; n < length; ++n) out[n] = src[(offset + n) % src.size()];
  return out;
}

}  // namespace

double DiffuseCoherence(double f_hz, double spacing, double c) {
  const double x = 2.0 * std::numbers::pi * f_hz * spacing / c;
  return std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x;
}

MultiWave DiffuseNoise(std::span<const double> mono, std::size_t length, std::mt19937_64& rng,
                       const DiffuseOptions& o) {
  Require(mono.size() >= length && !mono.empty(), ErrorKind::kInvalidArgument,
          "noise source shorter than the requested length");
  Require(o.frame % o.hop == 0 && o.frame == 2 * o.hop, ErrorKind::kConfig,
          "diffuse noise synthesis needs 50% overlap");
  const std::size_t padded = length + 2 * o.frame;
  std::size_t o1, o2;
  if (mono.size() >= 2 * padded) {
    o1 = std::uniform_int_distribution<std::size_t>(0, mono.size() - 2 * padded)(rng);
    o2 = o1 + padded;
  } else {
    o1 = std::uniform_int_distribution<std::size_t>(0, mono.size() - 1)(rng);
    o2 = o1 + mono.size() / 2;
  }
  const Waveform n1 = CircularExcerpt(mono, o1, padded);
  const Waveform n2 = CircularExcerpt(mono, o2, padded);

  auto window = frontend::HannWindow(o.frame);
  for (double& w : window) w = std::sqrt(w);
  const std::size_t n_bins = o.frame / 2 + 1;
  std::vector<double> gamma(n_bins), ortho(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    gamma[k] = DiffuseCoherence(double(k) * o.fs / double(o.frame), o.mic_spacing, o.c);
    ortho[k] = std::sqrt(std::max(0.0, 1.0 - gamma[k] * gamma[k]));
  }

  MultiWave acc(2, Waveform(padded, 0.0));
  std::vector<double> f1(o.frame), f2(o.frame);
  for (std::size_t start = 0; start + o.frame <= padded; start += o.hop) {
    for (std::size_t n = 0; n < o.frame; ++n) {
      f1[n] = n1[start + n] * window[n];
      f2[n] = n2[start + n] * window[n];
    }
    const auto X1 = frontend::RealFft(f1, o.frame);
    const auto X2 = frontend::RealFft(f2, o.frame);
    std::vector<frontend::Complex> Y2(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) Y2[k] = gamma[k] * X1[k] + ortho[k] * X2[k];
    const auto y1 = frontend::InverseRealFft(X1, o.frame);
    const auto y2 = frontend::InverseRealFft(Y2, o.frame);
    for (std::size_t n = 0; n < o.frame; ++n) {
      acc[0][start + n] += y1[n] * window[n];
      acc[1][start + n] += y2[n] * window[n];
    }
  }
  MultiWave out(2);
  for (int m = 0; m < 2; ++m)
    out[m].assign(acc[m].begin() + std::ptrdiff_t(o.frame),
                  acc[m].begin() + std::ptrdiff_t(o.frame + length));
  return out;
}

NoiseKind ParseNoiseKind(const std::string& name) {
  if (name == "white") return NoiseKind::kWhite;
  if (name == "babble") return NoiseKind::kBabble;
  if (name == "factory") return NoiseKind::kFactory;
  Fail(ErrorKind::kConfig, "unknown noise type '" + name + "' (white, babble, factory)");
}

std::string NoiseKindName(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kBabble: return "babble";
    case NoiseKind::kFactory: return "factory";
  }
  return "white";
}

Waveform WhiteNoise(std::size_t length, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Waveform w(length);
  for (double& v : w) v = gauss(rng);
  NormalizeRms(w, 0.1);
  return w;
}

Waveform BabbleNoise(std::size_t length, std::mt19937_64& rng, double fs) {
  SpeechOptions talker;
  talker.min_lead = 0.0;
  talker.max_lead = 0.3;
  talker.min_gap = 0.02;
  talker.max_gap = 0.12;
  Waveform w(length, 0.0);
  for (int i = 0; i < 6; ++i) {
    const auto s = SynthSpeech(length, rng, fs, talker);
    for (std::size_t n = 0; n < length; ++n) w[n] += s[n];
  }
  NormalizeRms(w, 0.1);
  return w;
}

Waveform FactoryNoise(std::size_t length, std::mt19937_64& rng, double fs) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Waveform w(length, 0.0);
  // Pink background via Kellet's economy filter.
  double b0 = 0, b1 = 0, b2 = 0;
  for (auto& v : w) {
    const double x = gauss(rng);
    b0 = 0.99765 * b0 + x * 0.0990460;
    b1 = 0.96300 * b1 + x * 0.2965164;
    b2 = 0.57000 * b2 + x * 1.0526913;
    v = 0.05 * (b0 + b1 + b2 + x * 0.1848);
  }
  const double hum = 100.0 * (1.0 + 0.02 * (unit(rng) - 0.5));
  for (int h = 1; h <= 20; ++h) {
    const double amp = 0.05 / h, ph = 2 * std::numbers::pi * unit(rng);
    for (std::size_t n = 0; n < length; ++n)
      w[n] += amp * std::sin(2 * std::numbers::pi * hum * h * double(n) / fs + ph);
  }
  std::size_t pos = static_cast<std::size_t>(unit(rng) * 0.5 * fs);
  while (pos < length) {
    const double level = 0.5 + unit(rng);
    const double decay = std::exp(-1.0 / (0.015 * fs));
    double env = level;
    for (std::size_t n = pos; n < length && env > 1e-4; ++n, env *= decay) w[n] += env * gauss(rng);
    pos += static_cast<std::size_t>((0.3 + 0.7 * unit(rng)) * fs);
  }
  NormalizeRms(w, 0.1);
  return w;
}

Waveform MakeNoise(NoiseKind kind, std::size_t length, std::mt19937_64& rng, double fs) {
  switch (kind) {
    case NoiseKind::kWhite: return WhiteNoise(length, rng);
    case NoiseKind::kBabble: return BabbleNoise(length, rng, fs);
    case NoiseKind::kFactory: return FactoryNoise(length, rng, fs);
  }
  return WhiteNoise(length, rng);
}

}  // namespace tfssl::sim
