#include "tfssl/sim/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tfssl::sim {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Formant {
  double freq, bandwidth, gain;
};

double Envelope(const std::vector<Formant>& formants, double f) {
  double g = 0.0;
  for (const auto& fm : formants) {
    const double x = (f - fm.freq) / (0.5 * fm.bandwidth);
    g += fm.gain / (1.0 + x * x);
  }
  return g * std::pow(std::max(f, 50.0) / 500.0, -0.6) + 1e-3;
}

}  // namespace

Waveform SynthSpeech(std::size_t length, std::mt19937_64& rng, double fs, const SpeechOptions& o) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  Waveform out(length, 0.0);
  const double nyquist_guard = 0.48 * fs;
  std::size_t pos = static_cast<std::size_t>(between(o.min_lead, o.max_lead) * fs);
  std::vector<double> phase;
  while (pos < length) {
    const auto dur = static_cast<std::size_t>(between(o.min_syllable, o.max_syllable) * fs);
    const std::size_t end = std::min(length, pos + dur);
    const double f0a = between(o.min_f0, o.max_f0);
    const double f0b = std::clamp(f0a * between(0.8, 1.25), o.min_f0 * 0.8, o.max_f0 * 1.25);
    const std::vector<Formant> formants = {{between(300, 900), between(80, 160), 1.0},
                                           {between(900, 2500), between(100, 200), 0.6},
                                           {between(2200, 3500), between(150, 250), 0.3}};
    const auto n_harm = static_cast<std::size_t>(nyquist_guard / std::max(f0a, f0b));
    phase.assign(n_harm, 0.0);
    std::vector<double> gains(n_harm);
    for (std::size_t h = 0; h < n_harm; ++h) {
      phase[h] = kTwoPi * unit(rng);
      gains[h] = Envelope(formants, double(h + 1) * 0.5 * (f0a + f0b));
    }
    const double ramp = 0.02 * fs;
    const double span = double(end - pos);
    for (std::size_t n = pos; n < end; ++n) {
      const double u = double(n - pos) / std::max(span, 1.0);
      const double f0 = f0a + (f0b - f0a) * u;
      const double t_in = double(n - pos), t_out = double(end - n);
      const double env = 0.5 * (1.0 - std::cos(std::numbers::pi * std::min(1.0, t_in / ramp))) *
                         0.5 * (1.0 - std::cos(std::numbers::pi * std::min(1.0, t_out / ramp)));
      double s = 0.0;
      for (std::size_t h = 0; h < n_harm; ++h) {
        phase[h] += kTwoPi * double(h + 1) * f0 / fs;
        s += gains[h] * std::sin(phase[h]);
      }
      out[n] = env * s;
    }
    for (auto& p : phase) p = std::fmod(p, kTwoPi);
    pos = end;
    if (pos < length && unit(rng) < o.fricative_prob) {
      // First-difference filtered noise burst, i.e. high-pass emphasis.
      const auto fdur = static_cast<std::size_t>(between(0.05, 0.12) * fs);
      const std::size_t fend = std::min(length, pos + fdur);
      double prev = 0.0;
      const double level = 0.3 * between(0.5, 1.0);
      for (std::size_t n = pos; n < fend; ++n) {
        const double w = gauss(rng);
        const double u = double(n - pos) / double(fdur);
        out[n] += level * std::sin(std::numbers::pi * u) * (w - prev);
        prev = w;
      }
      pos = fend;
    }
    pos += static_cast<std::size_t>(between(o.min_gap, o.max_gap) * fs);
  }
  double energy = 0.0;
  std::size_t active = 0;
  for (double v : out)
    if (v != 0.0) {
      energy += v * v;
      ++active;
    }
  if (active > 0 && energy > 0.0) {
    const double g = o.rms / std::sqrt(energy / double(active));
    for (double& v : out) v *= g;
  }
  return out;
}

Waveform Tone(std::size_t length, double freq_hz, double amplitude, double fs) {
  Waveform w(length);
  for (std::size_t n = 0; n < length; ++n) w[n] = amplitude * std::cos(kTwoPi * freq_hz * double(n) / fs);
  return w;
}

}  // namespace tfssl::sim
