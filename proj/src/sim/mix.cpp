#include "tfssl/sim/mix.hpp"

#include <algorithm>
#include <cmath>

#include "tfssl/error.hpp"

namespace tfssl::sim {

std::vector<bool> VadMask(std::span<const double> signal, const frontend::StftOptions& opts) {
  const std::size_t T = frontend::NumFrames(signal.size(), opts);
  std::vector<double> rms(T);
  for (std::size_t t = 0; t < T; ++t) {
    double e = 0.0;
    for (std::size_t n = 0; n < opts.frame_length; ++n) {
      const double v = signal[t * opts.hop + n];
      e += v * v;
    }
    rms[t] = std::sqrt(e / double(opts.frame_length));
  }
  const double peak = T ? *std::max_element(rms.begin(), rms.end()) : 0.0;
  const double floor = peak * std::pow(10.0, -kVadRangeDb / 20.0);
  std::vector<bool> vad(T);
  for (std::size_t t = 0; t < T; ++t) vad[t] = peak > 0.0 && rms[t] >= floor;
  return vad;
}

std::vector<bool> ActiveSamples(const std::vector<bool>& vad, std::size_t n_samples,
                                const frontend::StftOptions& opts) {
  std::vector<bool> active(n_samples, false);
  for (std::size_t t = 0; t < vad.size(); ++t) {
    if (!vad[t]) continue;
    const std::size_t end = std::min(n_samples, t * opts.hop + opts.frame_length);
    for (std::size_t n = t * opts.hop; n < end; ++n) active[n] = true;
  }
  return active;
}

double ActivePower(std::span<const double> x, const std::vector<bool>& active) {
  double e = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < x.size() && n < active.size(); ++n)
    if (active[n]) {
      e += x[n] * x[n];
      ++count;
    }
  return count ? e / double(count) : 0.0;
}

Mixture MixSnr(const MultiWave& clean, const MultiWave& noise, double snr_db,
               std::vector<bool> vad, std::vector<double> azimuth,
               const frontend::StftOptions& opts) {
  Require(clean.size() == 2 && noise.size() == 2, ErrorKind::kInvalidArgument,
          "mix_snr expects two-channel clean and noise signals");
  const std::size_t N = clean[0].size();
  for (int m = 0; m < 2; ++m)
    Require(clean[m].size() == N && noise[m].size() == N, ErrorKind::kInvalidArgument,
            "mix_snr: clean and noise lengths differ");
  const auto active = ActiveSamples(vad, N, opts);
  const double p_clean = ActivePower(clean[0], active);
  const double p_noise = ActivePower(noise[0], active);
  Require(p_clean > 0.0, ErrorKind::kData, "mix_snr: clean signal has no power in active frames");
  Mixture mix;
  mix.snr_db = snr_db;
  mix.noise_gain = p_noise > 0.0 ? std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0))) : 0.0;
  mix.channels.assign(2, Waveform(N));
  for (int m = 0; m < 2; ++m)
    for (std::size_t n = 0; n < N; ++n) mix.channels[m][n] = clean[m][n] + mix.noise_gain * noise[m][n];
  mix.vad = std::move(vad);
  mix.azimuth = std::move(azimuth);
  return mix;
}

}  // namespace tfssl::sim
