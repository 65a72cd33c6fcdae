#include "tfssl/frontend/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "tfssl/error.hpp"

namespace tfssl::frontend {

std::size_t NumFrames(std::size_t num_samples, const StftOptions& opts) {
  if (num_samples < opts.frame_length) return 0;
  return 1 + (num_samples - opts.frame_length) / opts.hop;
}

std::vector<double> HannWindow(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                static_cast<double>(length));
  return w;
}

namespace {

// FFTW planning is not thread-safe; plans are created once per size under a
// lock and executed through the new-array interface, which is.
struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

const PlanPair& PlansFor(std::size_t n_fft) {
  static std::mutex mu;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n_fft);
  if (it != cache.end()) return it->second;
  std::vector<double> real(n_fft);
  std::vector<Complex> cplx(n_fft / 2 + 1);
  auto* c = reinterpret_cast<fftw_complex*>(cplx.data());
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), real.data(), c,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n_fft), c, real.data(),
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(n_fft, p).first->second;
}

}  // namespace

std::vector<Complex> RealFft(std::span<const double> x, std::size_t n_fft) {
  Require(x.size() <= n_fft, ErrorKind::kInvalidArgument, "fft input longer than n_fft");
  std::vector<double> in(n_fft, 0.0);
  std::copy(x.begin(), x.end(), in.begin());
  std::vector<Complex> out(n_fft / 2 + 1);
  fftw_execute_dft_r2c(PlansFor(n_fft).forward, in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> InverseRealFft(std::span<const Complex> spectrum, std::size_t n_fft) {
  Require(spectrum.size() == n_fft / 2 + 1, ErrorKind::kShape, "inverse fft: bin count mismatch");
  // c2r destroys its input, so work on a copy.
  std::vector<Complex> in(spectrum.begin(), spectrum.end());
  std::vector<double> out(n_fft);
  fftw_execute_dft_c2r(PlansFor(n_fft).inverse, reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n_fft);
  for (double& v : out) v *= scale;
  return out;
}

std::vector<std::vector<Complex>> StftFull(std::span<const double> signal,
                                           const StftOptions& opts) {
  Require(signal.size() >= opts.frame_length, ErrorKind::kInvalidArgument,
          "signal of " + std::to_string(signal.size()) + " samples is shorter than one frame (" +
              std::to_string(opts.frame_length) + ")");
  Require(opts.n_fft >= opts.frame_length, ErrorKind::kConfig, "n_fft shorter than the frame");
  const std::size_t T = NumFrames(signal.size(), opts);
  const auto window = HannWindow(opts.frame_length);
  std::vector<double> buf(opts.n_fft, 0.0);
  std::vector<Complex> spec(opts.n_fft / 2 + 1);
  const fftw_plan plan = PlansFor(opts.n_fft).forward;
  std::vector<std::vector<Complex>> out(T);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t start = t * opts.hop;
    for (std::size_t n = 0; n < opts.frame_length; ++n) buf[n] = signal[start + n] * window[n];
    std::fill(buf.begin() + static_cast<std::ptrdiff_t>(opts.frame_length), buf.end(), 0.0);
    fftw_execute_dft_r2c(plan, buf.data(), reinterpret_cast<fftw_complex*>(spec.data()));
    out[t] = spec;
  }
  return out;
}

ComplexSpectrogram Stft(const MultiWave& wave, const StftOptions& opts) {
  Require(!wave.empty(), ErrorKind::kInvalidArgument, "stft: no channels");
  Require(opts.last_bin <= opts.n_fft / 2 && opts.first_bin <= opts.last_bin, ErrorKind::kConfig,
          "stft: retained band outside the spectrum");
  for (const auto& ch : wave)
    Require(ch.size() == wave[0].size(), ErrorKind::kInvalidArgument,
            "stft: channel lengths differ");
  const std::size_t T = NumFrames(wave[0].size(), opts);
  Require(T >= 1, ErrorKind::kInvalidArgument,
          "signal of " + std::to_string(wave[0].size()) + " samples is shorter than one frame");
  ComplexSpectrogram out(wave.size(), T, opts.num_bins(), opts);
  for (std::size_t m = 0; m < wave.size(); ++m) {
    const auto full = StftFull(wave[m], opts);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < out.bins(); ++j) out.at(m, t, j) = full[t][opts.first_bin + j];
  }
  return out;
}

double AnalyticTdoa(double azimuth_deg, double spacing_m, double speed_of_sound) {
  Require(azimuth_deg >= 0.0 && azimuth_deg <= 180.0, ErrorKind::kInvalidArgument,
          "azimuth must lie in [0, 180]");
  return spacing_m * std::cos(azimuth_deg * std::numbers::pi / 180.0) / speed_of_sound;
}

}  // namespace tfssl::frontend
