#include "tfssl/sim/render.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "tfssl/error.hpp"
#include "tfssl/sim/rir.hpp"

namespace tfssl::sim {

using frontend::Complex;

Waveform FftConvolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out = a.size() + b.size() - 1;
  const std::size_t n = std::bit_ceil(out);
  auto A = frontend::RealFft(a, n);
  const auto B = frontend::RealFft(b, n);
  for (std::size_t k = 0; k < A.size(); ++k) A[k] *= B[k];
  auto y = frontend::InverseRealFft(A, n);
  y.resize(out);
  return y;
}

double SegmentWeight(std::size_t k, std::size_t n_segments, long n, long seg, long fade) {
  const long half = fade / 2;
  const long start = long(k) * seg;
  const long end = start + seg;
  auto ramp = [&](long boundary) {  // 0 before the ramp, 1 after it
    const double u = (double(n - (boundary - half)) + 0.5) / double(fade);
    return std::clamp(u, 0.0, 1.0);
  };
  const double up = k == 0 ? 1.0 : ramp(start);
  const double down = k + 1 == n_segments ? 1.0 : 1.0 - ramp(end);
  return std::min(up, down);
}

MultiWave MovingConvolve(std::span<const double> signal, const Trajectory& traj,
                         const RoomSpec& room) {
  const long N = long(signal.size());
  MultiWave out(2, Waveform(signal.size(), 0.0));
  if (N == 0) return out;
  const long seg = std::lround(traj.interval * room.fs);
  const long fade = std::lround(kCrossfadeSeconds * room.fs);
  const std::size_t n_seg = std::size_t((N + seg - 1) / seg);
  Require(traj.waypoints.size() >= n_seg, ErrorKind::kInvalidArgument,
          "trajectory is shorter than the signal");

  double max_dist = 0.0;
  for (std::size_t k = 0; k < n_seg; ++k)
    for (const auto& mic : room.mics)
      max_dist = std::max(max_dist, (traj.waypoints[k] - mic).norm());
  const std::size_t rir_len = RirLength(room, max_dist);

  // RIR spectra cached per distinct waypoint; static sources cost one pair.
  const long half = fade / 2;
  const std::size_t max_piece = std::size_t(seg + fade + 2);
  const std::size_t n_fft = std::bit_ceil(max_piece + rir_len - 1);
  std::vector<std::array<std::vector<Complex>, 2>> spectra;
  std::vector<std::size_t> spectrum_of(n_seg);
  for (std::size_t k = 0; k < n_seg; ++k) {
    if (k > 0 && traj.waypoints[k] == traj.waypoints[k - 1]) {
      spectrum_of[k] = spectrum_of[k - 1];
      continue;
    }
    std::array<std::vector<Complex>, 2> pair;
    for (int m = 0; m < 2; ++m)
      pair[m] = frontend::RealFft(IsmRir(room, traj.waypoints[k], room.mics[m], rir_len), n_fft);
    spectra.push_back(std::move(pair));
    spectrum_of[k] = spectra.size() - 1;
  }

  std::vector<double> piece;
  for (std::size_t k = 0; k < n_seg; ++k) {
    const long lo = std::max<long>(0, long(k) * seg - (k == 0 ? 0 : half));
    const long hi = std::min<long>(N, long(k + 1) * seg + (k + 1 == n_seg ? 0 : half));
    piece.assign(std::size_t(hi - lo), 0.0);
    for (long n = lo; n < hi; ++n)
      piece[std::size_t(n - lo)] = signal[std::size_t(n)] * SegmentWeight(k, n_seg, n, seg, fade);
    const auto X = frontend::RealFft(piece, n_fft);
    for (int m = 0; m < 2; ++m) {
      std::vector<Complex> Y(X.size());
      const auto& H = spectra[spectrum_of[k]][m];
      for (std::size_t i = 0; i < X.size(); ++i) Y[i] = X[i] * H[i];
      const auto y = frontend::InverseRealFft(Y, n_fft);
      const long stop = std::min<long>(N, lo + long(piece.size() + rir_len - 1));
      for (long n = lo; n < stop; ++n) out[m][std::size_t(n)] += y[std::size_t(n - lo)];
    }
  }
  return out;
}

}  // namespace tfssl::sim
