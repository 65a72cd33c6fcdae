#include "tfssl/baseline/srp_phat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tfssl/error.hpp"
#include "tfssl/net/spectrum.hpp"

namespace tfssl::baseline {

SteeringGrid SteeringGrid::Build(const frontend::StftOptions& opts, double spacing_m,
                                 double speed_of_sound) {
  SteeringGrid g;
  g.bins = opts.num_bins();
  for (int a = 0; a <= 180; ++a) {
    g.azimuth_deg.push_back(a);
    g.tau_s.push_back(frontend::AnalyticTdoa(a, spacing_m, speed_of_sound));
  }
  g.phasors.resize(g.azimuth_deg.size() * g.bins);
  for (std::size_t a = 0; a < g.azimuth_deg.size(); ++a)
    for (std::size_t j = 0; j < g.bins; ++j) {
      const double f = opts.bin_hz(opts.first_bin + j);
      g.phasors[a * g.bins + j] = std::polar(1.0, -2.0 * std::numbers::pi * f * g.tau_s[a]);
    }
  return g;
}

std::vector<Complex> PhatCrossSpectrum(const ComplexSpectrogram& spec, std::size_t frame) {
  Require(spec.mics() == 2, ErrorKind::kInvalidArgument, "PHAT needs exactly 2 microphones");
  Require(frame < spec.frames(), ErrorKind::kInvalidArgument, "frame index out of range");
  std::vector<Complex> phi(spec.bins());
  for (std::size_t j = 0; j < spec.bins(); ++j) {
    const Complex cross = spec.at(0, frame, j) * std::conj(spec.at(1, frame, j));
    phi[j] = cross / std::max(std::abs(cross), kPhatFloor);
  }
  return phi;
}

std::vector<double> GccPhat(const ComplexSpectrogram& spec, std::size_t frame) {
  const auto phi = PhatCrossSpectrum(spec, frame);
  const double fs = spec.options().sample_rate;
  std::vector<double> r(2 * kMaxGccLag + 1, 0.0);
  for (int lag = -kMaxGccLag; lag <= kMaxGccLag; ++lag) {
    double acc = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) {
      const double w = 2.0 * std::numbers::pi * spec.bin_hz(j) * lag / fs;
      acc += (phi[j] * std::polar(1.0, -w)).real();
    }
    r[static_cast<std::size_t>(lag + kMaxGccLag)] = acc / static_cast<double>(phi.size());
  }
  return r;
}

numcore::Tensor SrpPhat(const ComplexSpectrogram& spec, const SteeringGrid& grid) {
  Require(grid.bins == spec.bins(), ErrorKind::kShape, "steering grid bin count mismatch");
  const std::size_t A = grid.azimuth_deg.size();
  numcore::Tensor out({spec.frames(), A});
  const double inv = 1.0 / static_cast<double>(spec.bins());
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    const auto phi = PhatCrossSpectrum(spec, t);
    for (std::size_t a = 0; a < A; ++a) {
      double acc = 0.0;
      for (std::size_t j = 0; j < phi.size(); ++j) acc += (phi[j] * grid.phasor(a, j)).real();
      out[t * A + a] = acc * inv;
    }
  }
  return out;
}

std::vector<double> MedianFilter(const std::vector<double>& x, std::size_t width) {
  if (width <= 1 || x.empty()) return x;
  const std::size_t half = width / 2;
  std::vector<double> out(x.size()), win;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(x.size(), i + half + 1);
    win.assign(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi));
    auto mid = win.begin() + static_cast<std::ptrdiff_t>(win.size() / 2);
    std::nth_element(win.begin(), mid, win.end());
    out[i] = *mid;
  }
  return out;
}

SrpTrack LocateSrpPhat(const ComplexSpectrogram& spec, const SteeringGrid& grid,
                       std::size_t median_width) {
  const numcore::Tensor map = SrpPhat(spec, grid);
  SrpTrack track;
  const auto raw = net::DecodeDoa(map);
  for (std::size_t t = 0; t < raw.size(); ++t)
    track.peak_value.push_back(map[t * net::kNumDoa + static_cast<std::size_t>(raw[t])]);
  track.azimuth_deg = MedianFilter(raw, median_width);
  return track;
}

}  // namespace tfssl::baseline
