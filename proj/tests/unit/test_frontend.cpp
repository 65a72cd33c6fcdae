#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tfssl/error.hpp"
#include "tfssl/frontend/features.hpp"
#include "tfssl/frontend/stft.hpp"

using namespace tfssl;
using namespace tfssl::frontend;

namespace {

Waveform Noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Waveform w(n);
  for (double& v : w) v = g(rng);
  return w;
}

Waveform Cosine(std::size_t n, double hz) {
  Waveform w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::cos(2.0 * std::numbers::pi * hz * double(i) / 16000.0);
  return w;
}

}  // namespace

TEST_CASE("band and frame bookkeeping") {
  StftOptions o;
  CHECK(o.num_bins() == 253);
  CHECK(o.bin_hz(o.first_bin) == 125.0);
  CHECK(o.bin_hz(o.first_bin - 1) < 100.0);
  CHECK(o.bin_hz(o.last_bin) == 8000.0);
  CHECK(NumFrames(512) == 1);
  CHECK(NumFrames(671) == 1);
  CHECK(NumFrames(672) == 2);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> len(512, 20000);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = len(rng);
    const auto spec = Stft({Waveform(n, 0.0)});
    CHECK(spec.frames() == 1 + (n - 512) / 160);
    CHECK(spec.bins() == 253);
  }
  CHECK_THROWS_AS(Stft({Waveform(511, 0.0)}), Error);
  CHECK_THROWS_AS(Stft({Waveform(600, 0.0), Waveform(601, 0.0)}), Error);
}

TEST_CASE("1 kHz cosine peaks at bin 32") {
  const auto spec = Stft({Cosine(4000, 1000.0)});
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    std::size_t best = 0;
    for (std::size_t j = 0; j < spec.bins(); ++j)
      if (std::abs(spec.at(0, t, j)) > std::abs(spec.at(0, t, best))) best = j;
    CHECK(best + StftOptions{}.first_bin == 32);
  }
}

TEST_CASE("Parseval over the full spectrum") {
  const Waveform x = Noise(3000, 2);
  const auto full = StftFull(x);
  const auto win = HannWindow(512);
  for (std::size_t t = 0; t < full.size(); ++t) {
    double time_energy = 0.0;
    for (std::size_t i = 0; i < 512; ++i) time_energy += std::pow(x[t * 160 + i] * win[i], 2);
    // One-sided spectrum: DC and Nyquist once, the rest twice.
    double spec_energy = std::norm(full[t][0]) + std::norm(full[t][256]);
    for (std::size_t k = 1; k < 256; ++k) spec_energy += 2.0 * std::norm(full[t][k]);
    spec_energy /= 512.0;
    CHECK(std::abs(spec_energy - time_energy) <= 1e-8 * time_energy);
  }
}

TEST_CASE("stft matches a direct DFT sum") {
  const Waveform x = Noise(700, 3);
  const auto spec = Stft({x});
  const auto win = HannWindow(512);
  for (std::size_t t = 0; t < spec.frames(); ++t)
    for (std::size_t j : {std::size_t(0), std::size_t(17), std::size_t(252)}) {
      const std::size_t k = j + 4;
      Complex s = 0.0;
      for (std::size_t n = 0; n < 512; ++n)
        s += x[t * 160 + n] * win[n] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * n) / 512.0);
      CHECK(std::abs(spec.at(0, t, j) - s) <= 1e-9);
    }
}

TEST_CASE("hann window is periodic") {
  const auto w = HannWindow(512);
  CHECK(w[0] == 0.0);
  CHECK(w[256] == doctest::Approx(1.0));
  for (std::size_t i = 1; i < 256; ++i) CHECK(w[i] == doctest::Approx(w[512 - i]).epsilon(1e-14));
}

TEST_CASE("stft is linear") {
  const Waveform x = Noise(2000, 4), y = Noise(2000, 5);
  const double a = 1.7, b = -0.3;
  Waveform z(2000);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
  const auto sx = Stft({x}), sy = Stft({y}), sz = Stft({z});
  double err = 0.0;
  for (std::size_t t = 0; t < sz.frames(); ++t)
    for (std::size_t j = 0; j < sz.bins(); ++j)
      err = std::max(err, std::abs(sz.at(0, t, j) - (a * sx.at(0, t, j) + b * sy.at(0, t, j))));
  CHECK(err <= 1e-10);
}

TEST_CASE("feature assembly") {
  const Waveform x = Noise(1600, 6), y = Noise(1600, 7);
  const auto spec = Stft({x, y});
  const auto f = AssembleFeatures(spec);
  REQUIRE(f.values.shape() == numcore::Shape{4, spec.frames(), 253});

  double mean_mag = 0.0;
  for (std::size_t t = 0; t < spec.frames(); ++t)
    for (std::size_t j = 0; j < 253; ++j) mean_mag += std::abs(spec.at(0, t, j));
  mean_mag /= double(spec.frames() * 253);
  CHECK(f.scale == doctest::Approx(mean_mag).epsilon(1e-14));

  // Undoing the recorded scale gives back the spectrogram.
  double err = 0.0;
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t t = 0; t < spec.frames(); ++t)
      for (std::size_t j = 0; j < 253; ++j) {
        const Complex c(f.values.at({2 * m, t, j}), f.values.at({2 * m + 1, t, j}));
        err = std::max(err, std::abs(c * f.scale - spec.at(m, t, j)));
      }
  CHECK(err <= 1e-12);

  const auto same = AssembleFeatures(Stft({x, x}));
  for (std::size_t t = 0; t < spec.frames(); ++t)
    for (std::size_t j = 0; j < 253; ++j) {
      CHECK(same.values.at({0, t, j}) == same.values.at({2, t, j}));
      CHECK(same.values.at({1, t, j}) == same.values.at({3, t, j}));
    }
  CHECK_THROWS_AS(AssembleFeatures(Stft({x})), Error);
}

TEST_CASE("features are invariant to waveform scale") {
  Waveform x = Noise(1600, 8), y = Noise(1600, 9);
  const auto f1 = AssembleFeatures(Stft({x, y}));
  for (double& v : x) v *= 10.0;
  for (double& v : y) v *= 10.0;
  const auto f10 = AssembleFeatures(Stft({x, y}));
  CHECK(numcore::MaxAbsDiff(f1.values, f10.values) <= 1e-12);
  CHECK(f10.scale == doctest::Approx(10.0 * f1.scale));
}

TEST_CASE("analytic tdoa examples") {
  // cos(pi / 2) is 6e-17 in floating point, not zero.
  CHECK(std::abs(AnalyticTdoa(90.0, 0.08)) <= 1e-18);
  CHECK(std::round(AnalyticTdoa(0.0, 0.08) * 1e7) / 10.0 == 233.2);
  CHECK(AnalyticTdoa(60.0, 0.08) == doctest::Approx(0.5 * AnalyticTdoa(0.0, 0.08)).epsilon(1e-14));
  CHECK(AnalyticTdoa(180.0, 0.08) == doctest::Approx(-AnalyticTdoa(0.0, 0.08)));
}

TEST_CASE("real fft round trip") {
  const Waveform x = Noise(300, 10);
  const auto X = RealFft(x, 512);
  CHECK(X.size() == 257);
  const auto back = InverseRealFft(X, 512);
  for (std::size_t i = 0; i < 300; ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));
  for (std::size_t i = 300; i < 512; ++i) CHECK(std::abs(back[i]) <= 1e-12);
}
