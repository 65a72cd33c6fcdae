#include "tfssl/sim/rir.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tfssl/error.hpp"

namespace tfssl::sim {
namespace {

constexpr int kHalf = kSincTaps / 2;
constexpr int kTableSteps = 1024;

double KernelAt(double x) {
  // Hann window spanning the 81 taps plus one sample on each side so the
  // outermost taps are not zeroed.
  const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * x / (kHalf + 1)));
  if (std::abs(x) < 1e-12) return w;
  const double px = std::numbers::pi * x;
  return w * std::sin(px) / px;
}

// table[f][j] = kernel at offset (j - kHalf) - f / kTableSteps.
const std::vector<double>& KernelTable() {
  static const std::vector<double> table = [] {
    std::vector<double> t(std::size_t(kTableSteps + 1) * kSincTaps);
    for (int f = 0; f <= kTableSteps; ++f)
      for (int j = 0; j < kSincTaps; ++j)
        t[std::size_t(f) * kSincTaps + j] = KernelAt(double(j - kHalf) - double(f) / kTableSteps);
    return t;
  }();
  return table;
}

void DepositExact(std::vector<double>& h, double delay, double amp) {
  const long n0 = std::lround(std::floor(delay));
  for (long n = n0 - kHalf; n <= n0 + kHalf + 1; ++n) {
    if (n < 0 || n >= long(h.size())) continue;
    const double x = double(n) - delay;
    if (std::abs(x) > kHalf + 0.5) continue;
    h[std::size_t(n)] += amp * KernelAt(x);
  }
}

void DepositTable(std::vector<double>& h, double delay, double amp, const std::vector<double>& table) {
  const double fl = std::floor(delay);
  int f = int(std::lround((delay - fl) * kTableSteps));
  long n0 = long(fl);
  const double* k = table.data() + std::size_t(f) * kSincTaps;
  const long first = n0 - kHalf;
  const long lo = std::max<long>(0, first);
  const long hi = std::min<long>(long(h.size()), first + kSincTaps);
  double* out = h.data();
  for (long n = lo; n < hi; ++n) out[n] += amp * k[n - first];
}

// Allen-Berkley 100 Hz high-pass. All reflections are positive, so without it
// the overlapping kernels build up a DC tail that decays more slowly than the
// reflection energy.
void HighPass(std::vector<double>& h, double fs) {
  const double w = 2.0 * std::numbers::pi * kHighPassHz / fs;
  const double r1 = std::exp(-w), b1 = 2.0 * r1 * std::cos(w), b2 = -r1 * r1, a1 = -(1.0 + r1);
  double y0 = 0.0, y1 = 0.0, y2 = 0.0;
  for (double& v : h) {
    y2 = y1;
    y1 = y0;
    y0 = b1 * y1 + b2 * y2 + v;
    v = y0 + a1 * y1 + r1 * y2;
  }
}

}  // namespace

std::size_t RirLength(const RoomSpec& room, double distance) {
  const auto reverb = static_cast<std::size_t>(std::ceil(1.25 * room.rt60 * room.fs));
  const auto direct = static_cast<std::size_t>(std::ceil(distance / room.c * room.fs)) + kHalf + 2;
  return std::max(reverb, direct);
}

std::vector<double> IsmRir(const RoomSpec& room, const Vec3& src, const Vec3& mic) {
  return IsmRir(room, src, mic, RirLength(room, (src - mic).norm()));
}

std::vector<double> IsmRir(const RoomSpec& room, const Vec3& src, const Vec3& mic,
                           std::size_t length) {
  Require(room.Contains(src, 0.0), ErrorKind::kInvalidArgument, "source outside the room");
  Require(room.Contains(mic, 0.0), ErrorKind::kInvalidArgument, "microphone outside the room");
  Require(room.beta >= 0.0 && room.beta <= 1.0, ErrorKind::kInvalidArgument,
          "reflection coefficient must lie in [0, 1]");
  std::vector<double> h(length, 0.0);
  const double samples_per_m = room.fs / room.c;
  // Images farther than this deposit nothing inside the response.
  const double max_dist = (double(length) + kHalf) / samples_per_m;

  if (room.beta == 0.0) {
    DepositExact(h, (src - mic).norm() * samples_per_m, 1.0 / (4.0 * std::numbers::pi * (src - mic).norm()));
    return h;
  }

  const auto& table = KernelTable();
  const double L[3] = {room.dims.x, room.dims.y, room.dims.z};
  const double s[3] = {src.x, src.y, src.z};
  const double r[3] = {mic.x, mic.y, mic.z};
  int nmax[3];
  for (int a = 0; a < 3; ++a) nmax[a] = int(std::ceil(max_dist / (2.0 * L[a]))) + 1;
  const int max_refl = 2 * (nmax[0] + nmax[1] + nmax[2]) + 6;
  std::vector<double> beta_pow(std::size_t(max_refl) + 1);
  beta_pow[0] = 1.0;
  for (std::size_t i = 1; i < beta_pow.size(); ++i) beta_pow[i] = beta_pow[i - 1] * room.beta;

  // Per axis: offsets (image - mic) and reflection counts for all (m, p).
  struct AxisImage {
    double d;
    int refl;
  };
  std::vector<AxisImage> axis[3];
  for (int a = 0; a < 3; ++a) {
    for (int m = -nmax[a]; m <= nmax[a]; ++m)
      for (int p = 0; p <= 1; ++p) {
        const double d = (1 - 2 * p) * s[a] + 2.0 * m * L[a] - r[a];
        if (std::abs(d) > max_dist) continue;
        axis[a].push_back({d, std::abs(m - p) + std::abs(m)});
      }
  }
  const double max_d2 = max_dist * max_dist;
  for (const auto& ix : axis[0]) {
    const double dx2 = ix.d * ix.d;
    for (const auto& iy : axis[1]) {
      const double dxy2 = dx2 + iy.d * iy.d;
      if (dxy2 > max_d2) continue;
      for (const auto& iz : axis[2]) {
        const int refl = ix.refl + iy.refl + iz.refl;
        if (refl == 0) continue;  // direct path, already deposited
        const double d2 = dxy2 + iz.d * iz.d;
        if (d2 > max_d2) continue;
        const double dist = std::sqrt(d2);
        const double amp = beta_pow[std::size_t(refl)] / (4.0 * std::numbers::pi * dist);
        DepositTable(h, dist * samples_per_m, amp, table);
      }
    }
  }
  // The direct path stays an exact fractional delay.
  HighPass(h, room.fs);
  DepositExact(h, (src - mic).norm() * samples_per_m, 1.0 / (4.0 * std::numbers::pi * (src - mic).norm()));
  return h;
}

}  // namespace tfssl::sim
