#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "support/cases.hpp"
#include "support/gradcheck.hpp"
#include "tfssl/error.hpp"
#include "tfssl/frontend/features.hpp"
#include "tfssl/net/model.hpp"
#include "tfssl/net/spectrum.hpp"
#include "tfssl/numcore/ops.hpp"
#include "tfssl/numcore/optim.hpp"
#include "tfssl/sim/dataset.hpp"
#include "tfssl/sim/signals.hpp"

using namespace tfssl;
using namespace tfssl::net;
using numcore::Graph;
using tfssl::testing::RandomTensor;
using tfssl::testing::TinyNetConfig;

namespace {

Tensor RunEncoder(const TfMambaNet& m, const Tensor& x) {
  Graph g(false);
  numcore::ParamScope p(g, m.params());
  return FeatureEncoder(p, g.Constant(x), m.config()).value();
}

// Output of block 0 on x [T][F][W] for a network with the given switches.
Tensor RunBlock(const TfMambaNet& m, const Tensor& x) {
  Graph g(false);
  numcore::ParamScope p(g, m.params());
  return TfBlock(p.Sub("block0."), {g.Constant(x), {}, {}}, m.config().expand_per_block[0],
                 m.config())
      .x.value();
}

}  // namespace

TEST_CASE("feature encoder shape and zero-input response") {
  NetConfig cfg = DeskConfig();
  TfMambaNet m(cfg);
  m.Init(1);
  std::mt19937_64 rng(1);
  const Tensor out = RunEncoder(m, RandomTensor({100, 253, 4}, rng));
  CHECK(out.shape() == numcore::Shape{100, 253, cfg.model_width});

  const Tensor zero = RunEncoder(m, Tensor({5, 253, 4}));
  const std::size_t frame = 253 * cfg.model_width;
  for (std::size_t t = 1; t < 5; ++t)
    CHECK(std::equal(zero.data(), zero.data() + frame, zero.data() + t * frame));
  CHECK_THROWS_AS(RunEncoder(m, Tensor({5, 253, 3})), Error);
}

TEST_CASE("feature encoder receptive field follows the dilation arithmetic") {
  NetConfig cfg = DeskConfig();
  TfMambaNet m(cfg);
  m.Init(2);
  // conv_in reaches +-(K-1)/2 bins, each dense layer +-dilation*(K-1)/2 more
  // along its deepest path, conv_out is 1x1.
  const std::size_t half = (cfg.encoder_kernel - 1) / 2;
  std::size_t reach = half;
  for (std::size_t d : cfg.dense_dilations) reach += d * half;
  REQUIRE(reach == 16);

  std::mt19937_64 rng(3);
  const Tensor base = RandomTensor({3, 80, 4}, rng);
  Tensor poked = base;
  const std::size_t t0 = 1, j0 = 40;
  poked.at({t0, j0, 2}) += 1.0;
  const Tensor a = RunEncoder(m, base), b = RunEncoder(m, poked);
  std::size_t lo = 80, hi = 0;
  bool other_frames_clean = true;
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t j = 0; j < 80; ++j)
      for (std::size_t c = 0; c < cfg.model_width; ++c) {
        if (a.at({t, j, c}) == b.at({t, j, c})) continue;
        if (t != t0) other_frames_clean = false;
        lo = std::min(lo, j);
        hi = std::max(hi, j);
      }
  CHECK(other_frames_clean);
  CHECK(lo == j0 - reach);
  CHECK(hi == j0 + reach);
}

TEST_CASE("first tf block has no skip contribution") {
  NetConfig cfg = TinyNetConfig();
  TfMambaNet m(cfg);
  m.Init(4);
  std::mt19937_64 rng(5);
  Graph g(false);
  numcore::ParamScope p(g, m.params());
  const auto x = g.Constant(RandomTensor({6, 16, 8}, rng));
  const auto s = TfBlock(p.Sub("block0."), {x, {}, {}}, 2, cfg);
  ssm::BiMambaShape shape{.width = 8, .expand = 2, .d_state = cfg.d_state};
  const Tensor t = ssm::BiMamba(p.Sub("block0.t."), x, shape).value();
  CHECK(numcore::MaxAbsDiff(s.t_skip.value(), t) == 0.0);
  CHECK(numcore::MaxAbsDiff(s.x.value(), s.f_skip.value()) == 0.0);

  // Second block adds both carriers.
  const auto s2 = TfBlock(p.Sub("block1."), s, 2, cfg);
  const Tensor t2 = ssm::BiMamba(p.Sub("block1.t."), s.x, shape).value();
  Tensor x1 = t2;
  for (std::size_t i = 0; i < x1.size(); ++i) x1[i] += s.t_skip.value()[i];
  const Tensor f2 =
      numcore::ops::SwapLeadingAxes(
          ssm::BiMamba(p.Sub("block1.f."), numcore::ops::SwapLeadingAxes(g.Constant(x1)), shape))
          .value();
  Tensor expect = f2;
  for (std::size_t i = 0; i < expect.size(); ++i) expect[i] += s.f_skip.value()[i];
  CHECK(numcore::MaxAbsDiff(s2.x.value(), expect) <= 1e-12);
}

TEST_CASE("T-BiMamba treats frames independently") {
  NetConfig cfg = TinyNetConfig();
  cfg.use_f_mamba = false;
  TfMambaNet m(cfg);
  m.Init(6);
  std::mt19937_64 rng(7);
  const std::size_t T = 7, F = 16, W = 8;
  const Tensor x = RandomTensor({T, F, W}, rng);
  std::vector<std::size_t> perm(T);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor xp({T, F, W});
  for (std::size_t t = 0; t < T; ++t)
    std::copy_n(x.data() + perm[t] * F * W, F * W, xp.data() + t * F * W);
  const Tensor y = RunBlock(m, x), yp = RunBlock(m, xp);
  double err = 0.0;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < F * W; ++i)
      err = std::max(err, std::abs(yp[t * F * W + i] - y[perm[t] * F * W + i]));
  CHECK(err == 0.0);
}

TEST_CASE("F-BiMamba treats bins independently") {
  NetConfig cfg = TinyNetConfig();
  cfg.use_t_mamba = false;
  TfMambaNet m(cfg);
  m.Init(8);
  std::mt19937_64 rng(9);
  const std::size_t T = 6, F = 16, W = 8;
  const Tensor x = RandomTensor({T, F, W}, rng);
  std::vector<std::size_t> perm(F);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor xp({T, F, W});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < F; ++j)
      std::copy_n(x.data() + (t * F + perm[j]) * W, W, xp.data() + (t * F + j) * W);
  const Tensor y = RunBlock(m, x), yp = RunBlock(m, xp);
  double err = 0.0;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < F; ++j)
      for (std::size_t c = 0; c < W; ++c)
        err = std::max(err, std::abs(yp[(t * F + j) * W + c] - y[(t * F + perm[j]) * W + c]));
  CHECK(err == 0.0);
}

TEST_CASE("decoder examples") {
  NetConfig cfg = TinyNetConfig();
  TfMambaNet m(cfg);
  m.Init(10);
  std::mt19937_64 rng(11);
  Graph g(false);
  numcore::ParamScope p(g, m.params());
  const Tensor y = Decode(p, g.Constant(RandomTensor({100, 16, 8}, rng, -3, 3)), cfg).value();
  CHECK(y.shape() == numcore::Shape{25, 181});
  for (double v : y.values()) CHECK((v > -1.0 && v < 1.0));

  Tensor frame = RandomTensor({1, 16, 8}, rng);
  Tensor constant({12, 16, 8});
  for (std::size_t t = 0; t < 12; ++t) std::copy_n(frame.data(), frame.size(), constant.data() + t * frame.size());
  const Tensor yc = Decode(p, g.Constant(constant), cfg).value();
  for (std::size_t k = 1; k < 3; ++k)
    CHECK(std::equal(yc.data(), yc.data() + 181, yc.data() + k * 181));
  CHECK_THROWS_AS(Decode(p, g.Constant(Tensor({3, 16, 8})), cfg), Error);
}

TEST_CASE("encode_target examples") {
  const std::vector<bool> on{true};
  std::vector<double> az{90.0};
  Tensor t = EncodeTarget(az, on);
  CHECK(t[90] == 1.0);
  for (int d = 1; d <= 90; ++d) CHECK(t[90 - d] == doctest::Approx(t[90 + d]).epsilon(1e-15));
  CHECK(t[98] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(t[98] == doctest::Approx(0.3679).epsilon(1e-4));

  az = {0.0};
  t = EncodeTarget(az, on);
  for (std::size_t i = 1; i < 181; ++i) CHECK(t[i] < t[i - 1]);

  az = {45.0, 45.0};
  t = EncodeTarget(az, {true, false});
  for (std::size_t i = 181; i < 362; ++i) CHECK(t[i] == 0.0);
  az = {181.0};
  CHECK_THROWS_AS(EncodeTarget(az, on), Error);
  az = {-0.5};
  CHECK_THROWS_AS(EncodeTarget(az, on), Error);
}

TEST_CASE("mse_loss examples") {
  std::mt19937_64 rng(12);
  const Tensor target = RandomTensor({4, 181}, rng, 0, 1);
  CHECK(MseLoss(target, target, {true, true, true, true}) == 0.0);
  Tensor shifted = target;
  for (double& v : shifted.storage()) v += 0.1;
  CHECK(MseLoss(shifted, target, {true, true, true, true}) == doctest::Approx(0.01));
  Tensor half = target;
  for (std::size_t i = 0; i < 181; ++i) half[i] += 0.2;
  for (std::size_t i = 181; i < 362; ++i) half[i] += 1.0;
  CHECK(MseLoss(half, target, {true, false, true, true}) == doctest::Approx(0.04 / 3.0));
  CHECK_THROWS_AS(MseLoss(target, target, {false, false, false, false}), Error);
  CHECK_THROWS_AS(MseLoss(target, target, {true}), Error);
}

TEST_CASE("decode_doa examples and round trip") {
  Tensor s({2, 181});
  s[37] = 0.8;
  CHECK(DecodeDoa(s) == std::vector<double>{37.0, 0.0});

  // Half-degree sources sit exactly between two bins; the tie goes low.
  for (int k = 0; k <= 360; ++k) {
    const double theta = 0.5 * k;
    std::vector<double> az{theta};
    const double expect = k % 2 == 0 ? theta : theta - 0.5;
    CHECK(DecodeDoa(EncodeTarget(az, {true}))[0] == expect);
  }
}

TEST_CASE("end-to-end shape contract") {
  NetConfig cfg = DeskConfig();
  TfMambaNet m(cfg);
  m.Init(13);
  std::mt19937_64 rng(14);
  for (std::size_t T : {std::size_t(4), std::size_t(50), std::size_t(100), std::size_t(333)}) {
    const Tensor y = m.Predict(RandomTensor({4, T, 253}, rng));
    CHECK(y.shape() == numcore::Shape{T / 4, 181});
  }
  CHECK_THROWS_AS(m.Predict(Tensor({2, 8, 253})), Error);
  CHECK_THROWS_AS(m.Predict(Tensor({4, 8, 200})), Error);
}

TEST_CASE("graph-free prediction equals the recorded forward pass") {
  NetConfig cfg = TinyNetConfig();
  TfMambaNet m(cfg);
  m.Init(15);
  std::mt19937_64 rng(16);
  const Tensor feats = RandomTensor({4, 22, 16}, rng);
  Graph g;
  numcore::ParamScope p(g, m.params());
  const Tensor fwd = m.Forward(p, g.Input("x", ToChannelLast(feats))).value();
  CHECK(numcore::MaxAbsDiff(m.Predict(feats), fwd) <= 1e-12);
}

TEST_CASE("parameter count is exact") {
  NetConfig cfg = TinyNetConfig();
  // Encoder 104 + 200 + 392 + 584 + 776 + 328, two blocks of two BiMamba
  // layers at 2272 each, decoder 128 x 181 + 181.
  CHECK(TfMambaNet::ParamCount(cfg) == 34821);
  for (const NetConfig& c : {cfg, DeskConfig(), NetConfig{}}) {
    TfMambaNet m(c);
    m.Init(1);
    std::size_t n = 0;
    for (const auto& [name, t] : m.params()) n += t.size();
    CHECK(n == TfMambaNet::ParamCount(c));
    CHECK(m.NumParams() == n);
  }
  CHECK(TfMambaNet::ParamCount(cfg) == TfMambaNet::ParamCount(cfg));
}

TEST_CASE("config validation and text round trip") {
  NetConfig cfg;
  cfg.model_width = 24;
  cfg.use_f_mamba = false;
  const NetConfig back = NetConfig::FromText(cfg.ToText());
  CHECK(back.ToText() == cfg.ToText());
  CHECK(back.model_width == 24);
  CHECK_FALSE(back.use_f_mamba);

  NetConfig bad;
  bad.expand_per_block = {2, 2};
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad = NetConfig{};
  bad.n_doa = 180;
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad = NetConfig{};
  bad.pool_factor = 0;
  CHECK_THROWS_AS(bad.Validate(), Error);
  CHECK_THROWS_AS(NetConfig::FromText("model_width = 8\nbogus = 1\n"), Error);
}

TEST_CASE("tiny network gradient spot check") {
  NetConfig cfg = TinyNetConfig();
  TfMambaNet m(cfg);
  m.Init(17);
  std::mt19937_64 rng(18);
  numcore::TensorMap store = m.params();
  store["input"] = RandomTensor({12, 16, 4}, rng);
  const auto r = tfssl::testing::CheckParamGradients(
      [&](const numcore::ParamScope& p) { return m.Forward(p, p("input")); }, store, 3);
  CAPTURE(r.worst_leaf);
  CAPTURE(r.rel_err);
  CHECK(r.pass);
}

TEST_CASE("loss decreases over the first 50 steps on one fixed-DOA sample") {
  // A static talker at 60 degrees in a reverberant room, 32 STFT frames.
  sim::RoomSpec room;
  room.rt60 = 0.3;
  room.beta = sim::ReflectionFromRt60(room.dims, room.rt60, sim::AbsorptionModel::kImageDecay);
  room.mics = sim::MicPair({3.0, 2.5, 1.5}, 0.7, 0.08);
  std::mt19937_64 rng(20);
  const auto source = sim::SynthSpeech(512 + 31 * 160, rng);
  const auto u = sim::RenderStatic(room, 60.0, 1.5, source);
  const Tensor x = ToChannelLast(frontend::AssembleFeatures(frontend::Stft(u.mixture.channels)).values);
  REQUIRE(x.dim(0) == 32);
  const std::vector<double> az(8, 60.0);
  const std::vector<bool> mask(8, true);
  const Tensor target = EncodeTarget(az, mask);

  TfMambaNet m(DeskConfig());
  m.Init(19);
  auto opt = numcore::OptimState::Create({}, {});
  std::vector<double> losses;
  for (int step = 0; step < 50; ++step) {
    Graph g;
    numcore::ParamScope p(g, m.params());
    const auto loss = numcore::ops::MaskedMse(m.Forward(p, g.Input("x", x)), target, mask);
    losses.push_back(loss.value()[0]);
    numcore::AdamWStep(opt, m.params(), g.Backward(loss));
  }
  int increases = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) {
    if (losses[i] < losses[i - 1]) continue;
    ++increases;
    MESSAGE("step " << i << ": " << losses[i - 1] << " -> " << losses[i]);
  }
  CHECK(increases == 0);
}
