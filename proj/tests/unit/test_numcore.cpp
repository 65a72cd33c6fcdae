#include <cmath>
#include <sstream>

#include "doctest.h"
#include "support/cases.hpp"
#include "support/gradcheck.hpp"
#include "tfssl/error.hpp"
#include "tfssl/numcore/checkpoint.hpp"
#include "tfssl/numcore/ops.hpp"
#include "tfssl/numcore/optim.hpp"

using namespace tfssl;
using namespace tfssl::numcore;
using tfssl::testing::CheckGradients;
using tfssl::testing::RandomTensor;

TEST_CASE("identity, silu and matmul forward examples") {
  Graph g;
  Var x = g.Input("x", Tensor::FromList({1, 2, 3}));
  g.MarkOutput("y", ops::Identity(x));
  auto out = g.Forward({{"x", Tensor::FromList({1, 2, 3})}});
  CHECK(out.at("y").storage() == std::vector<double>{1, 2, 3});

  Graph g2;
  CHECK(ops::Silu(g2.Constant(Tensor::FromList({0.0}))).value()[0] == 0.0);

  Graph g3;
  Var a = g3.Constant(Tensor({2, 2}, 1.0));
  Var b = g3.Constant(Tensor({2, 2}, 1.0));
  for (double v : ops::MatMul(a, b).value().values()) CHECK(v == 2.0);
}

TEST_CASE("forward re-evaluates with new inputs") {
  Graph g;
  Var x = g.Input("x", Tensor::FromList({1, 2}));
  Var p = g.Param("p", Tensor::FromList({3, 4}));
  g.MarkOutput("y", ops::Mul(x, p));
  auto out = g.Forward({{"x", Tensor::FromList({-1, 0.5})}});
  CHECK(out.at("y")[0] == -3.0);
  CHECK(out.at("y")[1] == 2.0);
  CHECK_THROWS_AS(g.Forward({}), Error);
  CHECK_THROWS_AS(g.Forward({{"x", Tensor::FromList({1, 2, 3})}}), Error);
}

TEST_CASE("backward examples") {
  Graph g;
  Var p = g.Param("p", Tensor({2, 3}, 0.7));
  Var unused = g.Param("q", Tensor({4}, 1.0));
  auto grads = g.Backward(ops::Sum(p));
  for (double v : grads.at("p").values()) CHECK(v == 1.0);
  for (double v : grads.at("q").values()) CHECK(v == 0.0);

  Graph g2;
  Var p2 = g2.Param("p", Tensor::FromList({3}));
  CHECK(g2.Backward(ops::Sum(ops::Mul(p2, p2))).at("p")[0] == doctest::Approx(6.0));

  Graph g3;
  Var v = g3.Param("v", Tensor::FromList({1, 2}));
  CHECK_THROWS_AS(g3.Backward(v), Error);
}

TEST_CASE("non-finite intermediates raise") {
  Graph g;
  Var x = g.Constant(Tensor::FromList({800.0}));
  CHECK_THROWS_AS(ops::Exp(x), Error);
  try {
    ops::Exp(x);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
  }
}

TEST_CASE("every primitive matches central differences") {
  for (const auto& c : tfssl::testing::PrimitiveCases()) {
    CAPTURE(c.name);
    const auto r = CheckGradients(c.fn, c.leaves);
    CAPTURE(r.rel_err);
    CHECK(r.pass);
  }
}

TEST_CASE("backward of summed copies equals the sum of backwards") {
  std::mt19937_64 rng(3);
  const Tensor w = RandomTensor({3, 4}, rng);
  const Tensor x = RandomTensor({2, 3}, rng);
  auto loss = [&](Graph& g, Var p) { return ops::Sum(ops::Tanh(ops::MatMul(g.Constant(x), p))); };
  Graph g1;
  Var p1 = g1.Param("w", w);
  const Tensor single = g1.Backward(loss(g1, p1)).at("w");
  Graph g2;
  Var p2 = g2.Param("w", w);
  const Tensor doubled = g2.Backward(ops::Add(loss(g2, p2), loss(g2, p2))).at("w");
  for (std::size_t i = 0; i < single.size(); ++i)
    CHECK(doubled[i] == doctest::Approx(2.0 * single[i]).epsilon(1e-14));
}

TEST_CASE("forward is bit-reproducible") {
  std::mt19937_64 rng(8);
  const Tensor x = RandomTensor({2, 9, 3}, rng), w = RandomTensor({3, 3, 5}, rng);
  auto run = [&] {
    Graph g(false);
    return ops::Silu(ops::Conv1d(g.Constant(x), g.Constant(w), 2, ops::Padding::kSame)).value();
  };
  CHECK(run().storage() == run().storage());
}

TEST_CASE("rms_norm normalises each row") {
  Graph g(false);
  Var y = ops::RmsNorm(g.Constant(Tensor({2, 2}, std::vector<double>{3, 4, -1, 1})), 0.0);
  CHECK(y.value()[0] == doctest::Approx(3.0 / std::sqrt(12.5)));
  CHECK(y.value()[3] == doctest::Approx(1.0));
}

TEST_CASE("adamw examples") {
  TensorMap params{{"p", Tensor::FromList({1.0})}};
  auto st = OptimState::Create({.lr = 1e-3, .weight_decay = 0.0}, {});
  AdamWStep(st, params, {{"p", Tensor::FromList({0.0})}});
  CHECK(params["p"][0] == 1.0);

  st = OptimState::Create({.lr = 1e-3, .weight_decay = 0.01}, {});
  AdamWStep(st, params, {{"p", Tensor::FromList({0.0})}});
  CHECK(params["p"][0] == doctest::Approx(0.99999).epsilon(1e-12));

  // One step from p = 0 with g = 1: m_hat = 1, v_hat = 1.
  TensorMap q{{"p", Tensor::FromList({0.0})}};
  st = OptimState::Create({}, {});
  AdamWStep(st, q, {{"p", Tensor::FromList({1.0})}});
  CHECK(q["p"][0] == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(st.step == 1);

  TensorMap bad{{"p", Tensor::FromList({0.0, 1.0})}};
  CHECK_THROWS_AS(AdamWStep(st, bad, {{"p", Tensor::FromList({1.0})}}), Error);
}

TEST_CASE("adamw matches a hand-rolled two-step reference") {
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.01;
  double p = 0.5, m = 0, v = 0;
  const double gs[] = {0.3, -0.7};
  TensorMap params{{"p", Tensor::FromList({0.5})}};
  auto st = OptimState::Create({}, {});
  for (int t = 1; t <= 2; ++t) {
    const double g = gs[t - 1];
    p -= lr * wd * p;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    p -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    AdamWStep(st, params, {{"p", Tensor::FromList({g})}});
  }
  CHECK(params["p"][0] == doctest::Approx(p).epsilon(1e-14));
}

TEST_CASE("steplr examples") {
  auto st = OptimState::Create({.lr = 1e-3}, {.step_size = 30, .gamma = 0.5});
  CHECK(StepLr(st, 0) == doctest::Approx(1e-3));
  CHECK(StepLr(st, 29) == doctest::Approx(1e-3));
  CHECK(StepLr(st, 30) == doctest::Approx(5e-4));
  CHECK(StepLr(st, 65) == doctest::Approx(2.5e-4));
  CHECK(st.lr == doctest::Approx(2.5e-4));
}

TEST_CASE("checkpoint container round-trips parameters and optimizer state") {
  std::mt19937_64 rng(1);
  TensorMap t{{"b", RandomTensor({3}, rng)}, {"a.w", RandomTensor({2, 2, 2}, rng)},
              {"s", Tensor::Scalar(4.0)}};
  auto st = OptimState::Create({.lr = 2e-3}, {.step_size = 7, .gamma = 0.25});
  AdamWStep(st, t, {{"b", RandomTensor({3}, rng)}});
  ExportOptimState(st, t);

  std::stringstream ss;
  WriteTensors(ss, t);
  const std::string bytes = ss.str();
  TensorMap back = ReadTensors(ss);
  CHECK(back.size() == t.size());
  for (const auto& [name, v] : t) {
    CHECK(back.at(name).shape() == v.shape());
    CHECK(back.at(name).storage() == v.storage());
  }
  std::stringstream again;
  WriteTensors(again, back);
  CHECK(again.str() == bytes);

  const OptimState restored = ImportOptimState(back);
  CHECK(restored.step == st.step);
  CHECK(restored.base_lr == st.base_lr);
  CHECK(restored.schedule.step_size == 7);
  CHECK(restored.m.at("b").storage() == st.m.at("b").storage());
  CHECK(restored.v.at("b").storage() == st.v.at("b").storage());

  // Records are in name order, so the optimizer state comes first; the
  // parameters alone start with u32 name length 3, "a.w", u32 rank 3.
  CHECK(bytes.substr(4, 9) == "__optim__");
  std::stringstream plain;
  WriteTensors(plain, TensorMap{{"a.w", t.at("a.w")}, {"b", t.at("b")}});
  const std::string pb = plain.str();
  CHECK(static_cast<unsigned char>(pb[0]) == 3);
  CHECK(pb.substr(4, 3) == "a.w");
  CHECK(static_cast<unsigned char>(pb[7]) == 3);
}

TEST_CASE("truncated checkpoint is rejected") {
  TensorMap t{{"x", Tensor({4}, 1.0)}};
  std::stringstream ss;
  WriteTensors(ss, t);
  std::string bytes = ss.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(ReadTensors(cut), Error);
}
