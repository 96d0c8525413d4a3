// Copyright 2026 The gvae Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gvae/autograd.h"

#include <gtest/gtest.h>

#include <random>

#include "gvae/error.h"
#include "gvae/nn.h"
#include "test_util.h"

namespace gvae {
namespace {

constexpr double kTol = 1e-4;

TEST(TensorTest, ShapeAndAccess) {
  Tensor t(Shape{2, 3, 4, 5});
  EXPECT_EQ(t.numel(), 120);
  t.at(1, 2, 3, 4) = 7.0;
  EXPECT_EQ(t[119], 7.0);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>(3)), Error);
  EXPECT_THROW(t.Reshaped(Shape{7}), Error);
}

TEST(ConvTest, OnesKernelCenterIsNine) {
  Var x(Tensor(Shape{1, 1, 3, 3}, 1.0));
  Var w(Tensor(Shape{1, 1, 3, 3}, 1.0));
  Var b(Tensor(Shape{1}));
  const Var y = Conv2d(x, w, b, 1, 1);
  ASSERT_EQ(y.shape(), Shape({1, 1, 3, 3}));
  EXPECT_EQ(y.value().at(0, 0, 1, 1), 9.0);
  EXPECT_EQ(y.value().at(0, 0, 0, 0), 4.0);
}

TEST(ConvTest, IdentityKernel) {
  std::mt19937_64 rng(1);
  const Tensor x = RandomTensor({2, 3, 7, 6}, rng);
  Tensor w(Shape{3, 3, 3, 3});
  for (int c = 0; c < 3; ++c) w.at(c, c, 1, 1) = 1.0;
  const Var y = Conv2d(Var(x), Var(w), Var(Tensor(Shape{3})), 1, 1);
  ASSERT_EQ(y.shape(), x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.value()[i], x[i]);
}

TEST(ConvTest, ShapeMismatchIsRejected) {
  Var x(Tensor(Shape{1, 2, 4, 4}));
  Var w(Tensor(Shape{1, 3, 3, 3}));
  EXPECT_THROW(Conv2d(x, w, Var(Tensor(Shape{1})), 1, 1), Error);
  try {
    Conv2d(x, w, Var(Tensor(Shape{1})), 1, 1);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
  }
}

TEST(ConvTest, WeightGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const Tensor x = RandomTensor({1, 2, 8, 8}, rng);
  const Tensor w = RandomTensor({3, 2, 3, 3}, rng);
  const Tensor b = RandomTensor({3}, rng);
  auto f = [&](const std::vector<Var>& v) {
    return Sum(Conv2d(Var(x), v[0], v[1], 1, 1));
  };
  EXPECT_LT(GradientError(f, {w, b}), kTol);
  auto g = [](const std::vector<Var>& v) {
    return WeightedSum(Conv2d(v[0], v[1], v[2], 2, 2));
  };
  EXPECT_LT(GradientError(g, {x, RandomTensor({3, 2, 5, 5}, rng), b}), kTol);
}

TEST(ConvTest, TransposedGradientAndShape) {
  std::mt19937_64 rng(3);
  const Tensor x = RandomTensor({2, 3, 4, 5}, rng);
  const Tensor w = RandomTensor({3, 2, 5, 5}, rng);
  const Tensor b = RandomTensor({2}, rng);
  const Var y = ConvTranspose2d(Var(x), Var(w), Var(b), 2, 2, 1);
  EXPECT_EQ(y.shape(), Shape({2, 2, 8, 10}));
  auto f = [](const std::vector<Var>& v) {
    return WeightedSum(ConvTranspose2d(v[0], v[1], v[2], 2, 2, 1));
  };
  EXPECT_LT(GradientError(f, {x, w, b}), kTol);
}

TEST(ConvTest, TransposedIsAdjointOfConv) {
  // <conv(x), u> == <x, conv_transpose(u)> for matching geometry.
  std::mt19937_64 rng(4);
  const Tensor x = RandomTensor({1, 2, 8, 8}, rng);
  const Tensor w = RandomTensor({3, 2, 5, 5}, rng);
  const Tensor u = RandomTensor({1, 3, 4, 4}, rng);
  const Var zero_b3(Tensor(Shape{3}));
  const Var zero_b2(Tensor(Shape{2}));
  const Tensor cx = Conv2d(Var(x), Var(w), zero_b3, 2, 2).value();
  const Tensor tu = ConvTranspose2d(Var(u), Var(w), zero_b2, 2, 2, 1).value();
  double lhs = 0.0, rhs = 0.0;
  for (int64_t i = 0; i < cx.numel(); ++i) lhs += cx[i] * u[i];
  for (int64_t i = 0; i < x.numel(); ++i) rhs += x[i] * tu[i];
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(GdnTest, IdentityConfiguration) {
  std::mt19937_64 rng(5);
  const Tensor x = RandomTensor({1, 4, 3, 3}, rng);
  const Var beta(Tensor(Shape{4}, 1.0));
  const Var gamma(Tensor(Shape{4, 4}));
  for (bool inverse : {false, true}) {
    const Tensor y = Gdn(Var(x), beta, gamma, inverse).value();
    for (int64_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
  }
}

TEST(GdnTest, ForwardMatchesFormula) {
  std::mt19937_64 rng(6);
  const Tensor x = RandomTensor({1, 3, 2, 2}, rng);
  const Tensor beta = RandomTensor({3}, rng, 0.5, 1.5);
  const Tensor gamma = RandomTensor({3, 3}, rng, 0.0, 0.5);
  const Tensor y = Gdn(Var(x), Var(beta), Var(gamma), false).value();
  for (int i = 0; i < 3; ++i) {
    double d = beta[i];
    for (int j = 0; j < 3; ++j) d += gamma[i * 3 + j] * x.at(0, j, 1, 0) * x.at(0, j, 1, 0);
    EXPECT_NEAR(y.at(0, i, 1, 0), x.at(0, i, 1, 0) / std::sqrt(d), 1e-14);
  }
}

TEST(GdnTest, InverseRecoversInputWithDiagonalFreeGamma) {
  // With gamma = 0 the normalization is a per-channel scale and IGDN undoes
  // GDN exactly; a nonzero gamma couples the pass to the already-normalized
  // values, so the pair is only an approximate inverse in general.
  std::mt19937_64 rng(7);
  const Tensor x = RandomTensor({1, 4, 4, 4}, rng, -3.0, 3.0);
  const Var beta(RandomTensor({4}, rng, 0.2, 2.0));
  const Var gamma(Tensor(Shape{4, 4}));
  const Tensor y =
      Gdn(Gdn(Var(x), beta, gamma, false), beta, gamma, true).value();
  for (int64_t i = 0; i < x.numel(); ++i) {
    EXPECT_NEAR(y[i], x[i], 1e-6 * std::abs(x[i]) + 1e-15);
  }
}

TEST(GdnTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  const Tensor x = RandomTensor({1, 4, 4, 4}, rng);
  const Tensor beta = RandomTensor({4}, rng, 0.5, 1.5);
  const Tensor gamma = RandomTensor({4, 4}, rng, 0.0, 0.3);
  for (bool inverse : {false, true}) {
    auto f = [inverse](const std::vector<Var>& v) {
      return WeightedSum(Gdn(v[0], v[1], v[2], inverse));
    };
    EXPECT_LT(GradientError(f, {x, beta, gamma}), kTol) << inverse;
  }
}

TEST(GdnTest, ReparameterizationGradient) {
  std::mt19937_64 rng(9);
  const Tensor x = RandomTensor({1, 3, 3, 3}, rng);
  const Tensor pb = RandomTensor({3}, rng, 0.5, 1.5);
  const Tensor pg = RandomTensor({3, 3}, rng, 0.1, 0.5);
  auto f = [](const std::vector<Var>& v) {
    return WeightedSum(
        Gdn(v[0], GdnBetaFromParam(v[1]), GdnGammaFromParam(v[2]), false));
  };
  EXPECT_LT(GradientError(f, {x, pb, pg}), kTol);
}

TEST(ElementwiseTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(10);
  const Tensor a = RandomTensor({2, 3, 2, 2}, rng);
  const Tensor b = RandomTensor({2, 3, 2, 2}, rng);
  const Tensor pos = RandomTensor({2, 3, 2, 2}, rng, 0.5, 2.0);
  using Fn = std::function<Var(const std::vector<Var>&)>;
  const std::vector<std::pair<const char*, Fn>> cases = {
      {"add", [](auto& v) { return WeightedSum(Add(v[0], v[1])); }},
      {"sub", [](auto& v) { return WeightedSum(Sub(v[0], v[1])); }},
      {"mul", [](auto& v) { return WeightedSum(Mul(v[0], v[1])); }},
      {"scalar", [](auto& v) {
         return WeightedSum(MulScalar(AddScalar(v[0], 0.3), -2.0));
       }},
      {"exp", [](auto& v) { return WeightedSum(Exp(v[0])); }},
      {"tanh", [](auto& v) { return WeightedSum(Tanh(v[0])); }},
      {"sigmoid", [](auto& v) { return WeightedSum(Sigmoid(v[0])); }},
      {"softplus", [](auto& v) { return WeightedSum(Softplus(v[0])); }},
      {"square", [](auto& v) { return WeightedSum(Square(v[0])); }},
      {"mean", [](auto& v) { return Mean(Mul(v[0], v[1])); }},
      {"mse", [](auto& v) { return MeanSquaredError(v[0], v[1]); }},
      {"mulchannel", [](auto& v) {
         return WeightedSum(MulChannel(v[0], SelectColumn(v[1], 1)));
       }},
      {"slice", [](auto& v) { return WeightedSum(SliceChannels(v[0], 1, 3)); }},
      {"rows", [](auto& v) { return WeightedSum(ToChannelRows(v[0])); }},
  };
  for (const auto& [name, f] : cases) {
    std::vector<Tensor> in = {a, b};
    if (std::string(name) == "mulchannel") in = {a, RandomTensor({3, 2}, rng)};
    EXPECT_LT(GradientError(f, in), kTol) << name;
  }
  auto log_f = [](const std::vector<Var>& v) { return WeightedSum(Log(v[0])); };
  EXPECT_LT(GradientError(log_f, {pos}), kTol);
  // Away from the kinks, abs and relu are smooth.
  auto kink_f = [](const std::vector<Var>& v) {
    return WeightedSum(Add(Abs(v[0]), Relu(v[0])));
  };
  EXPECT_LT(GradientError(kink_f, {pos}), kTol);
}

TEST(ElementwiseTest, ChannelAffineAndRowScale) {
  std::mt19937_64 rng(11);
  const Tensor h = RandomTensor({2, 3, 5}, rng);
  const Tensor w = RandomTensor({2, 4, 3}, rng);
  const Tensor b = RandomTensor({2, 4}, rng);
  const Tensor a = RandomTensor({2, 4}, rng);
  auto f = [](const std::vector<Var>& v) {
    return WeightedSum(MulChannelRows(ChannelAffine(v[0], v[1], v[2]), v[3]));
  };
  EXPECT_LT(GradientError(f, {h, w, b, a}), kTol);
}

TEST(ElementwiseTest, LowerBoundLetsFlooredEntriesRecover) {
  Var x(Tensor(Shape{2}, std::vector<double>{-1.0, 2.0}), true);
  // Loss -sum(y) wants y to grow: the floored entry must receive gradient.
  MulScalar(Sum(LowerBound(x, 0.5)), -1.0).Backward();
  EXPECT_EQ(x.grad()[0], -1.0);
  EXPECT_EQ(x.grad()[1], -1.0);
  Var z(Tensor(Shape{2}, std::vector<double>{-1.0, 2.0}), true);
  Sum(LowerBound(z, 0.5)).Backward();
  EXPECT_EQ(z.grad()[0], 0.0);
  EXPECT_EQ(z.grad()[1], 1.0);
}

TEST(AutogradTest, SharedSubgraphAccumulates) {
  Var x(Tensor::Scalar(3.0), true);
  const Var y = Mul(x, x);
  Add(y, y).Backward();
  EXPECT_EQ(x.grad()[0], 12.0);
}

TEST(AutogradTest, NoGradGuardRecordsNothing) {
  Var x(Tensor::Scalar(3.0), true);
  {
    NoGradGuard guard;
    const Var y = Mul(x, x);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(Mul(x, x).requires_grad());
}

TEST(AutogradTest, DeterministicForwardBackward) {
  auto run = [] {
    std::mt19937_64 rng(12);
    ParameterSet params;
    Sequential net(params, "net",
                   {ConvSpec(3, 8, 5, 2), GdnSpec(8, false),
                    DeconvSpec(8, 3, 5, 2), GdnSpec(3, true)},
                   rng);
    const Tensor x = RandomTensor({2, 3, 8, 8}, rng);
    const Var out = net.Forward(Var(x));
    Sum(Square(out)).Backward();
    std::vector<double> all(out.value().data().begin(), out.value().data().end());
    for (size_t i = 0; i < params.size(); ++i) {
      for (double g : params[i].var.grad().data()) all.push_back(g);
    }
    return all;
  };
  EXPECT_EQ(run(), run());
}

TEST(AutogradTest, DeepStackStaysFinite) {
  std::mt19937_64 rng(13);
  ParameterSet params;
  std::vector<LayerSpec> specs;
  for (int i = 0; i < 5; ++i) {
    specs.push_back(ConvSpec(4, 4, 3, 1));
    specs.push_back(GdnSpec(4, i % 2 == 1));
  }
  Sequential net(params, "deep", specs, rng);
  const Tensor x = RandomTensor({1, 4, 8, 8}, rng, -50.0, 50.0);
  const Var out = net.Forward(Var(x, true));
  Sum(Square(out)).Backward();
  EXPECT_TRUE(out.value().AllFinite());
  for (size_t i = 0; i < params.size(); ++i) {
    EXPECT_TRUE(params[i].var.grad().AllFinite()) << params[i].name;
  }
}

}  // namespace
}  // namespace gvae
