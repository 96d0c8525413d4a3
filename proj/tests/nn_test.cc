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

#include "gvae/nn.h"

#include <gtest/gtest.h>

#include <cmath>

#include "gvae/error.h"
#include "test_util.h"

namespace gvae {
namespace {

TEST(AdamTest, FirstStepMovesByLearningRate) {
  ParameterSet params;
  Parameter& p = params.Add("w", Tensor::Scalar(0.0));
  p.var.mutable_value();
  Sum(p.var).Backward();  // gradient 1
  AdamStep(params, {.learning_rate = 1e-4});
  EXPECT_NEAR(p.var.value()[0], -1e-4, 1e-12);
  EXPECT_EQ(p.step, 1);
  EXPECT_FALSE(p.var.has_grad());
}

TEST(AdamTest, ZeroGradientLeavesParameter) {
  ParameterSet params;
  Parameter& p = params.Add("w", Tensor::Scalar(0.25));
  MulScalar(Sum(p.var), 0.0).Backward();
  AdamStep(params, {});
  EXPECT_EQ(p.var.value()[0], 0.25);
}

TEST(AdamTest, MissingGradientNamesParameter) {
  ParameterSet params;
  Parameter& a = params.Add("a", Tensor::Scalar(1.0));
  params.Add("lonely", Tensor::Scalar(1.0));
  Sum(a.var).Backward();
  try {
    AdamStep(params, {});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingGradient);
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
}

TEST(AdamTest, QuadraticBowlMatchesReferenceAdam) {
  ParameterSet params;
  Parameter& p = params.Add("w", Tensor::Scalar(0.0));
  // Reference scalar Adam, written out independently.
  double w = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 500; ++t) {
    Square(AddScalar(p.var, -3.0)).Backward();
    AdamStep(params, {.learning_rate = 0.1});
    const double g = 2.0 * (w - 3.0);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    w -= 0.1 * (m / (1 - std::pow(0.9, t))) /
         (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  EXPECT_NEAR(p.var.value()[0], w, 1e-9);
  EXPECT_LT(std::abs(p.var.value()[0] - 3.0), 0.05);
  EXPECT_EQ(p.step, 500);
}

TEST(AdamTest, LearningRateScale) {
  ParameterSet params;
  Parameter& p = params.Add("w", Tensor::Scalar(0.0), 10.0);
  Sum(p.var).Backward();
  AdamStep(params, {.learning_rate = 1e-4});
  EXPECT_NEAR(p.var.value()[0], -1e-3, 1e-10);
}

TEST(ClipTest, ScalesJointNormOnlyWhenAboveLimit) {
  ParameterSet params;
  Parameter& a = params.Add("a", Tensor::Scalar(0.0));
  Parameter& b = params.Add("b", Tensor::Scalar(0.0));
  Add(MulScalar(a.var, 3.0), MulScalar(b.var, 4.0)).Backward();
  EXPECT_DOUBLE_EQ(ClipGradientNorm(params, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(a.var.grad()[0], 3.0);
  EXPECT_DOUBLE_EQ(ClipGradientNorm(params, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(a.var.grad()[0], 0.6);
  EXPECT_DOUBLE_EQ(b.var.grad()[0], 0.8);
}

TEST(ParameterSetTest, MomentsMatchShapesAndSnapshot) {
  ParameterSet params;
  Parameter& p = params.Add("m", Tensor(Shape{2, 3}, 0.1));
  EXPECT_EQ(p.first_moment.shape(), p.var.shape());
  EXPECT_EQ(p.second_moment.shape(), p.var.shape());
  EXPECT_THROW(params.Add("m", Tensor::Scalar(0.0)), Error);
  const auto snap = params.Snapshot();
  p.var.mutable_value().Fill(5.0);
  params.Restore(snap);
  EXPECT_EQ(p.var.value()[4], 0.1);
  params.RoundToFloat();
  EXPECT_EQ(p.var.value()[4], static_cast<double>(0.1f));
  EXPECT_EQ(params.CountElements(), 6);
}

TEST(LayerSpecTest, Validation) {
  EXPECT_THROW(ConvSpec(0, 3, 3, 1).Validate(), Error);
  EXPECT_THROW(ConvSpec(3, 3, 0, 1).Validate(), Error);
  EXPECT_THROW(ConvSpec(3, 3, 3, 0).Validate(), Error);
  EXPECT_NO_THROW(DeconvSpec(3, 3, 5, 2).Validate());
}

TEST(SequentialTest, InitializationAndShapes) {
  std::mt19937_64 rng(1);
  ParameterSet params;
  Sequential net(params, "enc",
                 {ConvSpec(3, 8, 5, 2), GdnSpec(8, false), ConvSpec(8, 4, 5, 2)},
                 rng);
  EXPECT_EQ(net.DownsampleFactor(), 4);
  const Var y = net.Forward(Var(Tensor(Shape{1, 3, 16, 12})));
  EXPECT_EQ(y.shape(), Shape({1, 4, 4, 3}));
  const Tensor& w = params.Get("enc.0.w").var.value();
  const double bound = std::sqrt(3.0 / (3 * 25));
  for (double v : w.data()) EXPECT_LE(std::abs(v), bound);
  const Tensor beta = GdnBetaFromParam(params.Get("enc.1.beta").var).value();
  const Tensor gamma = GdnGammaFromParam(params.Get("enc.1.gamma").var).value();
  for (double v : beta.data()) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_NEAR(gamma[0], 0.1, 1e-12);
  EXPECT_NEAR(gamma[1], 0.0, 1e-12);
  const GdnFloorReport rep = net.FloorReport();
  EXPECT_EQ(rep.beta_total, 8);
  EXPECT_FALSE(rep.beta_warning());
}

TEST(SequentialTest, FloorReportFlagsCollapsedBeta) {
  std::mt19937_64 rng(2);
  ParameterSet params;
  Sequential net(params, "g", {GdnSpec(4, false)}, rng);
  params.Get("g.0.beta").var.mutable_value().Fill(0.0);
  EXPECT_TRUE(net.FloorReport().beta_warning());
  const Tensor beta = GdnBetaFromParam(params.Get("g.0.beta").var).value();
  for (double v : beta.data()) EXPECT_GT(v, 0.0);
}

}  // namespace
}  // namespace gvae
