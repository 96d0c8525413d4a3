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

#include "gvae/quantizer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gvae/error.h"
#include "test_util.h"

namespace gvae {
namespace {

double ZeroDither(uint64_t, uint64_t, uint64_t) { return 0.0; }

TEST(QuantizerTest, RoundingConvention) {
  EXPECT_EQ(RoundHalfAway(1.4), 1.0);
  EXPECT_EQ(RoundHalfAway(-0.5), -1.0);
  EXPECT_EQ(RoundHalfAway(0.5), 1.0);
  EXPECT_EQ(RoundHalfAway(2.5), 3.0);
  const Var x(Tensor(Shape{3}, std::vector<double>{1.4, -0.5, 2.6}));
  const Tensor q = Quantize(x, {}, Phase::kInference).value();
  EXPECT_EQ(q[0], 1.0);
  EXPECT_EQ(q[1], -1.0);
  EXPECT_EQ(q[2], 3.0);
}

TEST(QuantizerTest, ZeroDitherUniversalEqualsRound) {
  std::mt19937_64 rng(1);
  const Var x(RandomTensor({1000}, rng, -20.0, 20.0));
  QuantizerSpec u{QuantizerMode::kUniversal, 42, kLatentStream, &ZeroDither};
  const Tensor a = Quantize(x, u, Phase::kInference).value();
  const Tensor b = Quantize(x, {}, Phase::kInference).value();
  for (int64_t i = 0; i < a.numel(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(QuantizerTest, NoiseStatistics) {
  const int64_t n = 1000000;
  const Var x(Tensor(Shape{n}, 0.25));
  QuantizerSpec spec{QuantizerMode::kNoise, 3};
  const Tensor q = Quantize(x, spec, Phase::kTraining).value();
  double mean = 0.0;
  for (int64_t i = 0; i < n; ++i) mean += q[i] - 0.25;
  mean /= n;
  double var = 0.0;
  for (int64_t i = 0; i < n; ++i) var += (q[i] - 0.25 - mean) * (q[i] - 0.25 - mean);
  var /= n;
  EXPECT_GT(mean, -0.002);
  EXPECT_LT(mean, 0.002);
  EXPECT_NEAR(var, 1.0 / 12.0, 0.001);
}

TEST(QuantizerTest, NoiseIsRejectedAtInference) {
  const Var x(Tensor(Shape{4}));
  try {
    Quantize(x, {QuantizerMode::kNoise, 1}, Phase::kInference);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(QuantizerTest, NoiseGradientPassesThrough) {
  std::mt19937_64 rng(2);
  auto f = [](const std::vector<Var>& v) {
    return WeightedSum(Quantize(v[0], {QuantizerMode::kNoise, 9}, Phase::kTraining));
  };
  EXPECT_LT(GradientError(f, {RandomTensor({2, 2, 3, 3}, rng)}), 1e-6);
}

TEST(QuantizerTest, UniversalErrorBoundedForEverySeed) {
  std::mt19937_64 rng(3);
  const Var x(RandomTensor({4096}, rng, -100.0, 100.0));
  for (uint64_t seed = 0; seed < 64; ++seed) {
    const Tensor q =
        Quantize(x, {QuantizerMode::kUniversal, seed}, Phase::kInference).value();
    for (int64_t i = 0; i < q.numel(); ++i) {
      ASSERT_LE(std::abs(q[i] - x.value()[i]), 0.5 + 1e-12);
    }
  }
}

TEST(QuantizerTest, DitherIsReproducibleAndOnGrid) {
  for (uint64_t i = 0; i < 1000; ++i) {
    const double d = DitherAt(77, kLatentStream, i);
    EXPECT_EQ(d, DitherAt(77, kLatentStream, i));
    EXPECT_GT(d, -0.5);
    EXPECT_LT(d, 0.5);
    const double scaled = (d + 0.5) * kDitherSteps - 0.5;
    EXPECT_EQ(scaled, std::round(scaled));
  }
  int differ = 0;
  for (uint64_t i = 0; i < 100; ++i) {
    differ += DitherAt(77, kLatentStream, i) != DitherAt(77, kHyperStream, i);
  }
  EXPECT_GT(differ, 90);
}

TEST(QuantizerTest, ParseModeNames) {
  EXPECT_EQ(ParseQuantizerMode("universal"), QuantizerMode::kUniversal);
  EXPECT_STREQ(QuantizerModeName(QuantizerMode::kRound), "round");
  EXPECT_THROW(ParseQuantizerMode("nearest"), Error);
}

}  // namespace
}  // namespace gvae
