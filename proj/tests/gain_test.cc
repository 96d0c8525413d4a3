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

#include "gvae/gain.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "gvae/error.h"
#include "test_util.h"

namespace gvae {
namespace {

GainUnitPair MakePair(int c, int n, std::mt19937_64& rng, bool constant_product) {
  GainUnitPair p;
  p.gain = RandomTensor({c, n}, rng, 0.2, 5.0);
  p.inverse_gain = RandomTensor({c, n}, rng, 0.2, 5.0);
  if (constant_product) {
    const Tensor cvec = RandomTensor({c}, rng, 0.5, 3.0);
    for (int i = 0; i < c; ++i) {
      for (int s = 0; s < n; ++s) p.inverse_gain[i * n + s] = cvec[i] / p.gain[i * n + s];
    }
  }
  for (int s = 0; s < n; ++s) p.lagrange.push_back(1.0 / (s + 1));
  return p;
}

bool BitEqual(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

TEST(GainTest, IdentityAndScalarExamples) {
  std::mt19937_64 rng(1);
  const Tensor y = RandomTensor({1, 3, 4, 4}, rng);
  const Tensor same = ApplyGain(y, {1.0, 1.0, 1.0});
  for (int64_t i = 0; i < y.numel(); ++i) EXPECT_EQ(same[i], y[i]);

  Tensor two(Shape{1, 2, 2, 2}, 2.0);
  const Tensor six = ApplyGain(two, {3.0, 1.0});
  EXPECT_EQ(six.at(0, 0, 1, 1), 6.0);
  EXPECT_EQ(six.at(0, 1, 1, 1), 2.0);
  const Tensor back =
      ApplyInverseGain(Var(six), Var(Tensor(Shape{2}, 0.5))).value();
  EXPECT_EQ(back.at(0, 0, 0, 0), 3.0);
  EXPECT_THROW(ApplyGain(y, {1.0, 2.0}), Error);
}

TEST(GainTest, GainThenInverseRecoversInput) {
  std::mt19937_64 rng(2);
  const Tensor y = RandomTensor({1, 5, 3, 3}, rng);
  const Tensor m = RandomTensor({5}, rng, 0.1, 10.0);
  Tensor minv(Shape{5});
  for (int i = 0; i < 5; ++i) minv[i] = 1.0 / m[i];
  const Tensor r = ApplyInverseGain(ApplyGain(Var(y), Var(m)), Var(minv)).value();
  for (int64_t i = 0; i < y.numel(); ++i) EXPECT_NEAR(r[i], y[i], 1e-12);
}

TEST(GainTest, GainIsDifferentiable) {
  std::mt19937_64 rng(3);
  auto f = [](const std::vector<Var>& v) {
    return WeightedSum(ApplyInverseGain(ApplyGain(v[0], v[1]), v[2]));
  };
  EXPECT_LT(GradientError(f, {RandomTensor({2, 3, 2, 2}, rng),
                              RandomTensor({3}, rng, 0.5, 2.0),
                              RandomTensor({3}, rng, 0.5, 2.0)}),
            1e-4);
}

TEST(InterpolateTest, GeometricMean) {
  GainUnitPair p;
  p.gain = Tensor(Shape{1, 2}, std::vector<double>{2.0, 8.0});
  p.inverse_gain = Tensor(Shape{1, 2}, std::vector<double>{3.0, 1.5});
  p.lagrange = {0.1, 0.01};
  const GainVectors v = InterpolatePair(p, {0, 0.5});
  EXPECT_NEAR(v.gain[0], 4.0, 1e-15);
}

TEST(InterpolateTest, ProductExample) {
  GainUnitPair p;
  p.gain = Tensor(Shape{1, 2}, std::vector<double>{2.0, 4.0});
  p.inverse_gain = Tensor(Shape{1, 2}, std::vector<double>{3.0, 1.5});
  p.lagrange = {0.1, 0.01};
  const GainVectors v = InterpolatePair(p, {0, 0.5});
  EXPECT_NEAR(v.gain[0], std::sqrt(8.0), 1e-12);
  EXPECT_NEAR(v.inverse_gain[0], std::sqrt(4.5), 1e-12);
  EXPECT_NEAR(v.gain[0] * v.inverse_gain[0], 6.0, 1e-12);
}

TEST(InterpolateTest, EndpointsAreBitExact) {
  std::mt19937_64 rng(4);
  const GainUnitPair p = MakePair(16, 6, rng, false);
  for (int s = 0; s + 1 < 6; ++s) {
    const GainVectors lo = InterpolatePair(p, {s, 0.0});
    const GainVectors hi = InterpolatePair(p, {s, 1.0});
    for (int i = 0; i < 16; ++i) {
      EXPECT_TRUE(BitEqual(lo.gain[i], p.gain[i * 6 + s]));
      EXPECT_TRUE(BitEqual(lo.inverse_gain[i], p.inverse_gain[i * 6 + s]));
      EXPECT_TRUE(BitEqual(hi.gain[i], p.gain[i * 6 + s + 1]));
      EXPECT_TRUE(BitEqual(hi.inverse_gain[i], p.inverse_gain[i * 6 + s + 1]));
    }
  }
}

TEST(InterpolateTest, PropertiesOverRandomPairs) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ul(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const GainUnitPair p = MakePair(8, 4, rng, true);
    const int s = static_cast<int>(rng() % 3);
    const double l1 = ul(rng), l2 = ul(rng);
    const GainVectors a = InterpolatePair(p, {s, std::min(l1, l2)});
    const GainVectors b = InterpolatePair(p, {s, std::max(l1, l2)});
    for (int i = 0; i < 8; ++i) {
      const double c = p.gain[i * 4 + s] * p.inverse_gain[i * 4 + s];
      // Product preservation.
      EXPECT_NEAR(a.gain[i] * a.inverse_gain[i] / c, 1.0, 1e-10);
      // Positivity closure.
      EXPECT_GT(a.gain[i], 0.0);
      EXPECT_GT(a.inverse_gain[i], 0.0);
      // Monotone in l.
      const double mt = p.gain[i * 4 + s], mr = p.gain[i * 4 + s + 1];
      if (mt < mr && l1 != l2) EXPECT_LT(a.gain[i], b.gain[i]);
      if (mt > mr && l1 != l2) EXPECT_GT(a.gain[i], b.gain[i]);
    }
  }
}

TEST(InterpolateTest, RejectsNonPositiveAndOutOfRange) {
  std::mt19937_64 rng(6);
  GainUnitPair p = MakePair(2, 3, rng, false);
  EXPECT_THROW(InterpolatePair(p, {2, 0.5}), Error);
  EXPECT_THROW(InterpolatePair(p, {0, 1.5}), Error);
  EXPECT_NO_THROW(InterpolatePair(p, {0, 1.5}, /*allow_extrapolation=*/true));
  p.gain[1] = 0.0;
  try {
    InterpolatePair(p, {0, 0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomain);
  }
}

TEST(SelectorTest, MappingFromQ) {
  RateSelector sel = SelectorFromQ(0.0, 6);
  EXPECT_EQ(sel.s, 0);
  EXPECT_EQ(sel.l, 0.0);
  sel = SelectorFromQ(2.5, 6);
  EXPECT_EQ(sel.s, 2);
  EXPECT_EQ(sel.l, 0.5);
  sel = SelectorFromQ(5.0, 6);
  EXPECT_EQ(sel.s, 4);
  EXPECT_EQ(sel.l, 1.0);
  EXPECT_THROW(SelectorFromQ(7.0, 6), Error);
  sel = SelectorFromQ(7.0, 6, true);
  EXPECT_EQ(sel.s, 4);
  EXPECT_EQ(sel.l, 3.0);
  EXPECT_THROW(SelectorFromQ(-0.1, 6), Error);
}

TEST(ProductReportTest, Cases) {
  std::mt19937_64 rng(7);
  const GainUnitPair exact = MakePair(6, 5, rng, true);
  for (double d : ProductConstancyReport(exact)) EXPECT_NEAR(d, 0.0, 1e-12);
  const GainUnitPair single = MakePair(4, 1, rng, false);
  for (double d : ProductConstancyReport(single)) EXPECT_EQ(d, 0.0);
  GainUnitPair drift = exact;
  drift.inverse_gain[0] *= 1.5;  // channel 0, s = 0
  EXPECT_NEAR(ProductConstancyReport(drift)[0], 0.5, 1e-12);
}

TEST(GainUnitTest, HardModeKeepsProductExact) {
  ParameterSet params;
  GainUnit unit(params, "gain", 4, 3, GainMode::kHard);
  std::mt19937_64 rng(8);
  params.Get("gain.log_gain").var.mutable_value() = RandomTensor({4, 3}, rng);
  params.Get("gain.log_product").var.mutable_value() = RandomTensor({4}, rng);
  const GainUnitPair p = unit.Values({0.3, 0.2, 0.1});
  EXPECT_NO_THROW(p.Validate());
  for (double d : ProductConstancyReport(p)) EXPECT_LT(d, 1e-14);
  EXPECT_EQ(unit.ProductPenalty().value()[0], 0.0);
  const GainVectors v = InterpolatePair(p, {1, 0.3});
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(v.gain[i] * v.inverse_gain[i],
                std::exp(params.Get("gain.log_product").var.value()[i]), 1e-10);
  }
}

TEST(GainUnitTest, StartsAtOnesAndSoftPenaltyHasGradient) {
  ParameterSet params;
  GainUnit unit(params, "g", 3, 4, GainMode::kSoft);
  const GainUnitPair p = unit.Values({4, 3, 2, 1});
  for (double v : p.gain.data()) EXPECT_EQ(v, 1.0);
  for (double v : p.inverse_gain.data()) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(unit.ProductPenalty().value()[0], 0.0);

  std::mt19937_64 rng(9);
  auto f = [](const std::vector<Var>& v) {
    ParameterSet ps;
    GainUnit u(ps, "g", 3, 4, GainMode::kSoft);
    ps.Get("g.log_gain").var = v[0];
    ps.Get("g.log_inverse_gain").var = v[1];
    return u.ProductPenalty();
  };
  EXPECT_LT(GradientError(f, {RandomTensor({3, 4}, rng), RandomTensor({3, 4}, rng)}),
            1e-4);
}

TEST(GainUnitTest, IndexOutOfRange) {
  ParameterSet params;
  GainUnit unit(params, "g", 2, 3, GainMode::kHard);
  try {
    unit.Gain(3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndex);
  }
}

TEST(PairTest, ValidateInvariants) {
  std::mt19937_64 rng(10);
  GainUnitPair p = MakePair(3, 3, rng, false);
  EXPECT_NO_THROW(p.Validate());
  p.lagrange = {0.1, 0.2, 0.05};
  EXPECT_THROW(p.Validate(), Error);
  p = MakePair(3, 3, rng, false);
  p.lagrange.pop_back();
  EXPECT_THROW(p.Validate(), Error);
  p = MakePair(3, 3, rng, false);
  p.inverse_gain[2] = -1.0;
  EXPECT_THROW(p.Validate(), Error);
}

}  // namespace
}  // namespace gvae
