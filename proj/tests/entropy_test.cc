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

#include "gvae/entropy.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gvae/error.h"
#include "gvae/nn.h"
#include "gvae/quantizer.h"
#include "test_util.h"

namespace gvae {
namespace {

// Makes every stage of the density linear with equal weights v, so the
// logit is 27 v^4 x and p(0) = tanh(27 v^4 / 4).
void MakeLogistic(ParameterSet& params, const std::string& prefix, double slope) {
  const double v = std::pow(slope / 27.0, 0.25);
  const double raw = std::log(std::expm1(v));
  for (int i = 0; i < 4; ++i) {
    params.Get(prefix + ".matrix." + std::to_string(i)).var.mutable_value().Fill(raw);
    params.Get(prefix + ".bias." + std::to_string(i)).var.mutable_value().Fill(0.0);
    if (i < 3) params.Get(prefix + ".factor." + std::to_string(i)).var.mutable_value().Fill(0.0);
  }
}

TEST(TotalBitsTest, ClosedForms) {
  const Var third(Tensor(Shape{9}, 1.0 / 3.0));
  EXPECT_NEAR(TotalBits(third).value()[0], 9.0 * std::log2(3.0), 1e-12);
  int64_t floored = -1;
  const Var tiny(Tensor(Shape{2}, std::vector<double>{0.0, 0.5}));
  EXPECT_NEAR(TotalBits(tiny, &floored).value()[0], 31.0, 1e-12);
  EXPECT_EQ(floored, 1);
}

TEST(FactorizedTest, HalfMassAtZeroCostsOneBit) {
  std::mt19937_64 rng(1);
  ParameterSet params;
  FactorizedModel model(params, "prior", 2, rng);
  MakeLogistic(params, "prior", 4.0 * std::atanh(0.5));
  const Var zeros(Tensor(Shape{1, 2, 3, 4}));
  EXPECT_NEAR(TotalBits(model.Likelihood(zeros)).value()[0], 24.0, 1e-9);
  const FactorizedDensity d = model.Snapshot();
  EXPECT_NEAR(d.Mass(1, 0.0), 0.5, 1e-12);
  EXPECT_NEAR(d.Cdf(0, 0.0), 0.5, 1e-12);
}

TEST(FactorizedTest, DensityIsMonotoneAndNormalized) {
  std::mt19937_64 rng(2);
  ParameterSet params;
  FactorizedModel model(params, "prior", 4, rng);
  // Perturb away from the initialization, including the tanh factors.
  for (size_t i = 0; i < params.size(); ++i) {
    for (double& v : params[i].var.mutable_value().data()) {
      v += std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    }
  }
  const FactorizedDensity d = model.Snapshot();
  for (int c = 0; c < 4; ++c) {
    double prev = -1.0, total = 0.0;
    for (double x = -60.0; x <= 60.0; x += 0.25) {
      const double f = d.Cdf(c, x);
      EXPECT_GT(f, prev - 1e-15);
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
      prev = f;
    }
    for (int v = -50; v <= 50; ++v) {
      EXPECT_GT(d.Mass(c, v), 0.0);
      total += d.Mass(c, v);
    }
    EXPECT_LE(total, 1.0 + 1e-12);
    EXPECT_NEAR(d.Cdf(c, d.Quantile(c, 0.3)), 0.3, 1e-9);
  }
}

TEST(FactorizedTest, FittedDensityHoldsNearlyAllMass) {
  std::mt19937_64 rng(7);
  ParameterSet params;
  FactorizedModel model(params, "prior", 2, rng);
  std::exponential_distribution<double> magnitude(1.0 / 3.0);
  Tensor samples(Shape{1, 2, 16, 16});
  for (double& v : samples.data()) v = (rng() & 1 ? 1.0 : -1.0) * magnitude(rng);
  for (int step = 0; step < 300; ++step) {
    params.ZeroGrad();
    Var bits = TotalBits(model.Likelihood(
        Quantize(Var(samples), {QuantizerMode::kNoise, static_cast<uint64_t>(step)},
                 Phase::kTraining)));
    bits.Backward();
    AdamStep(params, {.learning_rate = 1e-2});
  }
  const FactorizedDensity d = model.Snapshot();
  for (int c = 0; c < 2; ++c) {
    double total = 0.0;
    for (int v = -50; v <= 50; ++v) total += d.Mass(c, v);
    EXPECT_GE(total, 0.999);
  }
}

TEST(FactorizedTest, LikelihoodMatchesSnapshot) {
  std::mt19937_64 rng(3);
  ParameterSet params;
  FactorizedModel model(params, "prior", 3, rng);
  const Tensor y = RandomTensor({2, 3, 2, 2}, rng, -4.0, 4.0);
  const Tensor l = model.Likelihood(Var(y)).value();
  const FactorizedDensity d = model.Snapshot();
  for (int64_t n = 0; n < 2; ++n) {
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t k = 0; k < 4; ++k) {
        const double v = y[(n * 3 + c) * 4 + k];
        EXPECT_NEAR(l[c * 8 + n * 4 + k], d.Mass(static_cast<int>(c), v), 1e-13);
      }
    }
  }
}

TEST(FactorizedTest, RateGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  ParameterSet params;
  FactorizedModel model(params, "prior", 2, rng);
  const Tensor y = RandomTensor({1, 2, 3, 3}, rng, -3.0, 3.0);
  // Rate with respect to the noisy latent (noise frozen by the seed).
  auto rate_y = [&](const std::vector<Var>& v) {
    return TotalBits(model.Likelihood(
        Quantize(v[0], {QuantizerMode::kNoise, 5}, Phase::kTraining)));
  };
  EXPECT_LT(GradientError(rate_y, {y}), 1e-4);
  // And with respect to every density parameter.
  std::vector<Tensor> values;
  for (size_t i = 0; i < params.size(); ++i) values.push_back(params[i].var.value());
  auto rate_p = [&](const std::vector<Var>& v) {
    for (size_t i = 0; i < params.size(); ++i) params[i].var = v[i];
    return TotalBits(model.Likelihood(Var(y)));
  };
  EXPECT_LT(GradientError(rate_p, values), 1e-4);
}

TEST(GaussianTest, ReferenceValues) {
  EXPECT_NEAR(-std::log2(GaussianMass(0.0, 0.0, 1.0)), 1.384867, 1e-6);
  EXPECT_NEAR(GaussianMass(0.0, 0.0, 1.0), 0.382925, 1e-6);
  EXPECT_LT(-std::log2(GaussianMass(0.0, 0.0, kScaleFloor)), 1e-12);
  for (double s : {0.3, 1.0, 4.0}) {
    EXPECT_EQ(GaussianMass(3.0, 0.0, s), GaussianMass(-3.0, 0.0, s));
  }
  // Far tail stays representable instead of cancelling to zero.
  EXPECT_GT(GaussianMass(30.0, 0.0, 1.0), 0.0);
}

TEST(GaussianTest, LikelihoodGradient) {
  std::mt19937_64 rng(5);
  const Tensor y = RandomTensor({1, 2, 3, 3}, rng, -3.0, 3.0);
  const Tensor mu = RandomTensor({1, 2, 3, 3}, rng, -1.0, 1.0);
  const Tensor sigma = RandomTensor({1, 2, 3, 3}, rng, 0.3, 3.0);
  auto f = [](const std::vector<Var>& v) {
    return TotalBits(GaussianLikelihood(v[0], v[1], v[2]));
  };
  EXPECT_LT(GradientError(f, {y, mu, sigma}), 1e-4);
}

TEST(ScaleTableTest, LevelsAndTables) {
  const ScaleTable& t = GlobalScaleTable();
  EXPECT_NEAR(t.level(0), kScaleFloor, 1e-15);
  EXPECT_NEAR(t.level(ScaleTable::kLevels - 1), ScaleTable::kMaxScale, 1e-9);
  EXPECT_EQ(t.Index(kScaleFloor), 0);
  EXPECT_EQ(t.Index(1e-9), 0);
  EXPECT_EQ(t.Index(1e9), ScaleTable::kLevels - 1);
  EXPECT_EQ(t.Index(t.level(100)), 100);
  for (int i : {0, 60, 128, 255}) {
    for (int o : {-128, -37, 0, 128}) {
      const FrequencyTable& f = t.Get(i, o);
      EXPECT_EQ(f.cdf.back(), kFreqTotal);
      for (size_t j = 0; j + 1 < f.cdf.size(); ++j) EXPECT_GE(f.freq(j), 1u);
      // pmf over the alphabet sums to at most one.
      double sum = 0.0;
      for (int r = -f.support_size(); r <= f.support_size(); ++r) {
        sum += GaussianMass(r, o / 256.0, t.level(i));
      }
      EXPECT_LE(sum, 1.0 + 1e-6);
    }
  }
  EXPECT_THROW(t.Get(256, 0), Error);
  EXPECT_THROW(t.Get(0, 129), Error);
}

TEST(ScaleTableTest, TableSelectionCentersOnMean) {
  const ScaleTable& t = GlobalScaleTable();
  const TableRef r = GaussianTableFor(t, 10.3, 1.0, 0.0);
  EXPECT_EQ(r.shift, 10);
  const TableRef far = GaussianTableFor(t, 900.0, 1.0, 0.0);
  EXPECT_EQ(far.shift, kMaxAbsSymbol);
  EXPECT_EQ(FactorizedOffsetIndex(-0.25), 64);
  EXPECT_EQ(FactorizedOffsetIndex(0.0), 0);
}

TEST(FactorizedTablesTest, QuantizedTablesApproximateDensity) {
  std::mt19937_64 rng(6);
  ParameterSet params;
  FactorizedModel model(params, "prior", 2, rng);
  const FactorizedTables tables(model.Snapshot());
  for (int o : {0, 64, -127}) {
    const FrequencyTable& f = tables.Get(1, o);
    EXPECT_EQ(f.cdf.back(), kFreqTotal);
    for (int j = 0; j < f.support_size(); ++j) {
      const double p = tables.density().Mass(1, f.min_symbol + j + o / 256.0);
      const double q = static_cast<double>(f.freq(static_cast<size_t>(j))) / kFreqTotal;
      if (p > 1e-2) EXPECT_NEAR(q / p, 1.0, 0.02);
    }
  }
  EXPECT_EQ(&tables.Get(1, 0), &tables.Get(1, 0));
  EXPECT_THROW(tables.Get(2, 0), Error);
}

}  // namespace
}  // namespace gvae
