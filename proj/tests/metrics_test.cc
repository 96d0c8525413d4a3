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

#include "gvae/metrics.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gvae/error.h"

namespace gvae {
namespace {

Image NoiseImage(int w, int h, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(w, h);
  for (auto& v : img.rgb) v = static_cast<uint8_t>(rng());
  return img;
}

Image SmoothImage(int w, int h) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(x, y, c) = static_cast<uint8_t>(
            128 + 100 * std::sin(0.05 * x * (c + 1)) * std::cos(0.07 * y));
      }
    }
  }
  return img;
}

TEST(PsnrTest, ReferenceValues) {
  const Image a = NoiseImage(8, 8, 1);
  EXPECT_TRUE(std::isinf(Psnr(a, a)));
  EXPECT_EQ(FormatMetric(Psnr(a, a)), "inf");
  Image b(8, 8, 10), c(8, 8, 11);
  EXPECT_NEAR(Psnr(b, c), 20.0 * std::log10(255.0), 1e-12);
  EXPECT_NEAR(Psnr(b, c), 48.1308, 1e-4);
  Image black(8, 8, 0), white(8, 8, 255);
  EXPECT_NEAR(Psnr(black, white), 0.0, 1e-12);
  EXPECT_THROW(Psnr(a, Image(8, 9)), Error);
}

TEST(MsSsimTest, IdenticalImagesScoreOne) {
  const Image a = SmoothImage(180, 180);
  const MsSsimResult r = MsSsim(a, a);
  EXPECT_NEAR(r.score, 1.0, 1e-12);
  EXPECT_EQ(r.scales, 5);
  EXPECT_FALSE(r.reduced());
}

TEST(MsSsimTest, ConstantPlanesMatchClosedForm) {
  const double c1 = 40.0, c2 = 90.0;
  const std::vector<double> a(24 * 24, c1), b(24 * 24, c2);
  const double k1 = (0.01 * 255) * (0.01 * 255);
  const SsimTerms t = SsimPlane(a, b, 24, 24);
  EXPECT_NEAR(t.ssim, (2 * c1 * c2 + k1) / (c1 * c1 + c2 * c2 + k1), 1e-12);
  EXPECT_NEAR(t.cs, 1.0, 1e-12);
}

TEST(MsSsimTest, IndependentNoiseScoresLow) {
  EXPECT_LT(MsSsim(NoiseImage(256, 256, 2), NoiseImage(256, 256, 3)).score, 0.2);
}

TEST(MsSsimTest, DegradesMonotonicallyWithNoise) {
  const Image a = SmoothImage(176, 176);
  std::mt19937_64 rng(4);
  double prev = 1.0;
  for (double sigma : {2.0, 8.0, 32.0}) {
    Image b = a;
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& v : b.rgb) v = static_cast<uint8_t>(std::clamp(v + noise(rng), 0.0, 255.0));
    const double s = MsSsim(a, b).score;
    EXPECT_LT(s, prev);
    EXPECT_GE(s, 0.0);
    prev = s;
  }
}

TEST(MsSsimTest, SmallImagesDropScales) {
  const Image a = NoiseImage(64, 64, 5), b = NoiseImage(64, 64, 6);
  const MsSsimResult r = MsSsim(a, b);
  EXPECT_EQ(r.scales, 3);
  EXPECT_TRUE(r.reduced());
  EXPECT_GE(r.score, 0.0);
  EXPECT_LE(r.score, 1.0);
  EXPECT_EQ(MsSsim(NoiseImage(11, 11, 7), NoiseImage(11, 11, 7)).scales, 1);
  EXPECT_THROW(MsSsim(NoiseImage(10, 40, 7), NoiseImage(10, 40, 8)), Error);
}

}  // namespace
}  // namespace gvae
