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

#include "gvae/image.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

#include "gvae/error.h"
#include "test_util.h"

namespace gvae {
namespace {

std::vector<uint8_t> Bytes(const std::string& s) { return {s.begin(), s.end()}; }

ErrorCode DecodeError(const std::vector<uint8_t>& bytes) {
  try {
    DecodePpm(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInvalidArgument;
}

Image RandomImage(int w, int h, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(w, h);
  for (auto& v : img.rgb) v = static_cast<uint8_t>(rng());
  return img;
}

TEST(PpmTest, ParsesHeaderWithComments) {
  auto bytes = Bytes("P6\n# made by hand\n2 1 # width height\n255\n");
  for (uint8_t v : {1, 2, 3, 4, 5, 6}) bytes.push_back(v);
  const Image img = DecodePpm(bytes);
  EXPECT_EQ(img.width, 2);
  EXPECT_EQ(img.height, 1);
  EXPECT_EQ(img.at(1, 0, 2), 6);
}

TEST(PpmTest, RoundTrip) {
  const Image img = RandomImage(7, 5, 1);
  const Image back = DecodePpm(EncodePpm(img));
  EXPECT_EQ(back.width, 7);
  EXPECT_EQ(back.height, 5);
  EXPECT_EQ(back.rgb, img.rgb);
  const auto path = (std::filesystem::temp_directory_path() / "gvae_image_test.ppm").string();
  WritePpm(path, img);
  EXPECT_EQ(ReadPpm(path).rgb, img.rgb);
  std::filesystem::remove(path);
}

TEST(PpmTest, RejectsMalformedInput) {
  EXPECT_EQ(DecodeError(Bytes("P3\n1 1\n255\n")), ErrorCode::kBadImage);
  EXPECT_EQ(DecodeError(Bytes("P6\n1 1\n65535\n")), ErrorCode::kBadImage);
  EXPECT_EQ(DecodeError(Bytes("P6\n0 1\n255\n")), ErrorCode::kBadImage);
  EXPECT_EQ(DecodeError(Bytes("P6\n2 2\n255\nabc")), ErrorCode::kBadImage);
  EXPECT_EQ(DecodeError(Bytes("")), ErrorCode::kBadImage);
  EXPECT_THROW(ReadPpm("/nonexistent/file.ppm"), Error);
}

TEST(TensorConversionTest, RoundTripIsExact) {
  const Image img = RandomImage(9, 4, 2);
  const Tensor t = ImageToTensor(img);
  EXPECT_EQ(t.shape(), Shape({1, 3, 4, 9}));
  EXPECT_EQ(t[0], img.at(0, 0, 0) / 255.0);
  EXPECT_EQ(TensorToImage(t).rgb, img.rgb);
}

TEST(TensorConversionTest, ClampsOutOfRange) {
  Tensor t(Shape{1, 3, 1, 2}, std::vector<double>{-0.2, 1.7, 0.5, 0.5, 0.0, 1.0});
  const Image img = TensorToImage(t);
  EXPECT_EQ(img.at(0, 0, 0), 0);
  EXPECT_EQ(img.at(1, 0, 0), 255);
  EXPECT_EQ(img.at(0, 0, 1), 128);
}

TEST(ReflectPadTest, MirrorsWithoutRepeatingEdge) {
  Tensor x(Shape{1, 1, 1, 3}, std::vector<double>{1, 2, 3});
  const Tensor p = ReflectPad(x, 8);
  EXPECT_EQ(p.shape(), Shape({1, 1, 8, 8}));
  // Row: 1 2 3 2 1 2 3 2
  const std::vector<double> row = {1, 2, 3, 2, 1, 2, 3, 2};
  for (int j = 0; j < 8; ++j) EXPECT_EQ(p[j], row[static_cast<size_t>(j)]);
  // Single-row input replicates down the rows.
  for (int i = 0; i < 8; ++i) EXPECT_EQ(p[i * 8 + 2], 3.0);
}

TEST(ReflectPadTest, CropInvertsPad) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t h = 1 + static_cast<int64_t>(rng() % 40), w = 1 + static_cast<int64_t>(rng() % 40);
    Tensor x(Shape{1, 3, h, w});
    for (double& v : x.data()) v = static_cast<double>(rng() % 256);
    const Tensor p = ReflectPad(x, 32);
    EXPECT_EQ(p.dim(2) % 32, 0);
    EXPECT_EQ(p.dim(3) % 32, 0);
    EXPECT_LT(p.dim(2) - h, 32);
    EXPECT_EQ(Values(Crop(p, h, w)), Values(x));
  }
  Tensor aligned(Shape{1, 1, 16, 16}, 1.0);
  EXPECT_EQ(ReflectPad(aligned, 8).shape(), aligned.shape());
}

}  // namespace
}  // namespace gvae
