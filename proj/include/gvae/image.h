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

#ifndef GVAE_IMAGE_H_
#define GVAE_IMAGE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gvae/tensor.h"

namespace gvae {

// 8-bit interleaved RGB.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;

  Image() = default;
  Image(int w, int h, uint8_t fill = 0);
  uint8_t& at(int x, int y, int c) {
    return rgb[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  uint8_t at(int x, int y, int c) const {
    return rgb[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  int64_t pixels() const { return static_cast<int64_t>(width) * height; }
};

// Binary PPM (P6, maxval 255). Errors are kBadImage (kIo if unreadable).
Image DecodePpm(std::span<const uint8_t> bytes);
std::vector<uint8_t> EncodePpm(const Image& image);
Image ReadPpm(const std::string& path);
void WritePpm(const std::string& path, const Image& image);

// 1,3,H,W with values in [0, 1].
Tensor ImageToTensor(const Image& image);
// Clamps to [0, 1] and rounds to 8 bits. Accepts N = 1 tensors only.
Image TensorToImage(const Tensor& t);

// Mirror-pads (without edge repetition) on the bottom/right so both extents
// become multiples of `multiple`. Any amount of padding is supported.
Tensor ReflectPad(const Tensor& x, int multiple);
// Top-left height x width window of an N,C,H,W tensor.
Tensor Crop(const Tensor& x, int64_t height, int64_t width);

}  // namespace gvae

#endif  // GVAE_IMAGE_H_
