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

#include <algorithm>
#include <cctype>
#include <cmath>

#include "gvae/checkpoint.h"
#include "gvae/error.h"

namespace gvae {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  void SkipSpaceAndComments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int64_t Number() {
    SkipSpaceAndComments();
    GVAE_CHECK(pos_ < bytes_.size() && std::isdigit(bytes_[pos_]),
               ErrorCode::kBadImage, "malformed PPM header");
    int64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      GVAE_CHECK(v <= (1 << 24), ErrorCode::kBadImage, "PPM extent too large");
    }
    return v;
  }

  size_t pos() const { return pos_; }
  void Advance() { ++pos_; }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

int64_t Mirror(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Image::Image(int w, int h, uint8_t fill)
    : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, fill) {}

Image DecodePpm(std::span<const uint8_t> bytes) {
  GVAE_CHECK(bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6',
             ErrorCode::kBadImage, "not a binary PPM (P6) file");
  HeaderReader r(bytes.subspan(2));
  const int64_t w = r.Number();
  const int64_t h = r.Number();
  const int64_t maxval = r.Number();
  GVAE_CHECK(w > 0 && h > 0, ErrorCode::kBadImage, "PPM has a zero extent");
  GVAE_CHECK(maxval == 255, ErrorCode::kBadImage,
             "only 8-bit PPM (maxval 255) is supported");
  GVAE_CHECK(r.pos() < bytes.size() - 2 && std::isspace(bytes[2 + r.pos()]),
             ErrorCode::kBadImage, "malformed PPM header");
  const size_t start = 2 + r.pos() + 1;
  const size_t need = static_cast<size_t>(w * h * 3);
  GVAE_CHECK(bytes.size() - start >= need, ErrorCode::kBadImage,
             "PPM pixel data truncated");
  Image img(static_cast<int>(w), static_cast<int>(h));
  std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(start),
            bytes.begin() + static_cast<std::ptrdiff_t>(start + need),
            img.rgb.begin());
  return img;
}

std::vector<uint8_t> EncodePpm(const Image& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

Image ReadPpm(const std::string& path) {
  return DecodePpm(ReadFileBytes(path));
}

void WritePpm(const std::string& path, const Image& image) {
  WriteFileBytes(path, EncodePpm(image));
}

Tensor ImageToTensor(const Image& image) {
  const int64_t h = image.height, w = image.width;
  Tensor t(Shape{1, 3, h, w});
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        t.at(0, c, y, x) = image.at(static_cast<int>(x), static_cast<int>(y), c) / 255.0;
      }
    }
  }
  return t;
}

Image TensorToImage(const Tensor& t) {
  GVAE_CHECK(t.ndim() == 4 && t.dim(0) == 1 && t.dim(1) == 3, ErrorCode::kShape,
             "expected a 1,3,H,W tensor, got " + ShapeString(t.shape()));
  Image img(static_cast<int>(t.dim(3)), static_cast<int>(t.dim(2)));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(t.at(0, c, y, x), 0.0, 1.0);
        img.at(x, y, c) = static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return img;
}

Tensor ReflectPad(const Tensor& x, int multiple) {
  GVAE_CHECK(x.ndim() == 4 && multiple >= 1, ErrorCode::kShape,
             "ReflectPad expects N,C,H,W");
  const int64_t h = x.dim(2), w = x.dim(3);
  const int64_t ph = (h + multiple - 1) / multiple * multiple;
  const int64_t pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return x;
  Tensor out(Shape{x.dim(0), x.dim(1), ph, pw});
  for (int64_t n = 0; n < x.dim(0); ++n) {
    for (int64_t c = 0; c < x.dim(1); ++c) {
      for (int64_t i = 0; i < ph; ++i) {
        for (int64_t j = 0; j < pw; ++j) {
          out.at(n, c, i, j) = x.at(n, c, Mirror(i, h), Mirror(j, w));
        }
      }
    }
  }
  return out;
}

Tensor Crop(const Tensor& x, int64_t height, int64_t width) {
  GVAE_CHECK(x.ndim() == 4 && height <= x.dim(2) && width <= x.dim(3),
             ErrorCode::kShape, "crop larger than " + ShapeString(x.shape()));
  Tensor out(Shape{x.dim(0), x.dim(1), height, width});
  for (int64_t n = 0; n < x.dim(0); ++n) {
    for (int64_t c = 0; c < x.dim(1); ++c) {
      for (int64_t i = 0; i < height; ++i) {
        for (int64_t j = 0; j < width; ++j) out.at(n, c, i, j) = x.at(n, c, i, j);
      }
    }
  }
  return out;
}

}  // namespace gvae
