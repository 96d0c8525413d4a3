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

#include "gvae/dataset.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "gvae/error.h"

namespace gvae {
namespace {

double Smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Bilinear value noise on a (cells + 1)^2 lattice of uniform values.
class ValueNoise {
 public:
  ValueNoise(int cells, std::mt19937_64& rng) : cells_(cells) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    lattice_.resize(static_cast<size_t>((cells + 1) * (cells + 1)));
    for (double& v : lattice_) v = u(rng);
  }

  // u, v in [0, 1].
  double At(double u, double v) const {
    const double x = u * cells_, y = v * cells_;
    const int x0 = std::min(static_cast<int>(x), cells_ - 1);
    const int y0 = std::min(static_cast<int>(y), cells_ - 1);
    const double fx = Smooth(x - x0), fy = Smooth(y - y0);
    auto l = [&](int i, int j) { return lattice_[static_cast<size_t>(j * (cells_ + 1) + i)]; };
    const double top = l(x0, y0) * (1 - fx) + l(x0 + 1, y0) * fx;
    const double bottom = l(x0, y0 + 1) * (1 - fx) + l(x0 + 1, y0 + 1) * fx;
    return top * (1 - fy) + bottom * fy;
  }

 private:
  int cells_;
  std::vector<double> lattice_;
};

}  // namespace

Image ProceduralImage(int extent, uint64_t seed, uint64_t index) {
  GVAE_CHECK(extent >= 1, ErrorCode::kInvalidArgument, "image extent must be >= 1");
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // Per-channel base color and gradient direction.
  double base[3], grad[3][2];
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.2 + 0.6 * u01(rng);
    grad[c][0] = 0.4 * (u01(rng) - 0.5);
    grad[c][1] = 0.4 * (u01(rng) - 0.5);
  }
  // Luminance noise shared across channels plus weaker chroma noise.
  std::vector<ValueNoise> octaves;
  std::vector<double> amplitude;
  for (int cells = 2 + static_cast<int>(rng() % 3), k = 0; k < 4; ++k, cells *= 2) {
    octaves.emplace_back(cells, rng);
    amplitude.push_back(0.25 / (1 << k));
  }
  ValueNoise chroma[3] = {ValueNoise(3, rng), ValueNoise(3, rng), ValueNoise(3, rng)};

  std::vector<double> plane(static_cast<size_t>(extent) * extent * 3);
  for (int y = 0; y < extent; ++y) {
    for (int x = 0; x < extent; ++x) {
      const double u = (x + 0.5) / extent, v = (y + 0.5) / extent;
      double lum = 0.0;
      for (size_t k = 0; k < octaves.size(); ++k) lum += amplitude[k] * octaves[k].At(u, v);
      for (int c = 0; c < 3; ++c) {
        plane[(static_cast<size_t>(y) * extent + x) * 3 + c] =
            base[c] + grad[c][0] * (u - 0.5) + grad[c][1] * (v - 0.5) + lum +
            0.08 * chroma[c].At(u, v);
      }
    }
  }
  // Flat shapes with sharp boundaries.
  const int shapes = static_cast<int>(rng() % 4);
  for (int k = 0; k < shapes; ++k) {
    const bool disc = rng() % 2;
    const double cx = u01(rng), cy = u01(rng), r = 0.08 + 0.2 * u01(rng);
    double color[3];
    for (double& col : color) col = u01(rng);
    for (int y = 0; y < extent; ++y) {
      for (int x = 0; x < extent; ++x) {
        const double dx = (x + 0.5) / extent - cx, dy = (y + 0.5) / extent - cy;
        const bool inside = disc ? dx * dx + dy * dy < r * r
                                 : std::abs(dx) < r && std::abs(dy) < 0.6 * r;
        if (!inside) continue;
        for (int c = 0; c < 3; ++c) {
          double& p = plane[(static_cast<size_t>(y) * extent + x) * 3 + c];
          p = 0.3 * p + 0.7 * color[c];
        }
      }
    }
  }
  Image img(extent, extent);
  for (size_t i = 0; i < plane.size(); ++i) {
    img.rgb[i] = static_cast<uint8_t>(std::lround(std::clamp(plane[i], 0.0, 1.0) * 255.0));
  }
  return img;
}

std::vector<Image> ProceduralCorpus(int count, int extent, uint64_t seed) {
  GVAE_CHECK(count >= 0, ErrorCode::kInvalidArgument, "image count must be >= 0");
  std::vector<Image> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(ProceduralImage(extent, seed, static_cast<uint64_t>(i)));
  return out;
}

std::vector<Image> LoadImageDirectory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  GVAE_CHECK(fs::is_directory(dir, ec), ErrorCode::kIo, "not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  GVAE_CHECK(!paths.empty(), ErrorCode::kInvalidArgument, "no .ppm images in " + dir);
  std::vector<Image> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(ReadPpm(p));
  return out;
}

Tensor ExtractPatches(const std::vector<Image>& images, int patch, int count,
                      std::mt19937_64& rng) {
  GVAE_CHECK(patch >= 1 && count >= 0, ErrorCode::kInvalidArgument,
             "patch size must be >= 1 and count >= 0");
  std::vector<const Image*> eligible;
  for (const Image& img : images) {
    if (img.width >= patch && img.height >= patch) {
      eligible.push_back(&img);
    } else {
      spdlog::warn("skipping {}x{} image smaller than {}x{} patches", img.width,
                   img.height, patch, patch);
    }
  }
  GVAE_CHECK(!eligible.empty(), ErrorCode::kInvalidArgument,
             "no image is at least " + std::to_string(patch) + " pixels on each side");
  const int64_t p = patch;
  Tensor out(Shape{count, 3, p, p});
  std::uniform_int_distribution<size_t> pick(0, eligible.size() - 1);
  for (int64_t n = 0; n < count; ++n) {
    const Image& img = *eligible[pick(rng)];
    const int ox = std::uniform_int_distribution<int>(0, img.width - patch)(rng);
    const int oy = std::uniform_int_distribution<int>(0, img.height - patch)(rng);
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t y = 0; y < p; ++y) {
        for (int64_t x = 0; x < p; ++x) {
          out[((n * 3 + c) * p + y) * p + x] =
              img.at(ox + static_cast<int>(x), oy + static_cast<int>(y), static_cast<int>(c)) / 255.0;
        }
      }
    }
  }
  return out;
}

int SampleRateIndex(std::mt19937_64& rng, int n) {
  GVAE_CHECK(n >= 1, ErrorCode::kInvalidArgument, "rate count must be >= 1");
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

}  // namespace gvae
