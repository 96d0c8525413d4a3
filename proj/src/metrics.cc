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

#include <spdlog/spdlog.h>

#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "gvae/error.h"

namespace gvae {
namespace {

constexpr std::array<double, kMsSsimScales> kWeights = {0.0448, 0.2856, 0.3001,
                                                        0.2363, 0.1333};
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

std::array<double, kSsimWindow> GaussianWindow() {
  std::array<double, kSsimWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    w[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[static_cast<size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable valid-mode Gaussian filter.
std::vector<double> Filter(const std::vector<double>& x, int h, int w) {
  static const auto win = GaussianWindow();
  const int oh = h - kSsimWindow + 1, ow = w - kSsimWindow + 1;
  std::vector<double> rows(static_cast<size_t>(h) * ow);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) {
        acc += win[static_cast<size_t>(k)] * x[static_cast<size_t>(i) * w + j + k];
      }
      rows[static_cast<size_t>(i) * ow + j] = acc;
    }
  }
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  for (int i = 0; i < oh; ++i) {
    for (int j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) {
        acc += win[static_cast<size_t>(k)] * rows[static_cast<size_t>(i + k) * ow + j];
      }
      out[static_cast<size_t>(i) * ow + j] = acc;
    }
  }
  return out;
}

std::vector<double> Downsample(const std::vector<double>& x, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  for (int i = 0; i < oh; ++i) {
    for (int j = 0; j < ow; ++j) {
      const size_t r0 = static_cast<size_t>(2 * i) * w, r1 = r0 + w;
      out[static_cast<size_t>(i) * ow + j] =
          0.25 * (x[r0 + 2 * j] + x[r0 + 2 * j + 1] + x[r1 + 2 * j] + x[r1 + 2 * j + 1]);
    }
  }
  return out;
}

}  // namespace

double Psnr(const Image& a, const Image& b) {
  GVAE_CHECK(a.width == b.width && a.height == b.height, ErrorCode::kShape,
             "PSNR of images with different extents");
  double se = 0.0;
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = static_cast<double>(a.rgb[i]) - b.rgb[i];
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.rgb.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

std::string FormatMetric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

SsimTerms SsimPlane(const std::vector<double>& a, const std::vector<double>& b,
                    int height, int width) {
  GVAE_CHECK(height >= kSsimWindow && width >= kSsimWindow,
             ErrorCode::kInvalidArgument, "plane smaller than the SSIM window");
  const size_t n = a.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (size_t i = 0; i < n; ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = Filter(a, height, width), mu_b = Filter(b, height, width);
  const auto s_aa = Filter(aa, height, width), s_bb = Filter(bb, height, width);
  const auto s_ab = Filter(ab, height, width);
  SsimTerms t;
  for (size_t i = 0; i < mu_a.size(); ++i) {
    const double va = s_aa[i] - mu_a[i] * mu_a[i];
    const double vb = s_bb[i] - mu_b[i] * mu_b[i];
    const double cov = s_ab[i] - mu_a[i] * mu_b[i];
    const double cs = (2.0 * cov + kC2) / (va + vb + kC2);
    const double lum = (2.0 * mu_a[i] * mu_b[i] + kC1) /
                       (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1);
    t.cs += cs;
    t.ssim += lum * cs;
  }
  t.cs /= static_cast<double>(mu_a.size());
  t.ssim /= static_cast<double>(mu_a.size());
  return t;
}

MsSsimResult MsSsim(const Image& a, const Image& b) {
  GVAE_CHECK(a.width == b.width && a.height == b.height, ErrorCode::kShape,
             "MS-SSIM of images with different extents");
  GVAE_CHECK(a.width >= kSsimWindow && a.height >= kSsimWindow,
             ErrorCode::kInvalidArgument,
             "MS-SSIM needs at least 11x11 pixels, got " +
                 std::to_string(a.width) + "x" + std::to_string(a.height));
  int scales = 0;
  for (int h = a.height, w = a.width; scales < kMsSsimScales &&
                                      h >= kSsimWindow && w >= kSsimWindow;
       h /= 2, w /= 2) {
    ++scales;
  }
  static std::once_flag warned;
  if (scales < kMsSsimScales) {
    std::call_once(warned, [&] {
      spdlog::warn("MS-SSIM on {}x{} uses {} of {} scales (weights renormalized); "
                   "further reduced evaluations are flagged in results only",
                   a.width, a.height, scales, kMsSsimScales);
    });
  }
  double wsum = 0.0;
  for (int s = 0; s < scales; ++s) wsum += kWeights[static_cast<size_t>(s)];

  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    int h = a.height, w = a.width;
    std::vector<double> pa(a.pixels()), pb(a.pixels());
    for (int64_t i = 0; i < a.pixels(); ++i) {
      pa[static_cast<size_t>(i)] = a.rgb[static_cast<size_t>(i) * 3 + c];
      pb[static_cast<size_t>(i)] = b.rgb[static_cast<size_t>(i) * 3 + c];
    }
    double score = 1.0;
    for (int s = 0; s < scales; ++s) {
      const SsimTerms t = SsimPlane(pa, pb, h, w);
      const double v = std::max(s + 1 == scales ? t.ssim : t.cs, 0.0);
      score *= std::pow(v, kWeights[static_cast<size_t>(s)] / wsum);
      if (s + 1 < scales) {
        pa = Downsample(pa, h, w);
        pb = Downsample(pb, h, w);
        h /= 2;
        w /= 2;
      }
    }
    total += score;
  }
  return MsSsimResult{total / 3.0, scales};
}

}  // namespace gvae
