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

#ifndef GVAE_METRICS_H_
#define GVAE_METRICS_H_

#include <string>
#include <vector>

#include "gvae/image.h"

namespace gvae {

// 10 log10(255^2 / MSE) over all channels; +infinity for identical images.
double Psnr(const Image& a, const Image& b);

// "inf" for an infinite value, otherwise a fixed-precision decimal.
std::string FormatMetric(double v);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr int kMsSsimScales = 5;

struct MsSsimResult {
  double score = 0.0;
  int scales = 0;  // scales actually evaluated
  bool reduced() const { return scales < kMsSsimScales; }
};

// Multi-scale SSIM on the 8-bit scale with the standard five-scale weights,
// an 11x11 Gaussian window (sigma 1.5), valid filtering and 2x2 average
// pooling. Channels are scored separately and averaged. Scales whose extent
// would drop below the window are omitted and the remaining weights
// renormalized (a warning is logged). Throws kInvalidArgument below 11x11.
MsSsimResult MsSsim(const Image& a, const Image& b);

// Single-scale mean SSIM and mean contrast-structure term of two planes
// (row-major, height x width, 8-bit scale).
struct SsimTerms {
  double ssim = 0.0;
  double cs = 0.0;
};
SsimTerms SsimPlane(const std::vector<double>& a, const std::vector<double>& b,
                    int height, int width);

}  // namespace gvae

#endif  // GVAE_METRICS_H_
