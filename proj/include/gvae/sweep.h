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

#ifndef GVAE_SWEEP_H_
#define GVAE_SWEEP_H_

#include <string>
#include <vector>

#include "gvae/codec.h"
#include "gvae/image.h"

namespace gvae {

struct RdPoint {
  double q = 0.0;
  int s = 0;
  double l = 0.0;
  double bpp = 0.0;
  double psnr_db = 0.0;  // mean over images; +inf if any image is lossless
  double ms_ssim = 0.0;
  // MS-SSIM ran with fewer than five scales on some image.
  bool ms_ssim_reduced = false;
};

struct SweepOptions {
  QuantizerMode quantizer = QuantizerMode::kRound;
  uint64_t dither_seed = 0;
  bool allow_extrapolation = false;
  int jobs = 1;
};

// q values from 0 to n - 1 inclusive in `step` increments (n = 1 gives {0}).
std::vector<double> QGrid(int n, double step);

// Encodes and decodes every image at every q, averaging metrics per q.
// Points are sorted by bpp (ties keep q order). Results do not depend on
// `jobs`.
std::vector<RdPoint> RdSweep(const Codec& codec, const std::vector<Image>& images,
                             const std::vector<double>& q_grid,
                             const SweepOptions& options = {});

// q,s,l,bpp,psnr_db,ms_ssim with "inf" for lossless PSNR.
std::string RdPointsCsv(const std::vector<RdPoint>& points);
std::string RdPointsJson(const std::vector<RdPoint>& points);

}  // namespace gvae

#endif  // GVAE_SWEEP_H_
