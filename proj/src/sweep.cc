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

#include "gvae/sweep.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "gvae/error.h"
#include "gvae/metrics.h"
#include "json.hpp"

namespace gvae {

std::vector<double> QGrid(int n, double step) {
  GVAE_CHECK(n >= 1 && step > 0.0 && std::isfinite(step), ErrorCode::kInvalidArgument,
             "q grid needs n >= 1 and a positive step");
  std::vector<double> out;
  const int64_t count = static_cast<int64_t>(std::floor((n - 1) / step + 1e-9));
  for (int64_t i = 0; i <= count; ++i) out.push_back(static_cast<double>(i) * step);
  if (out.back() < n - 1 - 1e-9) out.push_back(n - 1);
  return out;
}

std::vector<RdPoint> RdSweep(const Codec& codec, const std::vector<Image>& images,
                             const std::vector<double>& q_grid,
                             const SweepOptions& options) {
  GVAE_CHECK(!images.empty(), ErrorCode::kInvalidArgument, "sweep needs at least one image");
  const int n = codec.config().RateCount();
  std::vector<RateSelector> selectors;
  for (double q : q_grid) {
    selectors.push_back(n >= 2 ? SelectorFromQ(q, n, options.allow_extrapolation)
                               : RateSelector{0, 0.0});
    GVAE_CHECK(n >= 2 || q == 0.0, ErrorCode::kDomain,
               "fixed-rate model only supports q = 0");
  }
  struct Cell {
    double bpp = 0.0, psnr = 0.0, ms_ssim = 0.0;
    bool reduced = false;
  };
  const size_t total = q_grid.size() * images.size();
  std::vector<Cell> cells(total);
  EncodeOptions enc;
  enc.quantizer = options.quantizer;
  enc.dither_seed = options.dither_seed;
  enc.allow_extrapolation = options.allow_extrapolation;

  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (size_t k; (k = next.fetch_add(1)) < total;) {
      try {
        const size_t qi = k / images.size(), ii = k % images.size();
        const EncodedImage e = codec.Encode(images[ii], selectors[qi], enc);
        const Image out = codec.Decode(e.bytes);
        const MsSsimResult m = MsSsim(images[ii], out);
        cells[k] = {e.bpp, Psnr(images[ii], out), m.score, m.reduced()};
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const int jobs = std::max(1, options.jobs);
  std::vector<std::thread> threads;
  for (int j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<RdPoint> points;
  for (size_t qi = 0; qi < q_grid.size(); ++qi) {
    RdPoint p;
    p.q = q_grid[qi];
    p.s = selectors[qi].s;
    p.l = selectors[qi].l;
    for (size_t ii = 0; ii < images.size(); ++ii) {
      const Cell& c = cells[qi * images.size() + ii];
      p.bpp += c.bpp;
      p.psnr_db += c.psnr;
      p.ms_ssim += c.ms_ssim;
      p.ms_ssim_reduced = p.ms_ssim_reduced || c.reduced;
    }
    const double count = static_cast<double>(images.size());
    p.bpp /= count;
    p.psnr_db /= count;
    p.ms_ssim /= count;
    points.push_back(p);
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  return points;
}

std::string RdPointsCsv(const std::vector<RdPoint>& points) {
  std::ostringstream os;
  os << "q,s,l,bpp,psnr_db,ms_ssim\n";
  for (const RdPoint& p : points) {
    os << FormatMetric(p.q) << ',' << p.s << ',' << FormatMetric(p.l) << ','
       << FormatMetric(p.bpp) << ',' << FormatMetric(p.psnr_db) << ','
       << FormatMetric(p.ms_ssim) << '\n';
  }
  return os.str();
}

std::string RdPointsJson(const std::vector<RdPoint>& points) {
  nlohmann::json arr = nlohmann::json::array();
  for (const RdPoint& p : points) {
    nlohmann::json j;
    j["q"] = p.q;
    j["s"] = p.s;
    j["l"] = p.l;
    j["bpp"] = p.bpp;
    if (std::isinf(p.psnr_db)) {
      j["psnr_db"] = FormatMetric(p.psnr_db);
    } else {
      j["psnr_db"] = p.psnr_db;
    }
    j["ms_ssim"] = p.ms_ssim;
    j["ms_ssim_reduced"] = p.ms_ssim_reduced;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace gvae
