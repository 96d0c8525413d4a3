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

// Entropy models: a learned per-channel factorized density for latents
// without side information, and a Gaussian conditional for latents coded
// under predicted (mu, sigma). Both give differentiable likelihoods for
// training and deterministic integer coding tables for the range coder.

#ifndef GVAE_ENTROPY_H_
#define GVAE_ENTROPY_H_

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gvae/autograd.h"
#include "gvae/nn.h"
#include "gvae/range_coder.h"

namespace gvae {

inline constexpr double kLikelihoodFloor = 1.0 / (1 << 30);
inline constexpr double kScaleFloor = 0.01;
// Table offsets are multiples of 1/kOffsetSteps in [-0.5, 0.5].
inline constexpr int kOffsetSteps = 256;

// Sum over elements of -log2(max(L, 2^-30)). Floored elements still pass a
// gradient that raises their likelihood. `floored` (optional) receives the
// number of elements that hit the floor.
Var TotalBits(const Var& likelihood, int64_t* floored = nullptr);

// sigmoid(upper) - sigmoid(lower), evaluated without cancellation.
Var SigmoidDifference(const Var& lower, const Var& upper);

double NormalCdf(double x);

// Mass of the unit interval around y under N(mu, sigma^2):
// Phi((0.5 - |y - mu|) / sigma) - Phi((-0.5 - |y - mu|) / sigma).
Var GaussianLikelihood(const Var& y, const Var& mu, const Var& sigma);
double GaussianMass(double y, double mu, double sigma);

// Plain-value copy of a factorized density, for table construction.
class FactorizedDensity {
 public:
  static constexpr int kStages = 4;
  static constexpr std::array<int, kStages + 1> kWidths = {1, 3, 3, 3, 1};

  struct Channel {
    // matrices[i] is kWidths[i+1] x kWidths[i] (softplus already applied).
    std::array<std::vector<double>, kStages> matrices;
    std::array<std::vector<double>, kStages> biases;
    // tanh(factor) for the first kStages - 1 stages.
    std::array<std::vector<double>, kStages - 1> factors;
  };

  FactorizedDensity() = default;
  explicit FactorizedDensity(std::vector<Channel> channels)
      : channels_(std::move(channels)) {}

  int channels() const { return static_cast<int>(channels_.size()); }
  // Logit of the cumulative F_c(x).
  double Logit(int c, double x) const;
  double Cdf(int c, double x) const;
  // F_c(v + 0.5) - F_c(v - 0.5).
  double Mass(int c, double v) const;
  // x with F_c(x) = p (bisection on the logit).
  double Quantile(int c, double p) const;

 private:
  std::vector<Channel> channels_;
};

// Per-channel learned cumulative: a stack of monotone maps
// 1 -> 3 -> 3 -> 3 -> 1 with softplus-constrained matrices and
// h + tanh(a) * tanh(h) nonlinearities, followed by a sigmoid.
// Parameters: <prefix>.matrix.<i> (C,out,in), <prefix>.bias.<i> (C,out),
// <prefix>.factor.<i> (C,out).
class FactorizedModel {
 public:
  FactorizedModel() = default;
  FactorizedModel(ParameterSet& params, const std::string& prefix,
                  int channels, std::mt19937_64& rng, double init_scale = 10.0);

  int channels() const { return channels_; }
  // y: N,C,H,W. Returns likelihoods laid out C,1,N*H*W.
  Var Likelihood(const Var& y) const;
  FactorizedDensity Snapshot() const;

 private:
  Var Logits(const Var& rows) const;

  int channels_ = 0;
  std::array<Parameter*, FactorizedDensity::kStages> matrices_{};
  std::array<Parameter*, FactorizedDensity::kStages> biases_{};
  std::array<Parameter*, FactorizedDensity::kStages - 1> factors_{};
};

// Quantized coding tables for a factorized density, built on first use.
// Table (c, o) codes integer k with mass F_c(k + o/256 + 0.5) -
// F_c(k + o/256 - 0.5). Safe to share between threads.
class FactorizedTables {
 public:
  explicit FactorizedTables(FactorizedDensity density);

  const FactorizedDensity& density() const { return density_; }
  const FrequencyTable& Get(int channel, int offset_index) const;
  // Overwrites one cached table (self-test fault injection).
  void ReplaceForTesting(int channel, int offset_index, FrequencyTable table);

 private:
  FactorizedDensity density_;
  std::vector<std::pair<double, double>> quantiles_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<int, int>, std::unique_ptr<FrequencyTable>> cache_;
};

// Log-spaced scale levels for the Gaussian conditional's coding tables.
class ScaleTable {
 public:
  static constexpr int kLevels = 256;
  static constexpr double kMaxScale = 256.0;

  ScaleTable();
  double level(int i) const { return levels_[static_cast<size_t>(i)]; }
  // Nearest level in the log domain.
  int Index(double sigma) const;
  // Table (i, o) codes r in [-K, K], K = min(255, ceil(8 sigma_i) + 1), with
  // mass Phi((r - o/256 + 0.5) / sigma_i) - Phi((r - o/256 - 0.5) / sigma_i).
  const FrequencyTable& Get(int scale_index, int offset_index) const;

 private:
  std::vector<double> levels_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<int, int>, std::unique_ptr<FrequencyTable>> cache_;
};

// Shared, process-wide scale table.
const ScaleTable& GlobalScaleTable();

// Table selection for one Gaussian-coded element whose symbol k codes the
// value k - dither: the table is centered at round(mu + dither) (clamped to
// the alphabet) and the remaining offset is quantized to the 1/256 grid.
TableRef GaussianTableFor(const ScaleTable& table, double mu, double sigma,
                          double dither);

// Offset index for a factorized element: symbol k codes k - dither.
int FactorizedOffsetIndex(double dither);

}  // namespace gvae

#endif  // GVAE_ENTROPY_H_
