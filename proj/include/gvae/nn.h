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

#ifndef GVAE_NN_H_
#define GVAE_NN_H_

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "gvae/autograd.h"
#include "gvae/tensor.h"

namespace gvae {

// A trainable leaf tensor plus its Adam state.
struct Parameter {
  std::string name;
  Var var;
  Tensor first_moment;
  Tensor second_moment;
  int64_t step = 0;
  // Multiplies the optimizer learning rate for this parameter.
  double lr_scale = 1.0;
};

// Owns parameters with stable addresses, in creation order.
class ParameterSet {
 public:
  Parameter& Add(const std::string& name, Tensor init, double lr_scale = 1.0);
  Parameter* Find(const std::string& name);
  const Parameter* Find(const std::string& name) const;
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;

  size_t size() const { return params_.size(); }
  Parameter& operator[](size_t i) { return *params_[i]; }
  const Parameter& operator[](size_t i) const { return *params_[i]; }

  void ZeroGrad();
  int64_t CountElements() const;
  // Elements of parameters whose name does not start with any prefix given.
  int64_t CountElementsExcluding(const std::vector<std::string>& prefixes) const;

  // Copies of every value, in order (used to roll back a failed step).
  std::vector<Tensor> Snapshot() const;
  void Restore(const std::vector<Tensor>& snapshot);
  // Rounds every value to the nearest 32-bit float, as a checkpoint would.
  void RoundToFloat();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

enum class LayerKind { kConv, kDeconv, kGdn, kIgdn, kRelu };

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;

  void Validate() const;
};

LayerSpec ConvSpec(int in, int out, int kernel, int stride);
LayerSpec DeconvSpec(int in, int out, int kernel, int stride);
LayerSpec GdnSpec(int channels, bool inverse);
LayerSpec ReluSpec(int channels);

// GDN parameters are stored reparameterized: value = max(p, floor)^2 - ped.
inline constexpr double kGdnPedestal = 1.0 / (1ull << 36);
inline constexpr double kGdnBetaMin = 1e-6;

Var GdnBetaFromParam(const Var& p);
Var GdnGammaFromParam(const Var& p);
Tensor GdnBetaParamFor(const Tensor& beta);
Tensor GdnGammaParamFor(const Tensor& gamma);

struct GdnFloorReport {
  int64_t beta_at_floor = 0;
  int64_t beta_total = 0;
  int64_t gamma_at_floor = 0;
  int64_t gamma_total = 0;
  // True when more than 1% of the beta entries sit on the floor.
  bool beta_warning() const { return beta_at_floor * 100 > beta_total; }
};

// A feed-forward stack of LayerSpecs whose parameters live in a
// ParameterSet under "<prefix>.<index>.<w|b|beta|gamma>".
class Sequential {
 public:
  Sequential() = default;
  Sequential(ParameterSet& params, const std::string& prefix,
             std::vector<LayerSpec> specs, std::mt19937_64& rng);

  Var Forward(const Var& input) const;
  const std::vector<LayerSpec>& specs() const { return specs_; }
  // Product of conv strides (down-sampling factor); deconvs count as 1.
  int DownsampleFactor() const;
  // Multiply-accumulate count for one N=1 input of the given extent.
  int64_t CountMacs(int64_t height, int64_t width) const;
  GdnFloorReport FloorReport() const;

 private:
  struct Layer {
    LayerSpec spec;
    Parameter* weight = nullptr;
    Parameter* bias = nullptr;
  };
  std::vector<LayerSpec> specs_;
  std::vector<Layer> layers_;
};

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update over every parameter; clears gradients.
// Throws kMissingGradient naming the first parameter without a gradient.
void AdamStep(ParameterSet& params, const AdamOptions& options);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double ClipGradientNorm(ParameterSet& params, double max_norm);

}  // namespace gvae

#endif  // GVAE_NN_H_
