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

#include "gvae/nn.h"

#include <cmath>

#include "gvae/error.h"

namespace gvae {

Parameter& ParameterSet::Add(const std::string& name, Tensor init,
                             double lr_scale) {
  GVAE_CHECK(Find(name) == nullptr, ErrorCode::kInvalidArgument,
             "duplicate parameter " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->first_moment = Tensor(init.shape());
  p->second_moment = Tensor(init.shape());
  p->var = Var(std::move(init), /*requires_grad=*/true);
  p->lr_scale = lr_scale;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterSet::Find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterSet::Find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterSet::Get(const std::string& name) {
  Parameter* p = Find(name);
  GVAE_CHECK(p != nullptr, ErrorCode::kInvalidArgument,
             "unknown parameter " + name);
  return *p;
}

const Parameter& ParameterSet::Get(const std::string& name) const {
  const Parameter* p = Find(name);
  GVAE_CHECK(p != nullptr, ErrorCode::kInvalidArgument,
             "unknown parameter " + name);
  return *p;
}

void ParameterSet::ZeroGrad() {
  for (auto& p : params_) p->var.ZeroGrad();
}

int64_t ParameterSet::CountElements() const {
  return CountElementsExcluding({});
}

int64_t ParameterSet::CountElementsExcluding(
    const std::vector<std::string>& prefixes) const {
  int64_t n = 0;
  for (const auto& p : params_) {
    bool skip = false;
    for (const auto& prefix : prefixes) {
      if (p->name.rfind(prefix, 0) == 0) skip = true;
    }
    if (!skip) n += p->var.value().numel();
  }
  return n;
}

std::vector<Tensor> ParameterSet::Snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->var.value());
  return out;
}

void ParameterSet::Restore(const std::vector<Tensor>& snapshot) {
  GVAE_CHECK(snapshot.size() == params_.size(), ErrorCode::kInvalidArgument,
             "snapshot size mismatch");
  for (size_t i = 0; i < params_.size(); ++i) {
    GVAE_CHECK(snapshot[i].shape() == params_[i]->var.shape(),
               ErrorCode::kShape, "snapshot shape mismatch for " +
                                      params_[i]->name);
    params_[i]->var.mutable_value() = snapshot[i];
  }
}

void ParameterSet::RoundToFloat() {
  for (auto& p : params_) {
    for (double& v : p->var.mutable_value().data()) {
      v = static_cast<double>(static_cast<float>(v));
    }
  }
}

void LayerSpec::Validate() const {
  GVAE_CHECK(stride >= 1 && kernel >= 1 && in_channels >= 1 &&
                 out_channels >= 1,
             ErrorCode::kInvalidArgument,
             "layer spec needs stride, kernel and channel counts >= 1");
  if (kind == LayerKind::kGdn || kind == LayerKind::kIgdn ||
      kind == LayerKind::kRelu) {
    GVAE_CHECK(in_channels == out_channels, ErrorCode::kInvalidArgument,
               "normalization layers keep the channel count");
  }
}

LayerSpec ConvSpec(int in, int out, int kernel, int stride) {
  return {LayerKind::kConv, in, out, kernel, stride};
}
LayerSpec DeconvSpec(int in, int out, int kernel, int stride) {
  return {LayerKind::kDeconv, in, out, kernel, stride};
}
LayerSpec GdnSpec(int channels, bool inverse) {
  return {inverse ? LayerKind::kIgdn : LayerKind::kGdn, channels, channels, 1,
          1};
}
LayerSpec ReluSpec(int channels) {
  return {LayerKind::kRelu, channels, channels, 1, 1};
}

Var GdnBetaFromParam(const Var& p) {
  const double floor = std::sqrt(kGdnBetaMin + kGdnPedestal);
  return AddScalar(Square(LowerBound(p, floor)), -kGdnPedestal);
}

Var GdnGammaFromParam(const Var& p) {
  const double floor = std::sqrt(kGdnPedestal);
  return AddScalar(Square(LowerBound(p, floor)), -kGdnPedestal);
}

Tensor GdnBetaParamFor(const Tensor& beta) {
  Tensor p(beta.shape());
  for (int64_t i = 0; i < p.numel(); ++i) {
    p[i] = std::sqrt(std::max(beta[i], kGdnBetaMin) + kGdnPedestal);
  }
  return p;
}

Tensor GdnGammaParamFor(const Tensor& gamma) {
  Tensor p(gamma.shape());
  for (int64_t i = 0; i < p.numel(); ++i) {
    p[i] = std::sqrt(std::max(gamma[i], 0.0) + kGdnPedestal);
  }
  return p;
}

Sequential::Sequential(ParameterSet& params, const std::string& prefix,
                       std::vector<LayerSpec> specs, std::mt19937_64& rng)
    : specs_(std::move(specs)) {
  for (size_t i = 0; i < specs_.size(); ++i) {
    const LayerSpec& s = specs_[i];
    s.Validate();
    if (i > 0) {
      GVAE_CHECK(specs_[i - 1].out_channels == s.in_channels,
                 ErrorCode::kInvalidArgument,
                 prefix + ": layer " + std::to_string(i) +
                     " input channels do not match previous output");
    }
    const std::string base = prefix + "." + std::to_string(i);
    Layer layer{s, nullptr, nullptr};
    const int64_t k = s.kernel;
    switch (s.kind) {
      case LayerKind::kConv:
      case LayerKind::kDeconv: {
        const bool conv = s.kind == LayerKind::kConv;
        // Kaiming-uniform with fan-in; a transposed conv sees on average
        // in*k*k/stride^2 inputs per output.
        double fan_in = static_cast<double>(s.in_channels * k * k);
        if (!conv) fan_in /= static_cast<double>(s.stride * s.stride);
        const double bound = std::sqrt(3.0 / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        Shape ws = conv ? Shape{s.out_channels, s.in_channels, k, k}
                        : Shape{s.in_channels, s.out_channels, k, k};
        Tensor w(ws);
        for (double& v : w.data()) v = dist(rng);
        layer.weight = &params.Add(base + ".w", std::move(w));
        layer.bias = &params.Add(base + ".b", Tensor(Shape{s.out_channels}));
        break;
      }
      case LayerKind::kGdn:
      case LayerKind::kIgdn: {
        const int64_t c = s.in_channels;
        Tensor gamma(Shape{c, c});
        for (int64_t j = 0; j < c; ++j) gamma[j * c + j] = 0.1;
        layer.weight = &params.Add(base + ".beta",
                                   GdnBetaParamFor(Tensor(Shape{c}, 1.0)));
        layer.bias = &params.Add(base + ".gamma", GdnGammaParamFor(gamma));
        break;
      }
      case LayerKind::kRelu:
        break;
    }
    layers_.push_back(layer);
  }
}

Var Sequential::Forward(const Var& input) const {
  Var h = input;
  for (const Layer& layer : layers_) {
    const LayerSpec& s = layer.spec;
    switch (s.kind) {
      case LayerKind::kConv:
        h = Conv2d(h, layer.weight->var, layer.bias->var, s.stride,
                   s.kernel / 2);
        break;
      case LayerKind::kDeconv:
        h = ConvTranspose2d(h, layer.weight->var, layer.bias->var, s.stride,
                            s.kernel / 2, s.stride - 1);
        break;
      case LayerKind::kGdn:
      case LayerKind::kIgdn:
        h = Gdn(h, GdnBetaFromParam(layer.weight->var),
                GdnGammaFromParam(layer.bias->var),
                s.kind == LayerKind::kIgdn);
        break;
      case LayerKind::kRelu:
        h = Relu(h);
        break;
    }
  }
  return h;
}

int Sequential::DownsampleFactor() const {
  int f = 1;
  for (const auto& s : specs_) {
    if (s.kind == LayerKind::kConv) f *= s.stride;
  }
  return f;
}

int64_t Sequential::CountMacs(int64_t height, int64_t width) const {
  int64_t macs = 0;
  int64_t h = height, w = width;
  for (const auto& s : specs_) {
    const int64_t kk = static_cast<int64_t>(s.kernel) * s.kernel;
    switch (s.kind) {
      case LayerKind::kConv:
        h = (h + s.stride - 1) / s.stride;
        w = (w + s.stride - 1) / s.stride;
        macs += h * w * s.out_channels * s.in_channels * kk;
        break;
      case LayerKind::kDeconv:
        // Every input pixel scatters a k x k kernel into every output channel.
        macs += h * w * s.in_channels * s.out_channels * kk;
        h *= s.stride;
        w *= s.stride;
        break;
      case LayerKind::kGdn:
      case LayerKind::kIgdn:
        macs += h * w * s.in_channels * (s.in_channels + 1);
        break;
      case LayerKind::kRelu:
        break;
    }
  }
  return macs;
}

GdnFloorReport Sequential::FloorReport() const {
  GdnFloorReport r;
  const double beta_floor = std::sqrt(kGdnBetaMin + kGdnPedestal);
  const double gamma_floor = std::sqrt(kGdnPedestal);
  for (const Layer& layer : layers_) {
    if (layer.spec.kind != LayerKind::kGdn &&
        layer.spec.kind != LayerKind::kIgdn) {
      continue;
    }
    for (double v : layer.weight->var.value().data()) {
      r.beta_total++;
      if (v <= beta_floor) r.beta_at_floor++;
    }
    for (double v : layer.bias->var.value().data()) {
      r.gamma_total++;
      if (v <= gamma_floor) r.gamma_at_floor++;
    }
  }
  return r;
}

void AdamStep(ParameterSet& params, const AdamOptions& options) {
  for (size_t i = 0; i < params.size(); ++i) {
    GVAE_CHECK(params[i].var.has_grad(), ErrorCode::kMissingGradient,
               "parameter " + params[i].name + " has no gradient");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    p.step++;
    const double lr = options.learning_rate * p.lr_scale;
    const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(p.step));
    const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(p.step));
    Tensor& value = p.var.mutable_value();
    const Tensor& g = p.var.grad();
    for (int64_t j = 0; j < value.numel(); ++j) {
      double& m = p.first_moment[j];
      double& v = p.second_moment[j];
      m = options.beta1 * m + (1.0 - options.beta1) * g[j];
      v = options.beta2 * v + (1.0 - options.beta2) * g[j] * g[j];
      const double mhat = m / c1;
      const double vhat = v / c2;
      value[j] -= lr * mhat / (std::sqrt(vhat) + options.epsilon);
    }
    p.var.ZeroGrad();
  }
}

double ClipGradientNorm(ParameterSet& params, double max_norm) {
  GVAE_CHECK(max_norm > 0.0, ErrorCode::kInvalidArgument, "max_norm must be positive");
  double sum = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].var.has_grad()) continue;
    for (double g : params[i].var.grad().data()) sum += g * g;
  }
  const double norm = std::sqrt(sum);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (size_t i = 0; i < params.size(); ++i) {
      if (!params[i].var.has_grad()) continue;
      for (double& g : params[i].var.node()->grad.data()) g *= scale;
    }
  }
  return norm;
}

}  // namespace gvae
