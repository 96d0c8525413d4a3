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

#include "gvae/entropy.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gvae/error.h"
#include "gvae/quantizer.h"

namespace gvae {
namespace {

constexpr int kStages = FactorizedDensity::kStages;
constexpr auto kWidths = FactorizedDensity::kWidths;
constexpr double kTailMass = 1e-9;

double StableSigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double SigmoidDiffValue(double lower, double upper) {
  // Evaluate on the side where both sigmoids are small.
  if (lower + upper > 0.0) return StableSigmoid(-lower) - StableSigmoid(-upper);
  return StableSigmoid(upper) - StableSigmoid(lower);
}

double NormalPdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double SoftplusValue(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

int ClampOffsetIndex(double scaled) {
  const double r = RoundHalfAway(scaled);
  return static_cast<int>(std::clamp(r, -kOffsetSteps / 2.0, kOffsetSteps / 2.0));
}

// Integer pmf table over [lo, hi] with the leftover mass as escape.
template <typename MassFn>
std::unique_ptr<FrequencyTable> BuildTable(int32_t lo, int32_t hi, MassFn mass) {
  std::vector<double> pmf(static_cast<size_t>(hi - lo + 1));
  double total = 0.0;
  for (int32_t k = lo; k <= hi; ++k) {
    const double p = std::max(mass(k), 0.0);
    pmf[static_cast<size_t>(k - lo)] = p;
    total += p;
  }
  const double escape = std::max(1.0 - total, 0.0);
  return std::make_unique<FrequencyTable>(MakeFrequencyTable(lo, pmf, escape));
}

}  // namespace

Var TotalBits(const Var& likelihood, int64_t* floored) {
  const Tensor& l = likelihood.value();
  double bits = 0.0;
  int64_t count = 0;
  for (int64_t i = 0; i < l.numel(); ++i) {
    double v = l[i];
    if (!(v > kLikelihoodFloor)) {
      v = kLikelihoodFloor;
      ++count;
    }
    bits -= std::log2(v);
  }
  if (floored != nullptr) *floored = count;
  auto pl = likelihood.node();
  return MakeResult(Tensor::Scalar(bits), {likelihood}, [pl](Node& self) {
    Tensor& g = pl->GradBuffer();
    const double up = self.grad[0] / std::numbers::ln2;
    for (int64_t i = 0; i < g.numel(); ++i) {
      g[i] -= up / std::max(pl->value[i], kLikelihoodFloor);
    }
  });
}

Var SigmoidDifference(const Var& lower, const Var& upper) {
  GVAE_CHECK(lower.shape() == upper.shape(), ErrorCode::kShape,
             "SigmoidDifference: " + ShapeString(lower.shape()) + " vs " +
                 ShapeString(upper.shape()));
  Tensor out(lower.shape());
  for (int64_t i = 0; i < out.numel(); ++i) {
    out[i] = SigmoidDiffValue(lower.value()[i], upper.value()[i]);
  }
  auto pl = lower.node(), pu = upper.node();
  return MakeResult(std::move(out), {lower, upper}, [pl, pu](Node& self) {
    for (int64_t i = 0; i < self.grad.numel(); ++i) {
      const double up = self.grad[i];
      if (pu->requires_grad) {
        const double u = pu->value[i];
        pu->GradBuffer()[i] += up * StableSigmoid(u) * StableSigmoid(-u);
      }
      if (pl->requires_grad) {
        const double l = pl->value[i];
        pl->GradBuffer()[i] -= up * StableSigmoid(l) * StableSigmoid(-l);
      }
    }
  });
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double GaussianMass(double y, double mu, double sigma) {
  const double v = std::abs(y - mu);
  return NormalCdf((0.5 - v) / sigma) - NormalCdf((-0.5 - v) / sigma);
}

Var GaussianLikelihood(const Var& y, const Var& mu, const Var& sigma) {
  GVAE_CHECK(y.shape() == mu.shape() && y.shape() == sigma.shape(),
             ErrorCode::kShape,
             "GaussianLikelihood: y" + ShapeString(y.shape()) + " mu" +
                 ShapeString(mu.shape()) + " sigma" +
                 ShapeString(sigma.shape()));
  Tensor out(y.shape());
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double s = sigma.value()[i];
    GVAE_CHECK(s > 0.0, ErrorCode::kDomain, "Gaussian scale must be positive");
    out[i] = GaussianMass(y.value()[i], mu.value()[i], s);
  }
  auto py = y.node(), pm = mu.node(), ps = sigma.node();
  return MakeResult(std::move(out), {y, mu, sigma}, [py, pm, ps](Node& self) {
    for (int64_t i = 0; i < self.grad.numel(); ++i) {
      const double up = self.grad[i];
      const double d = py->value[i] - pm->value[i];
      const double v = std::abs(d);
      const double s = ps->value[i];
      const double a = (0.5 - v) / s;
      const double b = (-0.5 - v) / s;
      const double pa = NormalPdf(a), pb = NormalPdf(b);
      const double dv = (pb - pa) / s;
      const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      if (py->requires_grad) py->GradBuffer()[i] += up * dv * sign;
      if (pm->requires_grad) pm->GradBuffer()[i] -= up * dv * sign;
      if (ps->requires_grad) ps->GradBuffer()[i] += up * (b * pb - a * pa) / s;
    }
  });
}

double FactorizedDensity::Logit(int c, double x) const {
  const Channel& ch = channels_[static_cast<size_t>(c)];
  std::array<double, 3> h = {x, 0.0, 0.0};
  std::array<double, 3> next{};
  for (int i = 0; i < kStages; ++i) {
    const int in = kWidths[static_cast<size_t>(i)];
    const int out = kWidths[static_cast<size_t>(i) + 1];
    for (int o = 0; o < out; ++o) {
      double acc = ch.biases[static_cast<size_t>(i)][static_cast<size_t>(o)];
      for (int j = 0; j < in; ++j) {
        acc += ch.matrices[static_cast<size_t>(i)][static_cast<size_t>(o * in + j)] *
               h[static_cast<size_t>(j)];
      }
      if (i < kStages - 1) {
        acc += ch.factors[static_cast<size_t>(i)][static_cast<size_t>(o)] *
               std::tanh(acc);
      }
      next[static_cast<size_t>(o)] = acc;
    }
    h = next;
  }
  return h[0];
}

double FactorizedDensity::Cdf(int c, double x) const {
  return StableSigmoid(Logit(c, x));
}

double FactorizedDensity::Mass(int c, double v) const {
  return SigmoidDiffValue(Logit(c, v - 0.5), Logit(c, v + 0.5));
}

double FactorizedDensity::Quantile(int c, double p) const {
  const double target = std::log(p) - std::log1p(-p);
  double lo = -4096.0, hi = 4096.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (Logit(c, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

FactorizedModel::FactorizedModel(ParameterSet& params, const std::string& prefix,
                                 int channels, std::mt19937_64& rng,
                                 double init_scale)
    : channels_(channels) {
  GVAE_CHECK(channels >= 1, ErrorCode::kInvalidArgument,
             "factorized model needs at least one channel");
  const double scale = std::pow(init_scale, 1.0 / kStages);
  std::uniform_real_distribution<double> bias_dist(-0.5, 0.5);
  for (int i = 0; i < kStages; ++i) {
    const int64_t in = kWidths[static_cast<size_t>(i)];
    const int64_t out = kWidths[static_cast<size_t>(i) + 1];
    const double init =
        std::log(std::expm1(1.0 / scale / static_cast<double>(out)));
    matrices_[static_cast<size_t>(i)] =
        &params.Add(prefix + ".matrix." + std::to_string(i),
                    Tensor(Shape{channels, out, in}, init));
    Tensor bias(Shape{channels, out});
    for (double& b : bias.data()) b = bias_dist(rng);
    biases_[static_cast<size_t>(i)] =
        &params.Add(prefix + ".bias." + std::to_string(i), std::move(bias));
    if (i < kStages - 1) {
      factors_[static_cast<size_t>(i)] =
          &params.Add(prefix + ".factor." + std::to_string(i),
                      Tensor(Shape{channels, out}));
    }
  }
}

Var FactorizedModel::Logits(const Var& rows) const {
  Var h = rows;
  for (int i = 0; i < kStages; ++i) {
    h = ChannelAffine(h, Softplus(matrices_[static_cast<size_t>(i)]->var),
                      biases_[static_cast<size_t>(i)]->var);
    if (i < kStages - 1) {
      h = Add(h, MulChannelRows(Tanh(h),
                                Tanh(factors_[static_cast<size_t>(i)]->var)));
    }
  }
  return h;
}

Var FactorizedModel::Likelihood(const Var& y) const {
  GVAE_CHECK(y.shape().size() == 4 && y.shape()[1] == channels_,
             ErrorCode::kShape,
             "factorized model with " + std::to_string(channels_) +
                 " channels got " + ShapeString(y.shape()));
  const Var rows = ToChannelRows(y);
  return SigmoidDifference(Logits(AddScalar(rows, -0.5)),
                           Logits(AddScalar(rows, 0.5)));
}

FactorizedDensity FactorizedModel::Snapshot() const {
  std::vector<FactorizedDensity::Channel> out(static_cast<size_t>(channels_));
  for (int c = 0; c < channels_; ++c) {
    auto& ch = out[static_cast<size_t>(c)];
    for (int i = 0; i < kStages; ++i) {
      const size_t si = static_cast<size_t>(i);
      const int64_t in = kWidths[si], o = kWidths[si + 1];
      const Tensor& m = matrices_[si]->var.value();
      const Tensor& b = biases_[si]->var.value();
      for (int64_t k = 0; k < o * in; ++k) {
        ch.matrices[si].push_back(SoftplusValue(m[c * o * in + k]));
      }
      for (int64_t k = 0; k < o; ++k) ch.biases[si].push_back(b[c * o + k]);
      if (i < kStages - 1) {
        const Tensor& f = factors_[si]->var.value();
        for (int64_t k = 0; k < o; ++k) {
          ch.factors[si].push_back(std::tanh(f[c * o + k]));
        }
      }
    }
  }
  return FactorizedDensity(std::move(out));
}

FactorizedTables::FactorizedTables(FactorizedDensity density)
    : density_(std::move(density)) {
  for (int c = 0; c < density_.channels(); ++c) {
    quantiles_.emplace_back(density_.Quantile(c, kTailMass),
                            density_.Quantile(c, 1.0 - kTailMass));
  }
}

const FrequencyTable& FactorizedTables::Get(int channel, int offset_index) const {
  GVAE_CHECK(channel >= 0 && channel < density_.channels(), ErrorCode::kIndex,
             "factorized table channel " + std::to_string(channel));
  GVAE_CHECK(std::abs(offset_index) <= kOffsetSteps / 2, ErrorCode::kIndex,
             "table offset index " + std::to_string(offset_index));
  std::lock_guard<std::mutex> lock(mu_);
  auto& slot = cache_[{channel, offset_index}];
  if (!slot) {
    const double delta = static_cast<double>(offset_index) / kOffsetSteps;
    const auto [qlo, qhi] = quantiles_[static_cast<size_t>(channel)];
    const double lim = kMaxAbsSymbol;
    double lo = std::clamp(std::floor(qlo - delta) - 1.0, -lim, lim);
    double hi = std::clamp(std::ceil(qhi - delta) + 1.0, -lim, lim);
    if (lo > hi) lo = hi = std::clamp(RoundHalfAway(0.5 * (qlo + qhi) - delta), -lim, lim);
    slot = BuildTable(static_cast<int32_t>(lo), static_cast<int32_t>(hi),
                      [&](int32_t k) { return density_.Mass(channel, k + delta); });
  }
  return *slot;
}

void FactorizedTables::ReplaceForTesting(int channel, int offset_index,
                                         FrequencyTable table) {
  std::lock_guard<std::mutex> lock(mu_);
  cache_[{channel, offset_index}] =
      std::make_unique<FrequencyTable>(std::move(table));
}

ScaleTable::ScaleTable() {
  const double lmin = std::log(kScaleFloor), lmax = std::log(kMaxScale);
  for (int i = 0; i < kLevels; ++i) {
    levels_.push_back(std::exp(lmin + (lmax - lmin) * i / (kLevels - 1)));
  }
}

int ScaleTable::Index(double sigma) const {
  GVAE_CHECK(std::isfinite(sigma) && sigma > 0.0, ErrorCode::kDomain,
             "scale must be positive and finite");
  const double lmin = std::log(kScaleFloor), lmax = std::log(kMaxScale);
  const double pos = (std::log(sigma) - lmin) / (lmax - lmin) * (kLevels - 1);
  return static_cast<int>(std::clamp(RoundHalfAway(pos), 0.0, kLevels - 1.0));
}

const FrequencyTable& ScaleTable::Get(int scale_index, int offset_index) const {
  GVAE_CHECK(scale_index >= 0 && scale_index < kLevels, ErrorCode::kIndex,
             "scale index " + std::to_string(scale_index));
  GVAE_CHECK(std::abs(offset_index) <= kOffsetSteps / 2, ErrorCode::kIndex,
             "table offset index " + std::to_string(offset_index));
  std::lock_guard<std::mutex> lock(mu_);
  auto& slot = cache_[{scale_index, offset_index}];
  if (!slot) {
    const double sigma = levels_[static_cast<size_t>(scale_index)];
    const double o = static_cast<double>(offset_index) / kOffsetSteps;
    const int32_t k = static_cast<int32_t>(
        std::min<double>(kMaxAbsSymbol, std::ceil(8.0 * sigma) + 1.0));
    slot = BuildTable(-k, k, [&](int32_t r) { return GaussianMass(r, o, sigma); });
  }
  return *slot;
}

const ScaleTable& GlobalScaleTable() {
  static const ScaleTable table;
  return table;
}

TableRef GaussianTableFor(const ScaleTable& table, double mu, double sigma,
                          double dither) {
  const double lim = kMaxAbsSymbol;
  const double center = std::clamp(RoundHalfAway(mu + dither), -lim, lim);
  const int oi = ClampOffsetIndex((mu + dither - center) * kOffsetSteps);
  return TableRef{&table.Get(table.Index(sigma), oi),
                  static_cast<int32_t>(center)};
}

int FactorizedOffsetIndex(double dither) {
  return ClampOffsetIndex(-dither * kOffsetSteps);
}

}  // namespace gvae
