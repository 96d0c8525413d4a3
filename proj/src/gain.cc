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

#include "gvae/gain.h"

#include <algorithm>
#include <cmath>

#include "gvae/error.h"

namespace gvae {
namespace {

void CheckPositive(const Tensor& m, const char* what) {
  for (int64_t i = 0; i < m.numel(); ++i) {
    GVAE_CHECK(m[i] > 0.0 && std::isfinite(m[i]), ErrorCode::kDomain,
               std::string(what) + " entry " + std::to_string(i) +
                   " is not a positive finite value");
  }
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// sum_i (1/n) sum_s (p[i,s] - mean_s p[i,.])^2 for a c x n matrix.
Var RowVarianceSum(const Var& p) {
  const int64_t rows = p.shape()[0], cols = p.shape()[1];
  Tensor centered(p.shape());
  double total = 0.0;
  for (int64_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (int64_t c = 0; c < cols; ++c) mean += p.value()[r * cols + c];
    mean /= static_cast<double>(cols);
    for (int64_t c = 0; c < cols; ++c) {
      const double d = p.value()[r * cols + c] - mean;
      centered[r * cols + c] = d;
      total += d * d / static_cast<double>(cols);
    }
  }
  auto pp = p.node();
  return MakeResult(Tensor::Scalar(total), {p},
                    [pp, centered, cols](Node& self) {
                      Tensor& g = pp->GradBuffer();
                      const double k =
                          2.0 * self.grad[0] / static_cast<double>(cols);
                      for (int64_t i = 0; i < g.numel(); ++i) {
                        g[i] += k * centered[i];
                      }
                    });
}

}  // namespace

void GainUnitPair::Validate() const {
  GVAE_CHECK(gain.ndim() == 2 && gain.shape() == inverse_gain.shape(),
             ErrorCode::kShape,
             "gain " + ShapeString(gain.shape()) + " vs inverse gain " +
                 ShapeString(inverse_gain.shape()));
  GVAE_CHECK(static_cast<int64_t>(lagrange.size()) == gain.dim(1),
             ErrorCode::kShape,
             "Lagrange set has " + std::to_string(lagrange.size()) +
                 " entries for " + std::to_string(gain.dim(1)) +
                 " gain vectors");
  CheckPositive(gain, "gain matrix");
  CheckPositive(inverse_gain, "inverse gain matrix");
  for (size_t i = 1; i < lagrange.size(); ++i) {
    GVAE_CHECK(lagrange[i] < lagrange[i - 1], ErrorCode::kInvalidArgument,
               "Lagrange set must be strictly decreasing");
  }
}

RateSelector SelectorFromQ(double q, int n, bool allow_extrapolation) {
  GVAE_CHECK(n >= 2, ErrorCode::kInvalidArgument,
             "continuous rate selection needs at least two gain vectors");
  GVAE_CHECK(std::isfinite(q), ErrorCode::kIndex, "q is not finite");
  const double top = static_cast<double>(n - 1);
  if (q < 0.0 || q > top) {
    GVAE_CHECK(allow_extrapolation, ErrorCode::kIndex,
               "q = " + std::to_string(q) + " outside [0, " +
                   std::to_string(n - 1) + "]");
    if (q < 0.0) return {0, q};
    return {n - 2, q - static_cast<double>(n - 2)};
  }
  int s = static_cast<int>(std::floor(q));
  double l = q - static_cast<double>(s);
  if (s >= n - 1) {
    s = n - 2;
    l = 1.0;
  }
  return {s, l};
}

void ValidateSelector(const RateSelector& sel, int n, bool allow_extrapolation) {
  GVAE_CHECK(sel.s >= 0 && sel.s + 1 < n, ErrorCode::kIndex,
             "selector s = " + std::to_string(sel.s) + " outside [0, " +
                 std::to_string(n - 2) + "]");
  GVAE_CHECK(std::isfinite(sel.l), ErrorCode::kIndex, "selector l not finite");
  GVAE_CHECK(allow_extrapolation || (sel.l >= 0.0 && sel.l <= 1.0),
             ErrorCode::kIndex,
             "selector l = " + std::to_string(sel.l) + " outside [0, 1]");
}

GainVectors StoredColumns(const GainUnitPair& pair, int s) {
  const int c = pair.channels(), n = pair.count();
  GVAE_CHECK(s >= 0 && s < n, ErrorCode::kIndex,
             "gain index " + std::to_string(s) + " outside [0, " +
                 std::to_string(n - 1) + "]");
  GainVectors v;
  v.gain.resize(static_cast<size_t>(c));
  v.inverse_gain.resize(static_cast<size_t>(c));
  for (int i = 0; i < c; ++i) {
    v.gain[static_cast<size_t>(i)] = pair.gain[i * n + s];
    v.inverse_gain[static_cast<size_t>(i)] = pair.inverse_gain[i * n + s];
  }
  return v;
}

GainVectors InterpolatePair(const GainUnitPair& pair, const RateSelector& sel,
                            bool allow_extrapolation) {
  ValidateSelector(sel, pair.count(), allow_extrapolation);
  CheckPositive(pair.gain, "gain matrix");
  CheckPositive(pair.inverse_gain, "inverse gain matrix");
  if (sel.l == 0.0) return StoredColumns(pair, sel.s);
  if (sel.l == 1.0) return StoredColumns(pair, sel.s + 1);
  const GainVectors t = StoredColumns(pair, sel.s);
  const GainVectors r = StoredColumns(pair, sel.s + 1);
  GainVectors v = t;
  for (size_t i = 0; i < v.gain.size(); ++i) {
    v.gain[i] = std::pow(r.gain[i], sel.l) * std::pow(t.gain[i], 1.0 - sel.l);
    v.inverse_gain[i] = std::pow(r.inverse_gain[i], sel.l) *
                        std::pow(t.inverse_gain[i], 1.0 - sel.l);
  }
  return v;
}

std::vector<double> ProductConstancyReport(const GainUnitPair& pair) {
  GVAE_CHECK(pair.gain.shape() == pair.inverse_gain.shape() &&
                 pair.gain.ndim() == 2,
             ErrorCode::kShape, "gain matrices disagree in shape");
  const int c = pair.channels(), n = pair.count();
  std::vector<double> report(static_cast<size_t>(c), 0.0);
  for (int i = 0; i < c; ++i) {
    std::vector<double> prod(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) {
      prod[static_cast<size_t>(s)] =
          pair.gain[i * n + s] * pair.inverse_gain[i * n + s];
    }
    const double med = Median(prod);
    double worst = 0.0;
    for (double p : prod) worst = std::max(worst, std::fabs(p - med) / med);
    report[static_cast<size_t>(i)] = worst;
  }
  return report;
}

std::vector<double> RoundForCoding(std::vector<double> v) {
  for (double& x : v) x = std::round(x * 1e9) / 1e9;
  return v;
}

Var ApplyGain(const Var& y, const Var& gain) { return MulChannel(y, gain); }

Var ApplyInverseGain(const Var& y_hat, const Var& inverse_gain) {
  return MulChannel(y_hat, inverse_gain);
}

Tensor ApplyGain(const Tensor& y, const std::vector<double>& gain) {
  NoGradGuard no_grad;
  return MulChannel(Var(y), Var(Tensor(Shape{static_cast<int64_t>(gain.size())},
                                       gain)))
      .value();
}

GainUnit::GainUnit(ParameterSet& params, const std::string& prefix,
                   int channels, int count, GainMode mode)
    : channels_(channels), count_(count), mode_(mode) {
  GVAE_CHECK(channels >= 1 && count >= 1, ErrorCode::kInvalidArgument,
             "gain unit needs at least one channel and one vector");
  log_gain_ = &params.Add(prefix + ".log_gain", Tensor(Shape{channels, count}));
  if (mode == GainMode::kHard) {
    log_product_ = &params.Add(prefix + ".log_product", Tensor(Shape{channels}));
  } else {
    log_inverse_gain_ =
        &params.Add(prefix + ".log_inverse_gain", Tensor(Shape{channels, count}));
  }
}

Var GainUnit::Gain(int s) const {
  GVAE_CHECK(s >= 0 && s < count_, ErrorCode::kIndex,
             "gain index " + std::to_string(s) + " outside [0, " +
                 std::to_string(count_ - 1) + "]");
  return Exp(SelectColumn(log_gain_->var, s));
}

Var GainUnit::InverseGain(int s) const {
  GVAE_CHECK(s >= 0 && s < count_, ErrorCode::kIndex,
             "gain index " + std::to_string(s) + " outside [0, " +
                 std::to_string(count_ - 1) + "]");
  if (mode_ == GainMode::kHard) {
    return Exp(Sub(log_product_->var, SelectColumn(log_gain_->var, s)));
  }
  return Exp(SelectColumn(log_inverse_gain_->var, s));
}

Var GainUnit::ProductPenalty() const {
  if (mode_ == GainMode::kHard) return Var(Tensor::Scalar(0.0));
  return RowVarianceSum(Exp(Add(log_gain_->var, log_inverse_gain_->var)));
}

GainUnitPair GainUnit::Values(const std::vector<double>& lagrange) const {
  GainUnitPair pair;
  const Tensor& lg = log_gain_->var.value();
  pair.gain = Tensor(lg.shape());
  pair.inverse_gain = Tensor(lg.shape());
  for (int i = 0; i < channels_; ++i) {
    for (int s = 0; s < count_; ++s) {
      const int64_t k = static_cast<int64_t>(i) * count_ + s;
      pair.gain[k] = std::exp(lg[k]);
      pair.inverse_gain[k] =
          mode_ == GainMode::kHard
              ? std::exp(log_product_->var.value()[i] - lg[k])
              : std::exp(log_inverse_gain_->var.value()[k]);
    }
  }
  pair.lagrange = lagrange;
  return pair;
}

}  // namespace gvae
