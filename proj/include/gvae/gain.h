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

// Channel-wise gain units.
//
// A gain unit scales every channel of the latent by its own positive factor
// before quantization; the inverse-gain unit rescales the quantized latent
// before synthesis. A c x n gain matrix stores one column per rate point;
// column s is paired with the Lagrange multiplier B[s] used to train it.
// Intermediate rates come from geometric interpolation between adjacent
// columns, which keeps gain * inverse_gain constant when the stored columns
// share that product.

#ifndef GVAE_GAIN_H_
#define GVAE_GAIN_H_

#include <string>
#include <vector>

#include "gvae/autograd.h"
#include "gvae/nn.h"
#include "gvae/tensor.h"

namespace gvae {

// Paired gain/inverse-gain matrices (c x n, strictly positive) and the
// Lagrange set they were trained with (length n, strictly decreasing).
struct GainUnitPair {
  Tensor gain;          // M
  Tensor inverse_gain;  // M'
  std::vector<double> lagrange;

  int channels() const { return static_cast<int>(gain.dim(0)); }
  int count() const { return static_cast<int>(gain.dim(1)); }
  // Throws kShape / kDomain / kInvalidArgument on a broken invariant.
  void Validate() const;
};

// Lower interval endpoint s and interpolation coefficient l.
struct RateSelector {
  int s = 0;
  double l = 0.0;
};

// Maps one rate dial q in [0, n-1] onto (s, l): s = floor(q), l = frac(q),
// with q = n-1 mapped to (n-2, 1). With allow_extrapolation, q below 0 or
// above n-1 yields l outside [0, 1]. n must be >= 2.
RateSelector SelectorFromQ(double q, int n, bool allow_extrapolation = false);

// Rejects s outside [0, n-2] and (unless allowed) l outside [0, 1].
void ValidateSelector(const RateSelector& sel, int n,
                      bool allow_extrapolation = false);

struct GainVectors {
  std::vector<double> gain;
  std::vector<double> inverse_gain;
};

// m_v = m_r^l * m_t^(1-l) and likewise for the inverse, with t = s and
// r = s + 1. l = 0 and l = 1 return the stored columns exactly.
GainVectors InterpolatePair(const GainUnitPair& pair, const RateSelector& sel,
                            bool allow_extrapolation = false);

// Column s of both matrices, unchanged.
GainVectors StoredColumns(const GainUnitPair& pair, int s);

// For each channel i: max_s |p_s(i) - median_s p(i)| / median_s p(i) where
// p_s(i) = M[i,s] * M'[i,s]. Zero when the product is constant over s.
std::vector<double> ProductConstancyReport(const GainUnitPair& pair);

// Rounds each entry to a multiple of 1e-9 (applied identically by encoder and
// decoder before the vectors touch the latent).
std::vector<double> RoundForCoding(std::vector<double> v);

// y: N,C,H,W (or C,H,W promoted by the caller); gain: length C.
Var ApplyGain(const Var& y, const Var& gain);
Var ApplyInverseGain(const Var& y_hat, const Var& inverse_gain);
Tensor ApplyGain(const Tensor& y, const std::vector<double>& gain);

enum class GainMode {
  // Only M is free; M' = C / M with a learnable per-channel C.
  kHard,
  // M and M' are both free; the product drift is penalized.
  kSoft,
};

// Trainable parameterization of a GainUnitPair. Entries are stored in the
// log domain so they stay positive; every column starts at 1.
//   <prefix>.log_gain          c x n
//   <prefix>.log_product       c        (hard mode)
//   <prefix>.log_inverse_gain  c x n    (soft mode)
class GainUnit {
 public:
  GainUnit() = default;
  GainUnit(ParameterSet& params, const std::string& prefix, int channels,
           int count, GainMode mode);

  int channels() const { return channels_; }
  int count() const { return count_; }
  GainMode mode() const { return mode_; }

  Var Gain(int s) const;
  Var InverseGain(int s) const;
  // Sum over channels of the variance over s of M[i,s] * M'[i,s].
  Var ProductPenalty() const;

  GainUnitPair Values(const std::vector<double>& lagrange) const;

 private:
  Parameter* log_gain_ = nullptr;
  Parameter* log_product_ = nullptr;
  Parameter* log_inverse_gain_ = nullptr;
  int channels_ = 0;
  int count_ = 0;
  GainMode mode_ = GainMode::kHard;
};

}  // namespace gvae

#endif  // GVAE_GAIN_H_
