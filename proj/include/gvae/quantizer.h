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

#ifndef GVAE_QUANTIZER_H_
#define GVAE_QUANTIZER_H_

#include <cstdint>
#include <string>

#include "gvae/autograd.h"

namespace gvae {

enum class QuantizerMode : uint8_t {
  kRound = 0,
  kUniversal = 1,
  kNoise = 2,  // training relaxation only
};

enum class Phase { kTraining, kInference };

const char* QuantizerModeName(QuantizerMode mode);
QuantizerMode ParseQuantizerMode(const std::string& name);

// Nearest integer, ties away from zero.
double RoundHalfAway(double x);

// Dither streams keep the latent and hyper-latent draws independent.
inline constexpr uint64_t kLatentStream = 0;
inline constexpr uint64_t kHyperStream = 1;
inline constexpr int kDitherSteps = 128;

// Counter-based generator: a pure function of (seed, stream, index).
uint64_t CounterHash(uint64_t seed, uint64_t stream, uint64_t index);
// Uniform in [-0.5, 0.5) with 53-bit resolution.
double UniformNoise(uint64_t seed, uint64_t stream, uint64_t index);
// Universal-quantization dither on the grid (j + 0.5) / 128 - 0.5, so every
// value is an odd multiple of 1/256 in (-0.5, 0.5).
double DitherAt(uint64_t seed, uint64_t stream, uint64_t index);

// Optional dither override (tests use it to inject degenerate streams).
using DitherFn = double (*)(uint64_t seed, uint64_t stream, uint64_t index);

struct QuantizerSpec {
  QuantizerMode mode = QuantizerMode::kRound;
  uint64_t seed = 0;  // noise / dither seed
  uint64_t stream = kLatentStream;
  DitherFn dither = nullptr;  // defaults to DitherAt
};

// round:     nearest integer (no gradient)
// noise:     x + u, u ~ U(-0.5, 0.5) iid, gradient passes straight through
// universal: round(x + d) - d with the shared dither d (no gradient)
// Throws kInvalidArgument for noise mode at inference.
Var Quantize(const Var& x, const QuantizerSpec& spec, Phase phase);

}  // namespace gvae

#endif  // GVAE_QUANTIZER_H_
