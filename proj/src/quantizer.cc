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

#include "gvae/quantizer.h"

#include <cmath>

#include "gvae/error.h"

namespace gvae {

const char* QuantizerModeName(QuantizerMode mode) {
  switch (mode) {
    case QuantizerMode::kRound: return "round";
    case QuantizerMode::kUniversal: return "universal";
    case QuantizerMode::kNoise: return "noise";
  }
  return "unknown";
}

QuantizerMode ParseQuantizerMode(const std::string& name) {
  if (name == "round") return QuantizerMode::kRound;
  if (name == "universal") return QuantizerMode::kUniversal;
  if (name == "noise") return QuantizerMode::kNoise;
  throw Error(ErrorCode::kInvalidArgument, "unknown quantizer '" + name + "'");
}

double RoundHalfAway(double x) { return std::round(x); }

uint64_t CounterHash(uint64_t seed, uint64_t stream, uint64_t index) {
  // splitmix64 finalizer over a mixed counter.
  uint64_t z = seed ^ (stream * 0xd1b54a32d192ed03ull) ^
               (index * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double UniformNoise(uint64_t seed, uint64_t stream, uint64_t index) {
  const uint64_t bits = CounterHash(seed, stream, index) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53 - 0.5;
}

double DitherAt(uint64_t seed, uint64_t stream, uint64_t index) {
  const uint64_t j = CounterHash(seed, stream, index) >> 57;  // 0..127
  return (static_cast<double>(j) + 0.5) / kDitherSteps - 0.5;
}

Var Quantize(const Var& x, const QuantizerSpec& spec, Phase phase) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  switch (spec.mode) {
    case QuantizerMode::kRound:
      for (int64_t i = 0; i < in.numel(); ++i) out[i] = RoundHalfAway(in[i]);
      return Var(std::move(out));
    case QuantizerMode::kUniversal: {
      DitherFn dither = spec.dither ? spec.dither : &DitherAt;
      for (int64_t i = 0; i < in.numel(); ++i) {
        const double d = dither(spec.seed, spec.stream, static_cast<uint64_t>(i));
        out[i] = RoundHalfAway(in[i] + d) - d;
      }
      return Var(std::move(out));
    }
    case QuantizerMode::kNoise: {
      GVAE_CHECK(phase == Phase::kTraining, ErrorCode::kInvalidArgument,
                 "noise quantization is only valid during training");
      Tensor noise(in.shape());
      for (int64_t i = 0; i < in.numel(); ++i) {
        noise[i] = UniformNoise(spec.seed, spec.stream, static_cast<uint64_t>(i));
      }
      return Add(x, Var(std::move(noise)));
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "bad quantizer mode");
}

}  // namespace gvae
