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

// Continuously variable-rate codecs.
//
// CVR:  x -> enc -> y -> gain(s,l) -> Q -> factorized coding
//         -> inverse gain(s,l) -> dec -> x_hat
// HCVR: additionally z = hyper_enc(|y_gained|) passes through its own gain
//       pair, is coded under a factorized model, and the hyper decoder turns
//       the inverse-gained z_hat into (mu, sigma) for the latent's Gaussian
//       conditional. Both pairs share one selector (s, l).
//
// A codec built with gain_units = false is the plain fixed-rate base model.

#ifndef GVAE_CODEC_H_
#define GVAE_CODEC_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gvae/autograd.h"
#include "gvae/bitstream.h"
#include "gvae/checkpoint.h"
#include "gvae/entropy.h"
#include "gvae/gain.h"
#include "gvae/image.h"
#include "gvae/nn.h"
#include "gvae/quantizer.h"

namespace gvae {

enum class Variant : uint8_t { kCvr = 0, kHcvr = 1 };

const char* VariantName(Variant v);
Variant ParseVariant(const std::string& name);

// Lagrange multiplier sets for MSE- and MS-SSIM-optimized training.
const std::vector<double>& LagrangeMse();
const std::vector<double>& LagrangeMsSsim();

struct CodecConfig {
  Variant variant = Variant::kCvr;
  bool gain_units = true;
  int hidden_channels = 32;
  int latent_channels = 32;  // c
  int hyper_channels = 16;   // c_hp
  int gain_count = 6;        // n
  int hyper_gain_count = 6;  // n_hp
  GainMode gain_mode = GainMode::kHard;
  QuantizerMode quantizer = QuantizerMode::kRound;
  std::vector<double> lagrange = LagrangeMse();
  // Weight of the product-drift penalty in soft gain mode.
  double product_penalty = 1e-3;
  uint64_t init_seed = 1;

  // Throws kInvalidArgument on an inconsistent configuration.
  void Validate() const;
  int Stride() const { return variant == Variant::kHcvr ? 32 : 8; }
  // Number of rate points the codec can be trained / evaluated at.
  int RateCount() const { return gain_units ? gain_count : 1; }
};

// Distortion term scale: the MSE of [0, 1] pixels is multiplied by 255^2,
// i.e. the objective sees the 8-bit MSE.
inline constexpr double kDistortionScale = 255.0 * 255.0;

struct ForwardResult {
  Var loss;
  double bits = 0.0;          // latent + hyper-latent
  double hyper_bits = 0.0;
  double bpp = 0.0;           // bits / (N * H * W)
  double mse = 0.0;           // on [0, 1] pixels
  int64_t floored = 0;        // likelihoods that hit the floor
  Tensor x_hat;
};

struct EncodeOptions {
  QuantizerMode quantizer = QuantizerMode::kRound;
  uint64_t dither_seed = 0;
  bool allow_extrapolation = false;
};

// Everything the encoder decides before entropy coding.
struct LatentSymbols {
  BitstreamHeader header;
  Shape y_shape;  // 1,C,h,w
  Shape z_shape;  // 1,C_hp,h_hp,w_hp (HCVR only)
  std::vector<int32_t> y_symbols;
  std::vector<int32_t> z_symbols;
  double estimated_bits = 0.0;  // model code length at the chosen symbols
};

// Reconstructed quantities exposed for cross-checking the two coder sides.
struct CodecTrace {
  Tensor y_hat;
  Tensor z_hat;
  std::vector<int32_t> y_symbols;
  std::vector<int32_t> z_symbols;
};

struct EncodedImage {
  Bitstream stream;
  std::vector<uint8_t> bytes;
  double bpp = 0.0;  // payload bits / original pixel count
  double estimated_bits = 0.0;
};

struct DecodeOptions {
  // Applies this selector's inverse gain instead of the header's before
  // synthesis (diagnostics only).
  std::optional<RateSelector> selector_override;
  CodecTrace* trace = nullptr;
};

struct OverheadInput {
  int64_t c = 0, n = 0, h = 0, w = 0;
  int64_t c_hp = 0, n_hp = 0, h_hp = 0, w_hp = 0;  // zero for CVR
  int64_t base_params = 0;
  int64_t base_flops = 0;
};

struct OverheadReport {
  int64_t params = 0;
  int64_t flops = 0;
  double params_percent = 0.0;  // vs base; 0 if base unknown
  double flops_percent = 0.0;
};

// params = 2cn (+ 2 c_hp n_hp), flops = 2chw (+ 2 c_hp h_hp w_hp).
OverheadReport ComputeOverhead(const OverheadInput& in);

class Codec {
 public:
  explicit Codec(const CodecConfig& config);
  Codec(Codec&&) = default;
  Codec& operator=(Codec&&) = default;

  static Codec FromCheckpoint(const std::vector<NamedTensor>& entries);
  static Codec Load(const std::string& path);

  const CodecConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Training / analysis forward pass at stored rate point s. Noise
  // quantization requires phase kTraining; `spec.seed` freezes the noise.
  ForwardResult Forward(const Tensor& x, int s, const QuantizerSpec& spec) const;
  ForwardResult ForwardTrain(const Tensor& x, int s, uint64_t noise_seed) const;

  // Gain matrices as plain values (identity for a gain-free codec).
  GainUnitPair GainValues() const;
  GainUnitPair HyperGainValues() const;

  std::vector<NamedTensor> ToCheckpoint() const;
  std::vector<uint8_t> Serialize() const;
  void Save(const std::string& path) const;

  // Rounds parameters to binary32 (as stored), fixes the model checksum and
  // builds coding tables. Required before Analyze / Encode / Decode.
  void Freeze();
  bool frozen() const { return frozen_; }
  const ModelChecksum& checksum() const { return checksum_; }

  LatentSymbols Analyze(const Image& image, const RateSelector& sel,
                        const EncodeOptions& options,
                        CodecTrace* trace = nullptr) const;
  EncodedImage Code(const LatentSymbols& symbols) const;
  EncodedImage Encode(const Image& image, const RateSelector& sel,
                      const EncodeOptions& options,
                      CodecTrace* trace = nullptr) const;
  Image Decode(std::span<const uint8_t> bytes,
               const DecodeOptions& options = {}) const;

  // Gain overhead for an image of the given extent, measured against this
  // codec's own network (MACs of all transforms).
  OverheadReport MeasuredOverhead(int64_t height, int64_t width) const;
  int64_t BaseParameterCount() const;
  int64_t BaseMacs(int64_t height, int64_t width) const;

 private:
  struct Gains {
    Var gain, inverse_gain, hyper_gain, hyper_inverse_gain;  // undefined = 1
  };
  Gains TrainingGains(int s) const;
  Gains CodingGains(const RateSelector& sel, bool allow_extrapolation) const;
  // Hyper decoder output (mu, sigma) for a decoded hyper latent.
  std::pair<Tensor, Tensor> HyperParams(const Tensor& z_hat,
                                        const Gains& g) const;
  Tensor LatentFromSymbols(const std::vector<int32_t>& symbols,
                           const Shape& shape, QuantizerMode mode,
                           uint64_t seed, uint64_t stream) const;
  std::vector<uint8_t> CodeLatent(const LatentSymbols& sym, const Tensor* mu,
                                  const Tensor* sigma) const;
  std::vector<uint8_t> CodeHyper(const LatentSymbols& sym) const;
  void CheckFrozen() const;

  CodecConfig config_;
  ParameterSet params_;
  Sequential encoder_, decoder_, hyper_encoder_, hyper_decoder_;
  // Latent prior for CVR, hyper-latent prior for HCVR.
  FactorizedModel prior_;
  GainUnit gain_, hyper_gain_;

  bool frozen_ = false;
  ModelChecksum checksum_{};
  std::unique_ptr<FactorizedTables> tables_;
};

}  // namespace gvae

#endif  // GVAE_CODEC_H_
