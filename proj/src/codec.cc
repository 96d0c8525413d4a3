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

#include "gvae/codec.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "gvae/error.h"
#include "gvae/range_coder.h"

namespace gvae {
namespace {

constexpr int kKernel = 5;
constexpr int kHyperKernel = 3;
constexpr int64_t kMaxPixels = int64_t{1} << 28;

Var Constant(const std::vector<double>& v) {
  return Var(Tensor(Shape{static_cast<int64_t>(v.size())}, v));
}

Var MaybeScale(const Var& x, const Var& gain) {
  return gain.defined() ? MulChannel(x, gain) : x;
}

// Symbols k = clamp(round(v + d), +-255) and reconstructions k - d.
struct Quantized {
  std::vector<int32_t> symbols;
  Tensor hat;
};

double DitherFor(QuantizerMode mode, uint64_t seed, uint64_t stream,
                 uint64_t index) {
  return mode == QuantizerMode::kUniversal ? DitherAt(seed, stream, index) : 0.0;
}

Quantized QuantizeForCoding(const Tensor& v, QuantizerMode mode, uint64_t seed,
                            uint64_t stream) {
  GVAE_CHECK(v.AllFinite(), ErrorCode::kNonFinite,
             "non-finite latent values before quantization");
  Quantized q;
  q.symbols.resize(static_cast<size_t>(v.numel()));
  q.hat = Tensor(v.shape());
  const double lim = kMaxAbsSymbol;
  for (int64_t i = 0; i < v.numel(); ++i) {
    const double d = DitherFor(mode, seed, stream, static_cast<uint64_t>(i));
    const double k = std::clamp(RoundHalfAway(v[i] + d), -lim, lim);
    const int32_t symbol = static_cast<int32_t>(k);
    q.symbols[static_cast<size_t>(i)] = symbol;
    q.hat[i] = symbol - d;
  }
  return q;
}

std::vector<LayerSpec> EncoderSpecs(const CodecConfig& c) {
  const int h = c.hidden_channels;
  return {ConvSpec(3, h, kKernel, 2), GdnSpec(h, false),
          ConvSpec(h, h, kKernel, 2), GdnSpec(h, false),
          ConvSpec(h, c.latent_channels, kKernel, 2)};
}

std::vector<LayerSpec> DecoderSpecs(const CodecConfig& c) {
  const int h = c.hidden_channels;
  return {DeconvSpec(c.latent_channels, h, kKernel, 2), GdnSpec(h, true),
          DeconvSpec(h, h, kKernel, 2), GdnSpec(h, true),
          DeconvSpec(h, 3, kKernel, 2)};
}

std::vector<LayerSpec> HyperEncoderSpecs(const CodecConfig& c) {
  return {ConvSpec(c.latent_channels, c.hyper_channels, kHyperKernel, 2),
          ReluSpec(c.hyper_channels),
          ConvSpec(c.hyper_channels, c.hyper_channels, kHyperKernel, 2)};
}

std::vector<LayerSpec> HyperDecoderSpecs(const CodecConfig& c) {
  return {DeconvSpec(c.hyper_channels, c.hyper_channels, kHyperKernel, 2),
          ReluSpec(c.hyper_channels),
          DeconvSpec(c.hyper_channels, 2 * c.latent_channels, kHyperKernel, 2)};
}

bool IsDerivedEntry(const std::string& name) {
  return name.rfind("meta.", 0) == 0 || name == "gain.M" ||
         name == "gain.Minv" || name == "hyper_gain.M" ||
         name == "hyper_gain.Minv" || name == "entropy.scale_table";
}

}  // namespace

const char* VariantName(Variant v) {
  return v == Variant::kHcvr ? "hcvr" : "cvr";
}

Variant ParseVariant(const std::string& name) {
  if (name == "cvr" || name == "CVR") return Variant::kCvr;
  if (name == "hcvr" || name == "HCVR") return Variant::kHcvr;
  throw Error(ErrorCode::kInvalidArgument, "unknown variant '" + name + "'");
}

const std::vector<double>& LagrangeMse() {
  static const std::vector<double> b = {0.05, 0.03, 0.007, 0.003, 0.001, 0.0003};
  return b;
}

const std::vector<double>& LagrangeMsSsim() {
  static const std::vector<double> b = {0.07, 0.03, 0.007, 0.003, 0.001, 0.0006};
  return b;
}

void CodecConfig::Validate() const {
  auto require = [](bool ok, const std::string& msg) {
    GVAE_CHECK(ok, ErrorCode::kInvalidArgument, "codec config: " + msg);
  };
  require(hidden_channels >= 1 && latent_channels >= 1, "channel counts must be >= 1");
  require(variant == Variant::kCvr || hyper_channels >= 1,
          "HCVR needs hyper channels");
  require(quantizer != QuantizerMode::kNoise,
          "inference quantizer must be round or universal");
  require(product_penalty >= 0.0, "product penalty must be >= 0");
  require(static_cast<int>(lagrange.size()) == RateCount(),
          "expected " + std::to_string(RateCount()) + " Lagrange multipliers, got " +
              std::to_string(lagrange.size()));
  for (size_t i = 0; i < lagrange.size(); ++i) {
    require(std::isfinite(lagrange[i]) && lagrange[i] >= 0.0,
            "Lagrange multipliers must be finite and >= 0");
    require(i == 0 || lagrange[i] < lagrange[i - 1],
            "Lagrange multipliers must be strictly decreasing");
  }
  if (gain_units) {
    require(gain_count >= 1, "gain_count must be >= 1");
    require(variant == Variant::kCvr || hyper_gain_count == gain_count,
            "HCVR shares one selector, so n_hp must equal n");
  }
}

OverheadReport ComputeOverhead(const OverheadInput& in) {
  OverheadReport r;
  r.params = 2 * in.c * in.n + 2 * in.c_hp * in.n_hp;
  r.flops = 2 * in.c * in.h * in.w + 2 * in.c_hp * in.h_hp * in.w_hp;
  if (in.base_params > 0) {
    r.params_percent = 100.0 * static_cast<double>(r.params) /
                       static_cast<double>(in.base_params);
  }
  if (in.base_flops > 0) {
    r.flops_percent = 100.0 * static_cast<double>(r.flops) /
                      static_cast<double>(in.base_flops);
  }
  return r;
}

Codec::Codec(const CodecConfig& config) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(config_.init_seed);
  encoder_ = Sequential(params_, "enc", EncoderSpecs(config_), rng);
  decoder_ = Sequential(params_, "dec", DecoderSpecs(config_), rng);
  const bool hyper = config_.variant == Variant::kHcvr;
  if (hyper) {
    hyper_encoder_ = Sequential(params_, "hyper_enc", HyperEncoderSpecs(config_), rng);
    hyper_decoder_ = Sequential(params_, "hyper_dec", HyperDecoderSpecs(config_), rng);
    prior_ = FactorizedModel(params_, "hyper_entropy", config_.hyper_channels, rng);
  } else {
    prior_ = FactorizedModel(params_, "entropy", config_.latent_channels, rng);
  }
  if (config_.gain_units) {
    gain_ = GainUnit(params_, "gain", config_.latent_channels,
                     config_.gain_count, config_.gain_mode);
    if (hyper) {
      hyper_gain_ = GainUnit(params_, "hyper_gain", config_.hyper_channels,
                             config_.hyper_gain_count, config_.gain_mode);
    }
  }
}

Codec::Gains Codec::TrainingGains(int s) const {
  Gains g;
  if (!config_.gain_units) return g;
  g.gain = gain_.Gain(s);
  g.inverse_gain = gain_.InverseGain(s);
  if (config_.variant == Variant::kHcvr) {
    g.hyper_gain = hyper_gain_.Gain(s);
    g.hyper_inverse_gain = hyper_gain_.InverseGain(s);
  }
  return g;
}

Codec::Gains Codec::CodingGains(const RateSelector& sel,
                                bool allow_extrapolation) const {
  Gains g;
  if (!config_.gain_units) return g;
  if (config_.gain_count == 1) {
    GVAE_CHECK(sel.s == 0 && sel.l == 0.0, ErrorCode::kIndex,
               "a single-vector codec only supports s = 0, l = 0");
  }
  auto vectors = [&](const GainUnitPair& pair) {
    GainVectors v = config_.gain_count == 1
                        ? StoredColumns(pair, 0)
                        : InterpolatePair(pair, sel, allow_extrapolation);
    return std::make_pair(Constant(RoundForCoding(v.gain)),
                          Constant(RoundForCoding(v.inverse_gain)));
  };
  std::tie(g.gain, g.inverse_gain) = vectors(GainValues());
  if (config_.variant == Variant::kHcvr) {
    std::tie(g.hyper_gain, g.hyper_inverse_gain) = vectors(HyperGainValues());
  }
  return g;
}

GainUnitPair Codec::GainValues() const {
  if (!config_.gain_units) {
    GainUnitPair p;
    p.gain = Tensor(Shape{config_.latent_channels, 1}, 1.0);
    p.inverse_gain = p.gain;
    p.lagrange = config_.lagrange;
    return p;
  }
  return gain_.Values(config_.lagrange);
}

GainUnitPair Codec::HyperGainValues() const {
  GVAE_CHECK(config_.variant == Variant::kHcvr, ErrorCode::kInvalidArgument,
             "only HCVR codecs have a hyper gain pair");
  if (!config_.gain_units) {
    GainUnitPair p;
    p.gain = Tensor(Shape{config_.hyper_channels, 1}, 1.0);
    p.inverse_gain = p.gain;
    p.lagrange = config_.lagrange;
    return p;
  }
  return hyper_gain_.Values(config_.lagrange);
}

ForwardResult Codec::Forward(const Tensor& x, int s,
                             const QuantizerSpec& spec) const {
  GVAE_CHECK(x.ndim() == 4 && x.dim(1) == 3, ErrorCode::kShape,
             "codec input must be N,3,H,W, got " + ShapeString(x.shape()));
  const int stride = config_.Stride();
  GVAE_CHECK(x.dim(2) % stride == 0 && x.dim(3) % stride == 0,
             ErrorCode::kShape,
             "input extent must be a multiple of " + std::to_string(stride) +
                 ", got " + ShapeString(x.shape()));
  GVAE_CHECK(s >= 0 && s < config_.RateCount(), ErrorCode::kIndex,
             "rate index " + std::to_string(s) + " outside [0, " +
                 std::to_string(config_.RateCount() - 1) + "]");
  const Phase phase =
      spec.mode == QuantizerMode::kNoise ? Phase::kTraining : Phase::kInference;
  QuantizerSpec latent_spec = spec;
  latent_spec.stream = kLatentStream;
  QuantizerSpec hyper_spec = spec;
  hyper_spec.stream = kHyperStream;

  const Gains g = TrainingGains(s);
  const Var input(x);
  const Var y_bar = MaybeScale(encoder_.Forward(input), g.gain);

  ForwardResult r;
  Var bits;
  int64_t floored = 0;
  Var y_hat;
  if (config_.variant == Variant::kCvr) {
    y_hat = Quantize(y_bar, latent_spec, phase);
    bits = TotalBits(prior_.Likelihood(y_hat), &floored);
  } else {
    const Var z_bar =
        MaybeScale(hyper_encoder_.Forward(Abs(y_bar)), g.hyper_gain);
    const Var z_hat = Quantize(z_bar, hyper_spec, phase);
    int64_t floored_z = 0;
    const Var hyper_bits = TotalBits(prior_.Likelihood(z_hat), &floored_z);
    const Var params =
        hyper_decoder_.Forward(MaybeScale(z_hat, g.hyper_inverse_gain));
    const int64_t c = config_.latent_channels;
    const Var mu = SliceChannels(params, 0, c);
    const Var sigma = LowerBound(Softplus(SliceChannels(params, c, 2 * c)),
                                 kScaleFloor);
    y_hat = Quantize(y_bar, latent_spec, phase);
    bits = Add(TotalBits(GaussianLikelihood(y_hat, mu, sigma), &floored),
               hyper_bits);
    floored += floored_z;
    r.hyper_bits = hyper_bits.value()[0];
  }
  const Var x_hat = decoder_.Forward(MaybeScale(y_hat, g.inverse_gain));
  const Var mse = MeanSquaredError(x_hat, input);

  const double pixels = static_cast<double>(x.dim(0) * x.dim(2) * x.dim(3));
  const double beta = config_.lagrange[static_cast<size_t>(s)];
  Var loss = Add(MulScalar(bits, 1.0 / pixels),
                 MulScalar(mse, beta * kDistortionScale));
  if (config_.gain_units && config_.gain_mode == GainMode::kSoft &&
      config_.product_penalty > 0.0) {
    Var penalty = gain_.ProductPenalty();
    if (config_.variant == Variant::kHcvr) {
      penalty = Add(penalty, hyper_gain_.ProductPenalty());
    }
    loss = Add(loss, MulScalar(penalty, config_.product_penalty));
  }
  r.loss = loss;
  r.bits = bits.value()[0];
  r.bpp = r.bits / pixels;
  r.mse = mse.value()[0];
  r.floored = floored;
  r.x_hat = x_hat.value();
  return r;
}

ForwardResult Codec::ForwardTrain(const Tensor& x, int s,
                                  uint64_t noise_seed) const {
  QuantizerSpec spec;
  spec.mode = QuantizerMode::kNoise;
  spec.seed = noise_seed;
  return Forward(x, s, spec);
}

std::vector<NamedTensor> Codec::ToCheckpoint() const {
  std::vector<NamedTensor> out;
  auto meta = [&](const std::string& name, double v) {
    out.push_back({"meta." + name, Tensor(Shape{1}, v)});
  };
  meta("variant", static_cast<double>(config_.variant));
  meta("gain_units", config_.gain_units ? 1.0 : 0.0);
  meta("hidden_channels", config_.hidden_channels);
  meta("latent_channels", config_.latent_channels);
  meta("hyper_channels", config_.hyper_channels);
  meta("gain_count", config_.gain_count);
  meta("hyper_gain_count", config_.hyper_gain_count);
  meta("gain_mode", config_.gain_mode == GainMode::kSoft ? 1.0 : 0.0);
  meta("quantizer", static_cast<double>(config_.quantizer));
  meta("product_penalty", config_.product_penalty);
  out.push_back({"meta.lagrange",
                 Tensor(Shape{static_cast<int64_t>(config_.lagrange.size())},
                        config_.lagrange)});
  for (size_t i = 0; i < params_.size(); ++i) {
    out.push_back({params_[i].name, params_[i].var.value()});
  }
  if (config_.gain_units) {
    const GainUnitPair p = GainValues();
    out.push_back({"gain.M", p.gain});
    out.push_back({"gain.Minv", p.inverse_gain});
    if (config_.variant == Variant::kHcvr) {
      const GainUnitPair h = HyperGainValues();
      out.push_back({"hyper_gain.M", h.gain});
      out.push_back({"hyper_gain.Minv", h.inverse_gain});
    }
  }
  if (config_.variant == Variant::kHcvr) {
    const ScaleTable& st = GlobalScaleTable();
    Tensor levels(Shape{ScaleTable::kLevels});
    for (int i = 0; i < ScaleTable::kLevels; ++i) levels[i] = st.level(i);
    out.push_back({"entropy.scale_table", levels});
  }
  return out;
}

std::vector<uint8_t> Codec::Serialize() const {
  return SerializeCheckpoint(ToCheckpoint());
}

void Codec::Save(const std::string& path) const {
  WriteFileBytes(path, Serialize());
}

Codec Codec::FromCheckpoint(const std::vector<NamedTensor>& entries) {
  std::map<std::string, const Tensor*> byname;
  for (const auto& e : entries) {
    GVAE_CHECK(byname.emplace(e.name, &e.tensor).second, ErrorCode::kBadCheckpoint,
               "duplicate checkpoint entry '" + e.name + "'");
  }
  auto scalar = [&](const std::string& name) {
    auto it = byname.find("meta." + name);
    GVAE_CHECK(it != byname.end() && it->second->numel() == 1,
               ErrorCode::kBadCheckpoint, "checkpoint lacks meta." + name);
    return (*it->second)[0];
  };
  auto integer = [&](const std::string& name, int lo, int hi) {
    const double v = scalar(name);
    GVAE_CHECK(v == std::floor(v) && v >= lo && v <= hi, ErrorCode::kBadCheckpoint,
               "checkpoint meta." + name + " out of range");
    return static_cast<int>(v);
  };
  CodecConfig config;
  config.variant = static_cast<Variant>(integer("variant", 0, 1));
  config.gain_units = integer("gain_units", 0, 1) == 1;
  config.hidden_channels = integer("hidden_channels", 1, 4096);
  config.latent_channels = integer("latent_channels", 1, 4096);
  config.hyper_channels = integer("hyper_channels", 0, 4096);
  config.gain_count = integer("gain_count", 0, 4096);
  config.hyper_gain_count = integer("hyper_gain_count", 0, 4096);
  config.gain_mode = integer("gain_mode", 0, 1) == 1 ? GainMode::kSoft : GainMode::kHard;
  config.quantizer = static_cast<QuantizerMode>(integer("quantizer", 0, 1));
  config.product_penalty = scalar("product_penalty");
  auto lag = byname.find("meta.lagrange");
  GVAE_CHECK(lag != byname.end(), ErrorCode::kBadCheckpoint,
             "checkpoint lacks meta.lagrange");
  config.lagrange.assign(lag->second->data().begin(), lag->second->data().end());
  try {
    config.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kBadCheckpoint, e.what());
  }

  Codec codec(config);
  size_t matched = 0;
  for (size_t i = 0; i < codec.params_.size(); ++i) {
    Parameter& p = codec.params_[i];
    auto it = byname.find(p.name);
    GVAE_CHECK(it != byname.end(), ErrorCode::kBadCheckpoint,
               "checkpoint lacks parameter '" + p.name + "'");
    GVAE_CHECK(it->second->shape() == p.var.shape(), ErrorCode::kBadCheckpoint,
               "parameter '" + p.name + "' has shape " +
                   ShapeString(it->second->shape()) + ", expected " +
                   ShapeString(p.var.shape()));
    GVAE_CHECK(it->second->AllFinite(), ErrorCode::kBadCheckpoint,
               "parameter '" + p.name + "' holds non-finite values");
    p.var.mutable_value() = *it->second;
    ++matched;
  }
  for (const auto& e : entries) {
    GVAE_CHECK(IsDerivedEntry(e.name) || codec.params_.Find(e.name) != nullptr,
               ErrorCode::kBadCheckpoint,
               "unexpected checkpoint entry '" + e.name + "'");
  }
  if (config.variant == Variant::kHcvr) {
    auto it = byname.find("entropy.scale_table");
    GVAE_CHECK(it != byname.end() && it->second->numel() == ScaleTable::kLevels,
               ErrorCode::kBadCheckpoint, "checkpoint lacks the scale table");
    const ScaleTable& st = GlobalScaleTable();
    for (int i = 0; i < ScaleTable::kLevels; ++i) {
      GVAE_CHECK(static_cast<float>((*it->second)[i]) ==
                     static_cast<float>(st.level(i)),
                 ErrorCode::kBadCheckpoint,
                 "checkpoint scale table differs from this build's");
    }
  }
  codec.Freeze();
  return codec;
}

Codec Codec::Load(const std::string& path) {
  return FromCheckpoint(ReadCheckpointFile(path));
}

void Codec::Freeze() {
  params_.RoundToFloat();
  checksum_ = Fnv1a64(Serialize());
  tables_ = std::make_unique<FactorizedTables>(prior_.Snapshot());
  frozen_ = true;
}

void Codec::CheckFrozen() const {
  GVAE_CHECK(frozen_, ErrorCode::kInvalidArgument,
             "codec must be frozen (loaded or Freeze()d) before coding");
}

std::pair<Tensor, Tensor> Codec::HyperParams(const Tensor& z_hat,
                                             const Gains& g) const {
  const Var params =
      hyper_decoder_.Forward(MaybeScale(Var(z_hat), g.hyper_inverse_gain));
  const int64_t c = config_.latent_channels;
  const Var mu = SliceChannels(params, 0, c);
  const Var sigma =
      LowerBound(Softplus(SliceChannels(params, c, 2 * c)), kScaleFloor);
  return {mu.value(), sigma.value()};
}

LatentSymbols Codec::Analyze(const Image& image, const RateSelector& sel,
                             const EncodeOptions& options,
                             CodecTrace* trace) const {
  CheckFrozen();
  GVAE_CHECK(options.quantizer != QuantizerMode::kNoise,
             ErrorCode::kInvalidArgument,
             "noise quantization is a training relaxation, not a coding mode");
  GVAE_CHECK(image.width > 0 && image.height > 0 &&
                 image.pixels() <= kMaxPixels,
             ErrorCode::kBadImage, "image extent out of range");
  NoGradGuard no_grad;
  LatentSymbols out;
  BitstreamHeader& h = out.header;
  RateSelector coded{0, 0.0};
  if (config_.gain_units && config_.gain_count >= 2) {
    ValidateSelector(sel, config_.gain_count, options.allow_extrapolation);
    coded = {sel.s, static_cast<double>(QuantizeInterpolation(sel.l))};
    ValidateSelector(coded, config_.gain_count, options.allow_extrapolation);
  } else {
    GVAE_CHECK(sel.s == 0 && sel.l == 0.0, ErrorCode::kIndex,
               "a fixed-rate codec only supports s = 0, l = 0");
  }
  h.model_checksum = checksum_;
  h.s = static_cast<uint8_t>(coded.s);
  h.l = static_cast<float>(coded.l);
  h.extrapolated = coded.l < 0.0 || coded.l > 1.0;
  h.quantizer = options.quantizer;
  h.dither_seed = options.dither_seed;
  h.width = static_cast<uint32_t>(image.width);
  h.height = static_cast<uint32_t>(image.height);

  const Gains g = CodingGains(coded, h.extrapolated);
  const Tensor x = ReflectPad(ImageToTensor(image), config_.Stride());
  const Var y_bar = MaybeScale(encoder_.Forward(Var(x)), g.gain);
  out.y_shape = y_bar.shape();
  Quantized yq = QuantizeForCoding(y_bar.value(), options.quantizer,
                                   options.dither_seed, kLatentStream);
  Var bits;
  if (config_.variant == Variant::kCvr) {
    bits = TotalBits(prior_.Likelihood(Var(yq.hat)));
  } else {
    const Var z_bar =
        MaybeScale(hyper_encoder_.Forward(Abs(y_bar)), g.hyper_gain);
    out.z_shape = z_bar.shape();
    Quantized zq = QuantizeForCoding(z_bar.value(), options.quantizer,
                                     options.dither_seed, kHyperStream);
    const auto [mu, sigma] = HyperParams(zq.hat, g);
    bits = Add(TotalBits(GaussianLikelihood(Var(yq.hat), Var(mu), Var(sigma))),
               TotalBits(prior_.Likelihood(Var(zq.hat))));
    out.z_symbols = std::move(zq.symbols);
    if (trace != nullptr) trace->z_hat = std::move(zq.hat);
  }
  out.estimated_bits = bits.value()[0];
  out.y_symbols = std::move(yq.symbols);
  if (trace != nullptr) {
    trace->y_hat = std::move(yq.hat);
    trace->y_symbols = out.y_symbols;
    trace->z_symbols = out.z_symbols;
  }
  return out;
}

Tensor Codec::LatentFromSymbols(const std::vector<int32_t>& symbols,
                                const Shape& shape, QuantizerMode mode,
                                uint64_t seed, uint64_t stream) const {
  Tensor t(shape);
  GVAE_CHECK(static_cast<int64_t>(symbols.size()) == t.numel(), ErrorCode::kShape,
             "symbol count does not match latent shape " + ShapeString(shape));
  for (int64_t i = 0; i < t.numel(); ++i) {
    t[i] = symbols[static_cast<size_t>(i)] -
           DitherFor(mode, seed, stream, static_cast<uint64_t>(i));
  }
  return t;
}

std::vector<uint8_t> Codec::CodeHyper(const LatentSymbols& sym) const {
  const Shape& s = sym.z_shape;
  const int64_t plane = s[2] * s[3];
  const BitstreamHeader& h = sym.header;
  return EncodeStream(sym.z_symbols, [&](size_t i) {
    const double d = DitherFor(h.quantizer, h.dither_seed, kHyperStream, i);
    return TableRef{&tables_->Get(static_cast<int>(static_cast<int64_t>(i) / plane),
                                  FactorizedOffsetIndex(d)),
                    0};
  });
}

std::vector<uint8_t> Codec::CodeLatent(const LatentSymbols& sym,
                                       const Tensor* mu,
                                       const Tensor* sigma) const {
  const Shape& s = sym.y_shape;
  const int64_t plane = s[2] * s[3];
  const BitstreamHeader& h = sym.header;
  if (mu == nullptr) {
    return EncodeStream(sym.y_symbols, [&](size_t i) {
      const double d = DitherFor(h.quantizer, h.dither_seed, kLatentStream, i);
      return TableRef{
          &tables_->Get(static_cast<int>(static_cast<int64_t>(i) / plane),
                        FactorizedOffsetIndex(d)),
          0};
    });
  }
  const ScaleTable& st = GlobalScaleTable();
  return EncodeStream(sym.y_symbols, [&](size_t i) {
    const double d = DitherFor(h.quantizer, h.dither_seed, kLatentStream, i);
    return GaussianTableFor(st, (*mu)[static_cast<int64_t>(i)],
                            (*sigma)[static_cast<int64_t>(i)], d);
  });
}

EncodedImage Codec::Code(const LatentSymbols& sym) const {
  CheckFrozen();
  NoGradGuard no_grad;
  EncodedImage out;
  out.stream.header = sym.header;
  if (config_.variant == Variant::kCvr) {
    out.stream.payloads.push_back(CodeLatent(sym, nullptr, nullptr));
  } else {
    const BitstreamHeader& h = sym.header;
    const Gains g = CodingGains({h.s, h.l}, h.extrapolated);
    const Tensor z_hat = LatentFromSymbols(sym.z_symbols, sym.z_shape,
                                           h.quantizer, h.dither_seed,
                                           kHyperStream);
    const auto [mu, sigma] = HyperParams(z_hat, g);
    out.stream.payloads.push_back(CodeHyper(sym));
    out.stream.payloads.push_back(CodeLatent(sym, &mu, &sigma));
  }
  out.bytes = PackBitstream(out.stream);
  out.bpp = 8.0 * static_cast<double>(out.stream.payload_bytes()) /
            (static_cast<double>(sym.header.width) * sym.header.height);
  out.estimated_bits = sym.estimated_bits;
  return out;
}

EncodedImage Codec::Encode(const Image& image, const RateSelector& sel,
                           const EncodeOptions& options,
                           CodecTrace* trace) const {
  return Code(Analyze(image, sel, options, trace));
}

Image Codec::Decode(std::span<const uint8_t> bytes,
                    const DecodeOptions& options) const {
  CheckFrozen();
  NoGradGuard no_grad;
  const Bitstream bs = UnpackBitstream(bytes, &checksum_);
  const BitstreamHeader& h = bs.header;
  const bool hyper = config_.variant == Variant::kHcvr;
  GVAE_CHECK(bs.payloads.size() == (hyper ? 2u : 1u), ErrorCode::kCorrupt,
             "payload count does not match the model variant");
  GVAE_CHECK(static_cast<int64_t>(h.width) * h.height <= kMaxPixels,
             ErrorCode::kCorrupt, "image extent out of range");
  auto check_selector = [&](const RateSelector& sel) {
    if (config_.gain_units && config_.gain_count >= 2) {
      const bool ok = sel.s >= 0 && sel.s + 1 < config_.gain_count &&
                      std::isfinite(sel.l) &&
                      (h.extrapolated || (sel.l >= 0.0 && sel.l <= 1.0));
      GVAE_CHECK(ok, ErrorCode::kCorrupt, "rate selector out of range");
    } else {
      GVAE_CHECK(sel.s == 0 && sel.l == 0.0, ErrorCode::kCorrupt,
                 "fixed-rate model with a nonzero selector");
    }
  };
  const RateSelector sel{h.s, h.l};
  check_selector(sel);
  const Gains g = CodingGains(sel, h.extrapolated);
  // An override only changes the inverse gain before synthesis; entropy
  // decoding must follow the encoder to recover the symbols at all.
  Var inverse_gain = g.inverse_gain;
  if (options.selector_override) {
    check_selector(*options.selector_override);
    inverse_gain =
        CodingGains(*options.selector_override, h.extrapolated).inverse_gain;
  }

  const int stride = config_.Stride();
  const int64_t ph = (h.height + stride - 1) / stride;
  const int64_t pw = (h.width + stride - 1) / stride;
  const Shape y_shape{1, config_.latent_channels, ph * (stride / 8),
                      pw * (stride / 8)};
  size_t next = 0;
  Tensor mu, sigma;
  Tensor z_hat;
  std::vector<int32_t> z_symbols;
  if (hyper) {
    const Shape z_shape{1, config_.hyper_channels, ph, pw};
    const int64_t plane = ph * pw;
    z_symbols = DecodeStream(
        bs.payloads[next++], static_cast<size_t>(NumElements(z_shape)),
        [&](size_t i) {
          const double d = DitherFor(h.quantizer, h.dither_seed, kHyperStream, i);
          return TableRef{
              &tables_->Get(static_cast<int>(static_cast<int64_t>(i) / plane),
                            FactorizedOffsetIndex(d)),
              0};
        });
    z_hat = LatentFromSymbols(z_symbols, z_shape, h.quantizer, h.dither_seed,
                              kHyperStream);
    std::tie(mu, sigma) = HyperParams(z_hat, g);
  }
  const int64_t plane = y_shape[2] * y_shape[3];
  const ScaleTable& st = GlobalScaleTable();
  std::vector<int32_t> y_symbols = DecodeStream(
      bs.payloads[next], static_cast<size_t>(NumElements(y_shape)),
      [&](size_t i) {
        const double d = DitherFor(h.quantizer, h.dither_seed, kLatentStream, i);
        if (hyper) {
          return GaussianTableFor(st, mu[static_cast<int64_t>(i)],
                                  sigma[static_cast<int64_t>(i)], d);
        }
        return TableRef{
            &tables_->Get(static_cast<int>(static_cast<int64_t>(i) / plane),
                          FactorizedOffsetIndex(d)),
            0};
      });
  Tensor y_hat = LatentFromSymbols(y_symbols, y_shape, h.quantizer,
                                   h.dither_seed, kLatentStream);
  const Var x_hat = decoder_.Forward(MaybeScale(Var(y_hat), inverse_gain));
  Image out = TensorToImage(Crop(x_hat.value(), h.height, h.width));
  if (options.trace != nullptr) {
    options.trace->y_hat = std::move(y_hat);
    options.trace->z_hat = std::move(z_hat);
    options.trace->y_symbols = std::move(y_symbols);
    options.trace->z_symbols = std::move(z_symbols);
  }
  return out;
}

int64_t Codec::BaseParameterCount() const {
  return params_.CountElementsExcluding({"gain.", "hyper_gain."});
}

int64_t Codec::BaseMacs(int64_t height, int64_t width) const {
  int64_t macs = encoder_.CountMacs(height, width) +
                 decoder_.CountMacs(height / 8, width / 8);
  if (config_.variant == Variant::kHcvr) {
    macs += hyper_encoder_.CountMacs(height / 8, width / 8) +
            hyper_decoder_.CountMacs(height / 32, width / 32);
  }
  return macs;
}

OverheadReport Codec::MeasuredOverhead(int64_t height, int64_t width) const {
  OverheadInput in;
  in.c = config_.latent_channels;
  in.n = config_.gain_count;
  in.h = height / 8;
  in.w = width / 8;
  if (config_.variant == Variant::kHcvr) {
    in.c_hp = config_.hyper_channels;
    in.n_hp = config_.hyper_gain_count;
    in.h_hp = height / 32;
    in.w_hp = width / 32;
  }
  in.base_params = BaseParameterCount();
  in.base_flops = BaseMacs(height, width);
  return ComputeOverhead(in);
}

}  // namespace gvae
