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

#include "gvae/selftest.h"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "gvae/autograd.h"
#include "gvae/bitstream.h"
#include "gvae/codec.h"
#include "gvae/dataset.h"
#include "gvae/entropy.h"
#include "gvae/error.h"
#include "gvae/gain.h"
#include "gvae/metrics.h"
#include "gvae/range_coder.h"

namespace gvae {
namespace {

// Discretized Laplace(0, 2) over [-12, 12], quantized once at startup.
FrequencyTable EmbeddedTable() {
  std::vector<double> pmf;
  for (int v = -12; v <= 12; ++v) pmf.push_back(std::exp(-std::abs(v) / 2.0));
  double sum = 0.0;
  for (double p : pmf) sum += p;
  for (double& p : pmf) p *= 0.999 / sum;
  return MakeFrequencyTable(-12, pmf, 0.001);
}

// Two entries swap their cumulative counts, so intervals overlap.
void Corrupt(FrequencyTable& t) { std::swap(t.cdf[5], t.cdf[9]); }

std::string CheckTable(const FrequencyTable& t) {
  if (t.cdf.size() < 3 || t.cdf.front() != 0 || t.cdf.back() != kFreqTotal) {
    return "cumulative counts do not span [0, 2^16]";
  }
  for (size_t j = 0; j + 1 < t.cdf.size(); ++j) {
    if (t.cdf[j + 1] <= t.cdf[j]) return "entry " + std::to_string(j) + " has zero or negative frequency";
  }
  return "";
}

std::string CoderRoundTrip(const FrequencyTable& table, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> pmf;
  for (size_t j = 0; j < static_cast<size_t>(table.support_size()); ++j) {
    pmf.push_back(static_cast<double>(table.cdf[j + 1]) - table.cdf[j]);
  }
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int32_t> symbols(1 + rng() % 2000);
    std::vector<int32_t> shifts(symbols.size());
    for (size_t i = 0; i < symbols.size(); ++i) {
      // Mostly in-support symbols, occasionally an escape.
      symbols[i] = rng() % 100 == 0 ? static_cast<int32_t>(rng() % 511) - 255
                                    : table.min_symbol + static_cast<int32_t>(rng() % pmf.size());
      shifts[i] = static_cast<int32_t>(rng() % 5) - 2;
    }
    auto provider = [&](size_t i) { return TableRef{&table, shifts[i]}; };
    std::vector<int32_t> decoded;
    try {
      decoded = DecodeStream(EncodeStream(symbols, provider), symbols.size(), provider);
    } catch (const Error& e) {
      return "trial " + std::to_string(trial) + ": " + e.what();
    }
    if (decoded != symbols) return "trial " + std::to_string(trial) + " decoded different symbols";
  }
  return "";
}

std::string GainAlgebra(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  GainUnitPair pair{Tensor(Shape{4, 3}), Tensor(Shape{4, 3}), {0.05, 0.01, 0.001}};
  for (int64_t c = 0; c < 4; ++c) {
    const double product = u(rng);
    for (int64_t s = 0; s < 3; ++s) {
      pair.gain[c * 3 + s] = u(rng);
      pair.inverse_gain[c * 3 + s] = product / pair.gain[c * 3 + s];
    }
  }
  for (int s = 0; s < 2; ++s) {
    const GainVectors lo = InterpolatePair(pair, {s, 0.0});
    const GainVectors hi = InterpolatePair(pair, {s, 1.0});
    for (int64_t c = 0; c < 4; ++c) {
      if (lo.gain[c] != pair.gain[c * 3 + s] || hi.gain[c] != pair.gain[c * 3 + s + 1]) {
        return "interpolation endpoints are not exact";
      }
    }
  }
  std::uniform_real_distribution<double> l01(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const RateSelector sel{static_cast<int>(rng() % 2), l01(rng)};
    const GainVectors v = InterpolatePair(pair, sel);
    for (int64_t c = 0; c < 4; ++c) {
      const double expected = pair.gain[c * 3] * pair.inverse_gain[c * 3];
      if (std::abs(v.gain[c] * v.inverse_gain[c] - expected) > 1e-10 * expected) {
        return "interpolated product drifts from the stored product";
      }
    }
  }
  GainUnitPair mean{Tensor(Shape{1, 2}, std::vector<double>{2.0, 8.0}),
                    Tensor(Shape{1, 2}, std::vector<double>{0.5, 0.125}), {0.05, 0.01}};
  if (std::abs(InterpolatePair(mean, {0, 0.5}).gain[0] - 4.0) > 1e-12) {
    return "geometric mean of 2 and 8 is not 4";
  }
  return "";
}

// Relative L2 error between the analytic gradient of f and central
// differences with step 1e-3.
double GradientError(const std::function<Var(const std::vector<Var>&)>& f,
                     std::vector<Tensor> inputs) {
  std::vector<Var> vars;
  for (const Tensor& t : inputs) vars.emplace_back(t, true);
  f(vars).Backward();
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (int64_t k = 0; k < inputs[i].numel(); ++k) {
      auto eval = [&](double delta) {
        std::vector<Var> v;
        for (size_t j = 0; j < inputs.size(); ++j) {
          Tensor t = inputs[j];
          if (j == i) t[k] += delta;
          v.emplace_back(t);
        }
        return f(v).value()[0];
      };
      const double fd = (eval(1e-3) - eval(-1e-3)) / 2e-3;
      const double an = vars[i].grad().numel() ? vars[i].grad()[k] : 0.0;
      num += (fd - an) * (fd - an);
      den += fd * fd;
    }
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

Tensor Random(const Shape& shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (double& v : t.data()) v = u(rng);
  return t;
}

std::string Gradients(uint64_t seed) {
  std::mt19937_64 rng(seed);
  struct Case {
    const char* name;
    std::function<Var(const std::vector<Var>&)> f;
    std::vector<Tensor> inputs;
  };
  const Tensor weights = Random({1, 2, 4, 4}, rng, -1, 1);
  auto weighted = [weights](const Var& x) { return Sum(Mul(x, Var(weights))); };
  std::vector<Case> cases = {
      {"conv2d",
       [&](const std::vector<Var>& v) { return Sum(Square(Conv2d(v[0], v[1], v[2], 2, 1))); },
       {Random({1, 2, 8, 8}, rng, -1, 1), Random({3, 2, 3, 3}, rng, -1, 1),
        Random({3}, rng, -1, 1)}},
      {"conv-transpose2d",
       [&](const std::vector<Var>& v) {
         return Sum(Square(ConvTranspose2d(v[0], v[1], v[2], 2, 1, 1)));
       },
       {Random({1, 2, 4, 4}, rng, -1, 1), Random({2, 3, 3, 3}, rng, -1, 1),
        Random({3}, rng, -1, 1)}},
      {"gdn",
       [&](const std::vector<Var>& v) { return weighted(Gdn(v[0], v[1], v[2], false)); },
       {Random({1, 2, 4, 4}, rng, -1, 1), Random({2}, rng, 0.5, 1.5),
        Random({2, 2}, rng, 0.05, 0.3)}},
      {"gaussian-rate",
       [&](const std::vector<Var>& v) { return TotalBits(GaussianLikelihood(v[0], v[1], v[2])); },
       {Random({1, 2, 4, 4}, rng, -3, 3), Random({1, 2, 4, 4}, rng, -1, 1),
        Random({1, 2, 4, 4}, rng, 0.3, 3)}},
  };
  for (const Case& c : cases) {
    const double err = GradientError(c.f, c.inputs);
    if (!(err < 1e-4)) {
      return std::string(c.name) + " relative error " + std::to_string(err);
    }
  }
  return "";
}

std::string Overhead() {
  const OverheadReport r = ComputeOverhead({.c = 192, .n = 6, .h = 16, .w = 16});
  if (r.params != 2304) return "CVR parameters " + std::to_string(r.params) + " != 2304";
  if (r.flops != 98304) return "CVR FLOPs " + std::to_string(r.flops) + " != 98304";
  const OverheadReport p = ComputeOverhead({.c = 192, .n = 6, .base_params = 5120000});
  if (std::abs(p.params_percent - 0.045) > 1e-12) return "parameter percentage is not 0.045%";
  const OverheadReport h = ComputeOverhead({.c = 192, .n = 6, .h = 16, .w = 16,
                                            .c_hp = 128, .n_hp = 6, .h_hp = 4, .w_hp = 4});
  if (h.params != 2304 + 1536 || h.flops != 98304 + 4096) return "HCVR overhead mismatch";
  return "";
}

std::string Container(uint64_t seed) {
  Bitstream bs;
  bs.header.model_checksum = Fnv1a64(std::vector<uint8_t>{1, 2, 3});
  bs.header.s = 2;
  bs.header.l = 0.375;
  bs.header.dither_seed = seed;
  bs.header.width = 33;
  bs.header.height = 17;
  bs.payloads = {{9, 8, 7}};
  const auto bytes = PackBitstream(bs);
  const Bitstream back = UnpackBitstream(bytes, &bs.header.model_checksum);
  if (back.payloads != bs.payloads || back.header.l != 0.375 || back.header.width != 33) {
    return "bitstream header or payload changed in a round trip";
  }
  auto damaged = bytes;
  damaged[0] ^= 0xff;
  try {
    UnpackBitstream(damaged, nullptr);
    return "damaged magic was accepted";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kBadMagic) return "damaged magic gave the wrong error";
  }
  Image a(4, 4, 10), b(4, 4, 11);
  if (std::abs(Psnr(a, b) - 48.1308) > 1e-4) return "PSNR of a unit error is not 48.1308 dB";
  return "";
}

std::string CodecRoundTrip(uint64_t seed) {
  for (Variant v : {Variant::kCvr, Variant::kHcvr}) {
    CodecConfig c;
    c.variant = v;
    c.hidden_channels = 8;
    c.latent_channels = 8;
    c.hyper_channels = 4;
    c.gain_count = 3;
    c.hyper_gain_count = 3;
    c.lagrange = {0.05, 0.007, 0.001};
    c.init_seed = seed;
    Codec codec(c);
    codec.Freeze();
    const Image img = ProceduralImage(40, seed, 0);
    for (QuantizerMode q : {QuantizerMode::kRound, QuantizerMode::kUniversal}) {
      EncodeOptions opt;
      opt.quantizer = q;
      opt.dither_seed = seed;
      CodecTrace enc, dec;
      const EncodedImage e = codec.Encode(img, {1, 0.3}, opt, &enc);
      DecodeOptions dopt;
      dopt.trace = &dec;
      const Image out = codec.Decode(e.bytes, dopt);
      if (out.width != img.width || out.height != img.height) {
        return std::string(VariantName(v)) + " decoded extent differs";
      }
      if (enc.y_symbols != dec.y_symbols || enc.z_symbols != dec.z_symbols) {
        return std::string(VariantName(v)) + " encoder and decoder latents differ";
      }
      if (codec.Decode(e.bytes).rgb != out.rgb) {
        return std::string(VariantName(v)) + " decoding is not deterministic";
      }
    }
  }
  return "";
}

}  // namespace

std::vector<SelftestCheck> RunSelftest(const SelftestOptions& options) {
  FrequencyTable table = EmbeddedTable();
  if (options.corrupt_embedded_table) Corrupt(table);
  std::vector<std::pair<std::string, std::function<std::string()>>> checks = {
      {"embedded-table", [&] { return CheckTable(table); }},
      {"range-coder-roundtrip", [&] { return CoderRoundTrip(table, options.seed); }},
      {"gain-algebra", [&] { return GainAlgebra(options.seed); }},
      {"gradient-spot-checks", [&] { return Gradients(options.seed); }},
      {"overhead-arithmetic", [] { return Overhead(); }},
      {"container-and-metrics", [&] { return Container(options.seed); }},
      {"codec-roundtrip", [&] { return CodecRoundTrip(options.seed); }},
  };
  std::vector<SelftestCheck> out;
  for (const auto& [name, run] : checks) {
    SelftestCheck c{name, false, ""};
    try {
      c.detail = run();
      c.passed = c.detail.empty();
    } catch (const std::exception& e) {
      c.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string FormatSelftestReport(const std::vector<SelftestCheck>& checks) {
  std::ostringstream os;
  int failed = 0;
  for (const SelftestCheck& c : checks) {
    if (c.passed) {
      os << "PASS " << c.name << '\n';
    } else {
      os << "FAIL " << c.name << ": " << c.detail << '\n';
      ++failed;
    }
  }
  os << (checks.size() - failed) << '/' << checks.size() << " checks passed\n";
  return os.str();
}

}  // namespace gvae
