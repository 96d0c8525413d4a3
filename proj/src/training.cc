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

#include "gvae/training.h"

#include <spdlog/spdlog.h>

#include <charconv>
#include <limits>
#include <cmath>
#include <random>
#include <sstream>

#include "gvae/checkpoint.h"
#include "gvae/dataset.h"
#include "gvae/error.h"
#include "gvae/nn.h"

namespace gvae {
namespace {

// Held-out images come from a stream disjoint from the training corpus.
constexpr uint64_t kHeldoutSeedSalt = 0x5eedf00dULL;

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void BadValue(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kInvalidArgument,
              "config key '" + key + "': bad value '" + value + "'");
}

int64_t ToInt(const std::string& key, const std::string& value) {
  int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) BadValue(key, value);
  return v;
}

int ToInt32(const std::string& key, const std::string& value) {
  const int64_t v = ToInt(key, value);
  if (v < INT32_MIN || v > INT32_MAX) BadValue(key, value);
  return static_cast<int>(v);
}

double ToDouble(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(v)) BadValue(key, value);
    return v;
  } catch (const std::logic_error&) {
    BadValue(key, value);
  }
}

bool ToBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  BadValue(key, value);
}

std::vector<double> ToLagrange(const std::string& key, const std::string& value) {
  if (value == "mse") return LagrangeMse();
  if (value == "msssim") return LagrangeMsSsim();
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ToDouble(key, Trim(item)));
  if (out.empty()) BadValue(key, value);
  return out;
}

bool AllFinite(const ParameterSet& params) {
  for (size_t i = 0; i < params.size(); ++i) {
    for (double v : params[i].var.value().data()) {
      if (!std::isfinite(v)) return false;
    }
    const Tensor& g = params[i].var.grad();
    for (int64_t k = 0; k < g.numel(); ++k) {
      if (!std::isfinite(g[k])) return false;
    }
  }
  return true;
}

std::string FormatDouble(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

}  // namespace

void TrainConfig::Validate() const {
  auto require = [](bool ok, const std::string& msg) {
    GVAE_CHECK(ok, ErrorCode::kInvalidArgument, "train config: " + msg);
  };
  require(epochs >= 0, "epochs must be >= 0");
  require(steps_per_epoch >= 0, "steps_per_epoch must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(learning_rate > 0.0 && std::isfinite(learning_rate),
          "learning_rate must be positive");
  require(gain_lr_scale > 0.0 && std::isfinite(gain_lr_scale),
          "gain_lr_scale must be positive");
  require(grad_clip >= 0.0 && std::isfinite(grad_clip), "grad_clip must be >= 0");
  require(baseline_beta >= 0.0 && std::isfinite(baseline_beta),
          "baseline_beta must be >= 0");
  require(corpus_images >= 1 && corpus_extent >= 1, "corpus must be nonempty");
  require(heldout_images >= 1, "heldout_images must be >= 1");
  const CodecConfig c = EffectiveCodec();
  c.Validate();
  require(patch_size >= c.Stride() && patch_size % c.Stride() == 0,
          "patch_size must be a positive multiple of " + std::to_string(c.Stride()));
}

CodecConfig TrainConfig::EffectiveCodec() const {
  CodecConfig c = codec;
  if (baseline) {
    c.gain_units = false;
    c.lagrange = {baseline_beta};
  }
  c.init_seed = seed;
  return c;
}

void ApplyConfigValue(const std::string& key, const std::string& value,
                      TrainConfig& config) {
  CodecConfig& c = config.codec;
  if (key == "variant") {
    c.variant = ParseVariant(value);
  } else if (key == "hidden_channels") {
    c.hidden_channels = ToInt32(key, value);
  } else if (key == "latent_channels") {
    c.latent_channels = ToInt32(key, value);
  } else if (key == "hyper_channels") {
    c.hyper_channels = ToInt32(key, value);
  } else if (key == "gain_count") {
    c.gain_count = ToInt32(key, value);
  } else if (key == "hyper_gain_count") {
    c.hyper_gain_count = ToInt32(key, value);
  } else if (key == "gain_mode") {
    if (value == "hard") {
      c.gain_mode = GainMode::kHard;
    } else if (value == "soft") {
      c.gain_mode = GainMode::kSoft;
    } else {
      BadValue(key, value);
    }
  } else if (key == "quantizer") {
    c.quantizer = ParseQuantizerMode(value);
  } else if (key == "lagrange") {
    c.lagrange = ToLagrange(key, value);
  } else if (key == "product_penalty") {
    c.product_penalty = ToDouble(key, value);
  } else if (key == "baseline") {
    config.baseline = ToBool(key, value);
  } else if (key == "baseline_beta") {
    config.baseline_beta = ToDouble(key, value);
  } else if (key == "epochs") {
    config.epochs = ToInt32(key, value);
  } else if (key == "steps_per_epoch") {
    config.steps_per_epoch = ToInt32(key, value);
  } else if (key == "batch_size") {
    config.batch_size = ToInt32(key, value);
  } else if (key == "learning_rate") {
    config.learning_rate = ToDouble(key, value);
  } else if (key == "lr_halve_epoch") {
    config.lr_halve_epoch = ToInt32(key, value);
  } else if (key == "gain_lr_scale") {
    config.gain_lr_scale = ToDouble(key, value);
  } else if (key == "grad_clip") {
    config.grad_clip = ToDouble(key, value);
  } else if (key == "patch_size") {
    config.patch_size = ToInt32(key, value);
  } else if (key == "seed") {
    const int64_t v = ToInt(key, value);
    if (v < 0) BadValue(key, value);
    config.seed = static_cast<uint64_t>(v);
  } else if (key == "dataset") {
    config.dataset = value;
  } else if (key == "corpus_images") {
    config.corpus_images = ToInt32(key, value);
  } else if (key == "corpus_extent") {
    config.corpus_extent = ToInt32(key, value);
  } else if (key == "heldout_images") {
    config.heldout_images = ToInt32(key, value);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
  }
}

void ApplyConfigText(const std::string& text, TrainConfig& config) {
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    GVAE_CHECK(eq != std::string::npos, ErrorCode::kInvalidArgument,
               "config line " + std::to_string(number) + ": expected key = value");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    GVAE_CHECK(!key.empty() && !value.empty(), ErrorCode::kInvalidArgument,
               "config line " + std::to_string(number) + ": empty key or value");
    ApplyConfigValue(key, value, config);
  }
}

void ApplyConfigFile(const std::string& path, TrainConfig& config) {
  const auto bytes = ReadFileBytes(path);
  ApplyConfigText(std::string(bytes.begin(), bytes.end()), config);
}

std::string TrainLog::StepsCsv() const {
  std::ostringstream os;
  os << "step,s,bits,distortion,loss\n";
  for (const StepRecord& r : steps) {
    os << r.step << ',' << r.s << ',' << FormatDouble(r.bits) << ','
       << FormatDouble(r.distortion) << ',' << FormatDouble(r.loss) << '\n';
  }
  return os.str();
}

std::string TrainLog::EvalsCsv() const {
  std::ostringstream os;
  os << "epoch,s,bpp,distortion,psnr_db,loss\n";
  for (const EvalRecord& r : evals) {
    os << r.epoch << ',' << r.s << ',' << FormatDouble(r.bpp) << ','
       << FormatDouble(r.distortion) << ',' << FormatDouble(r.psnr_db) << ','
       << FormatDouble(r.loss) << '\n';
  }
  return os.str();
}

double TrainLog::MeanEvalLoss(int epoch) const {
  double sum = 0.0;
  int count = 0;
  for (const EvalRecord& r : evals) {
    if (r.epoch == epoch) {
      sum += r.loss;
      ++count;
    }
  }
  GVAE_CHECK(count > 0, ErrorCode::kIndex,
             "no held-out evaluation for epoch " + std::to_string(epoch));
  return sum / count;
}

std::vector<Image> TrainingCorpus(const TrainConfig& config) {
  if (!config.dataset.empty()) return LoadImageDirectory(config.dataset);
  return ProceduralCorpus(config.corpus_images, config.corpus_extent, config.seed);
}

std::vector<Image> HeldoutImages(const TrainConfig& config) {
  return ProceduralCorpus(config.heldout_images,
                          std::max(config.corpus_extent, config.patch_size),
                          config.seed ^ kHeldoutSeedSalt);
}

std::vector<EvalRecord> EvaluateHeldout(const Codec& codec, const Tensor& batch,
                                        int epoch, uint64_t seed) {
  NoGradGuard no_grad;
  std::vector<EvalRecord> out;
  for (int s = 0; s < codec.config().RateCount(); ++s) {
    const ForwardResult r = codec.ForwardTrain(batch, s, seed);
    EvalRecord e;
    e.epoch = epoch;
    e.s = s;
    e.bpp = r.bpp;
    e.distortion = r.mse;
    e.psnr_db = r.mse > 0.0 ? 10.0 * std::log10(1.0 / r.mse)
                            : std::numeric_limits<double>::infinity();
    e.loss = r.loss.value()[0];
    out.push_back(e);
  }
  return out;
}

TrainResult Train(const TrainConfig& config, const std::vector<Image>& corpus,
                  const std::vector<Image>& heldout,
                  const std::string& failure_checkpoint,
                  const EpochCallback& on_epoch) {
  config.Validate();
  GVAE_CHECK(!corpus.empty(), ErrorCode::kInvalidArgument, "empty training corpus");
  TrainResult result{Codec(config.EffectiveCodec()), {}};
  Codec& codec = result.codec;
  ParameterSet& params = codec.params();
  for (size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params[i].name;
    if (name.rfind("gain.", 0) == 0 || name.rfind("hyper_gain.", 0) == 0) {
      params[i].lr_scale = config.gain_lr_scale;
    }
  }

  std::mt19937_64 heldout_rng(config.seed ^ kHeldoutSeedSalt);
  const Tensor eval_batch =
      ExtractPatches(heldout, config.patch_size, static_cast<int>(heldout.size()), heldout_rng);
  const uint64_t eval_seed = config.seed ^ kHeldoutSeedSalt;
  auto evaluate = [&](int epoch) {
    for (const EvalRecord& e : EvaluateHeldout(codec, eval_batch, epoch, eval_seed)) {
      result.log.evals.push_back(e);
      spdlog::info("epoch {} s={} bpp={:.4f} psnr={:.2f} loss={:.4f}", epoch, e.s,
                   e.bpp, e.psnr_db, e.loss);
    }
  };
  evaluate(-1);

  const int steps_per_epoch =
      config.steps_per_epoch > 0
          ? config.steps_per_epoch
          : static_cast<int>((corpus.size() + config.batch_size - 1) / config.batch_size);
  std::mt19937_64 rng(config.seed);
  AdamOptions adam;
  int64_t step = 0;
  std::vector<Tensor> last_good = params.Snapshot();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    adam.learning_rate = config.learning_rate;
    if (config.lr_halve_epoch >= 0 && epoch >= config.lr_halve_epoch) {
      adam.learning_rate *= 0.5;
    }
    for (int k = 0; k < steps_per_epoch; ++k, ++step) {
      const Tensor batch = ExtractPatches(corpus, config.patch_size, config.batch_size, rng);
      const int s = SampleRateIndex(rng, codec.config().RateCount());
      const uint64_t noise_seed = rng();
      params.ZeroGrad();
      const ForwardResult r = codec.ForwardTrain(batch, s, noise_seed);
      const double loss = r.loss.value()[0];
      if (std::isfinite(loss)) r.loss.Backward();
      if (!std::isfinite(loss) || !AllFinite(params)) {
        params.Restore(last_good);
        if (!failure_checkpoint.empty()) codec.Save(failure_checkpoint);
        throw Error(ErrorCode::kNonFinite,
                    "non-finite loss or gradient at step " + std::to_string(step) +
                        " (s=" + std::to_string(s) + ", loss=" + FormatDouble(loss) +
                        "); parameters rolled back to the previous step" +
                        (failure_checkpoint.empty() ? "" : ", saved to " + failure_checkpoint));
      }
      last_good = params.Snapshot();
      if (config.grad_clip > 0.0) ClipGradientNorm(params, config.grad_clip);
      AdamStep(params, adam);
      result.log.steps.push_back({step, s, r.bits, r.mse, loss});
      if (r.floored > 0) {
        spdlog::debug("step {}: {} likelihoods hit the floor", step, r.floored);
      }
    }
    evaluate(epoch);
    if (on_epoch) on_epoch(epoch, result.log);
  }
  // A non-finite update on the very last step is caught here.
  if (!AllFinite(params)) {
    params.Restore(last_good);
    if (!failure_checkpoint.empty()) codec.Save(failure_checkpoint);
    throw Error(ErrorCode::kNonFinite, "non-finite parameters after the final step");
  }
  return result;
}

}  // namespace gvae
