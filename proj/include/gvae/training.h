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

#ifndef GVAE_TRAINING_H_
#define GVAE_TRAINING_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gvae/codec.h"
#include "gvae/image.h"

namespace gvae {

struct TrainConfig {
  CodecConfig codec;
  // Baseline mode trains a gain-free codec at a single multiplier.
  bool baseline = false;
  double baseline_beta = 0.007;

  int epochs = 12;
  // 0 means one pass over the corpus: ceil(images / batch_size).
  int steps_per_epoch = 0;
  int batch_size = 8;
  double learning_rate = 1e-4;
  // Learning rate halves when this epoch starts (0-based); < 0 disables.
  int lr_halve_epoch = 6;
  // Learning-rate multiplier for gain matrices.
  double gain_lr_scale = 1.0;
  // Joint gradient L2 norm limit; 0 disables clipping.
  double grad_clip = 0.0;
  int patch_size = 32;
  uint64_t seed = 1;

  // Image directory; empty selects the procedural corpus.
  std::string dataset;
  int corpus_images = 200;
  int corpus_extent = 64;
  // Held-out procedural images (seeded independently) for per-epoch eval.
  int heldout_images = 8;

  // Throws kInvalidArgument on an inconsistent configuration.
  void Validate() const;
  // Codec config actually trained (baseline mode applied).
  CodecConfig EffectiveCodec() const;
};

// Parses "key = value" lines ('#' starts a comment) onto `config`. Unknown
// keys and malformed values throw kInvalidArgument.
void ApplyConfigText(const std::string& text, TrainConfig& config);
void ApplyConfigFile(const std::string& path, TrainConfig& config);
// Applies one key/value pair, as read from a file or a flag.
void ApplyConfigValue(const std::string& key, const std::string& value,
                      TrainConfig& config);

struct StepRecord {
  int64_t step = 0;
  int s = 0;
  double bits = 0.0;
  double distortion = 0.0;  // MSE on [0, 1] pixels
  double loss = 0.0;
};

struct EvalRecord {
  int epoch = 0;  // -1 is the initial model
  int s = 0;
  double bpp = 0.0;
  double distortion = 0.0;
  double psnr_db = 0.0;
  double loss = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;

  // step,s,bits,distortion,loss
  std::string StepsCsv() const;
  // epoch,s,bpp,distortion,psnr_db,loss
  std::string EvalsCsv() const;
  // Mean held-out loss over rate points for one epoch.
  double MeanEvalLoss(int epoch) const;
};

struct TrainResult {
  Codec codec;
  TrainLog log;
};

// Called after every epoch with the epoch index and the log so far.
using EpochCallback = std::function<void(int, const TrainLog&)>;

// Multi-rate (or baseline) training with Adam. Each step draws one rate
// index for the whole batch. A non-finite loss or gradient restores the last
// good parameters, writes them to `failure_checkpoint` when non-empty and
// throws kNonFinite.
TrainResult Train(const TrainConfig& config, const std::vector<Image>& corpus,
                  const std::vector<Image>& heldout,
                  const std::string& failure_checkpoint = "",
                  const EpochCallback& on_epoch = nullptr);

// Corpus and held-out images implied by the config.
std::vector<Image> TrainingCorpus(const TrainConfig& config);
std::vector<Image> HeldoutImages(const TrainConfig& config);

// Held-out evaluation at every rate point with a fixed noise realization.
std::vector<EvalRecord> EvaluateHeldout(const Codec& codec, const Tensor& batch,
                                        int epoch, uint64_t seed);

}  // namespace gvae

#endif  // GVAE_TRAINING_H_
