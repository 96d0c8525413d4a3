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

// Command-line front end: train / encode / decode / rd-sweep / overhead /
// selftest. Exit codes are listed in kUsageFooter.

#include <spdlog/spdlog.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gvae/checkpoint.h"
#include "gvae/codec.h"
#include "gvae/dataset.h"
#include "gvae/error.h"
#include "gvae/image.h"
#include "gvae/logging.h"
#include "gvae/selftest.h"
#include "gvae/sweep.h"
#include "gvae/training.h"
#include "json.hpp"

namespace gvae {
namespace {

enum ExitCode {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitBadImage = 3,
  kExitBadCheckpoint = 4,
  kExitRateOutOfRange = 5,
  kExitBadBitstream = 6,
  kExitSelftestFailed = 7,
  kExitTrainingFailed = 8,
};

constexpr const char* kUsageFooter =
    "Exit codes: 0 ok, 1 other error, 2 usage, 3 bad image, 4 bad checkpoint,\n"
    "5 rate selector out of range, 6 bad bitstream, 7 selftest failure,\n"
    "8 training failure. GVAE_LOG sets verbosity (e.g. GVAE_LOG=info).";

// Error raised at a known stage, carrying the exit code for that stage.
struct StageError {
  ExitCode code;
  std::string message;
};

template <typename F>
auto Stage(ExitCode code, const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw StageError{code, what + ": " + e.what()};
  }
}

Codec LoadModel(const std::string& path) {
  return Stage(kExitBadCheckpoint, "cannot load model " + path, [&] {
    Codec codec = Codec::Load(path);
    codec.Freeze();
    return codec;
  });
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<uint64_t> seed;
  std::string dataset;
  std::string out;
  std::string log;
};

int RunTrain(const TrainArgs& a) {
  TrainConfig config;
  Stage(kExitUsage, "bad training configuration", [&] {
    if (!a.config.empty()) ApplyConfigFile(a.config, config);
    for (const std::string& kv : a.overrides) {
      const size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::kInvalidArgument, "--set expects key=value, got '" + kv + "'");
      }
      ApplyConfigValue(kv.substr(0, eq), kv.substr(eq + 1), config);
    }
    if (a.seed) config.seed = *a.seed;
    if (!a.dataset.empty()) config.dataset = a.dataset;
    config.Validate();
  });
  const std::vector<Image> corpus =
      Stage(kExitBadImage, "cannot load training images", [&] { return TrainingCorpus(config); });
  const std::vector<Image> heldout = HeldoutImages(config);
  const std::string prefix = a.log.empty() ? a.out : a.log;
  TrainResult result = Stage(kExitTrainingFailed, "training failed", [&] {
    return Train(config, corpus, heldout, a.out + ".failed", [&](int epoch, const TrainLog& log) {
      spdlog::info("epoch {} done, mean held-out loss {:.4f}", epoch, log.MeanEvalLoss(epoch));
    });
  });
  Stage(kExitFailure, "cannot write outputs", [&] {
    result.codec.Save(a.out);
    const std::string steps = result.log.StepsCsv(), evals = result.log.EvalsCsv();
    WriteFileBytes(prefix + ".steps.csv", std::vector<uint8_t>(steps.begin(), steps.end()));
    WriteFileBytes(prefix + ".evals.csv", std::vector<uint8_t>(evals.begin(), evals.end()));
  });
  const int last = config.epochs - 1;
  for (const EvalRecord& e : result.log.evals) {
    if (e.epoch == last) {
      std::printf("s=%d bpp=%.4f psnr_db=%.2f loss=%.4f\n", e.s, e.bpp, e.psnr_db, e.loss);
    }
  }
  std::printf("wrote %s\n", a.out.c_str());
  return kExitOk;
}

struct SelectorArgs {
  std::optional<double> q;
  std::optional<int> s;
  std::optional<double> l;
  bool extrapolate = false;
};

RateSelector ResolveSelector(const SelectorArgs& a, const Codec& codec) {
  return Stage(kExitRateOutOfRange, "rate selector out of range", [&] {
    const int n = codec.config().RateCount();
    if (a.q) {
      if (n < 2) {
        GVAE_CHECK(*a.q == 0.0, ErrorCode::kIndex, "fixed-rate model only supports q = 0");
        return RateSelector{0, 0.0};
      }
      return SelectorFromQ(*a.q, n, a.extrapolate);
    }
    const RateSelector sel{a.s.value_or(0), a.l.value_or(0.0)};
    if (n < 2) {
      GVAE_CHECK(sel.s == 0 && sel.l == 0.0, ErrorCode::kIndex,
                 "fixed-rate model only supports s = 0, l = 0");
    } else {
      ValidateSelector(sel, n, a.extrapolate);
    }
    return sel;
  });
}

struct EncodeArgs {
  std::string model, image, out;
  SelectorArgs sel;
  std::string quantizer = "round";
  uint64_t seed = 0;
};

int RunEncode(const EncodeArgs& a) {
  const QuantizerMode mode =
      Stage(kExitUsage, "bad --quantizer", [&] { return ParseQuantizerMode(a.quantizer); });
  if (mode == QuantizerMode::kNoise) {
    throw StageError{kExitUsage, "--quantizer must be round or universal"};
  }
  const Codec codec = LoadModel(a.model);
  const Image image = Stage(kExitBadImage, "cannot read image " + a.image, [&] { return ReadPpm(a.image); });
  const RateSelector sel = ResolveSelector(a.sel, codec);
  EncodeOptions opt;
  opt.quantizer = mode;
  opt.dither_seed = a.seed;
  opt.allow_extrapolation = a.sel.extrapolate;
  const EncodedImage e = Stage(kExitRateOutOfRange, "cannot encode", [&] {
    return codec.Encode(image, sel, opt);
  });
  Stage(kExitFailure, "cannot write " + a.out, [&] { WriteFileBytes(a.out, e.bytes); });
  std::printf("bpp=%.6f s=%d l=%.6f bytes=%zu\n", e.bpp, e.stream.header.s,
              static_cast<double>(e.stream.header.l), e.bytes.size());
  return kExitOk;
}

struct DecodeArgs {
  std::string model, bitstream, out;
  std::optional<int> s;
  std::optional<double> l;
};

int RunDecode(const DecodeArgs& a) {
  const Codec codec = LoadModel(a.model);
  const std::vector<uint8_t> bytes =
      Stage(kExitBadBitstream, "cannot read " + a.bitstream, [&] { return ReadFileBytes(a.bitstream); });
  DecodeOptions opt;
  if (a.s || a.l) opt.selector_override = RateSelector{a.s.value_or(0), a.l.value_or(0.0)};
  const Image out = Stage(kExitBadBitstream, "cannot decode " + a.bitstream,
                          [&] { return codec.Decode(bytes, opt); });
  Stage(kExitFailure, "cannot write " + a.out, [&] { WritePpm(a.out, out); });
  std::printf("decoded %dx%d\n", out.width, out.height);
  return kExitOk;
}

struct SweepArgs {
  std::string model, images, out, format = "csv", quantizer = "round";
  int procedural = 0, extent = 64, jobs = 1;
  double step = 0.1;
  std::vector<double> q;
  uint64_t seed = 0;
  bool extrapolate = false;
};

void Emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    Stage(kExitFailure, "cannot write " + out,
          [&] { WriteFileBytes(out, std::vector<uint8_t>(text.begin(), text.end())); });
  }
}

int RunSweep(const SweepArgs& a) {
  SweepOptions opt;
  opt.quantizer = Stage(kExitUsage, "bad --quantizer", [&] { return ParseQuantizerMode(a.quantizer); });
  opt.dither_seed = a.seed;
  opt.jobs = a.jobs;
  opt.allow_extrapolation = a.extrapolate;
  if (opt.quantizer == QuantizerMode::kNoise) {
    throw StageError{kExitUsage, "--quantizer must be round or universal"};
  }
  const Codec codec = LoadModel(a.model);
  const std::vector<Image> images = Stage(kExitBadImage, "cannot load evaluation images", [&] {
    if (!a.images.empty()) return LoadImageDirectory(a.images);
    return ProceduralCorpus(a.procedural, a.extent, a.seed);
  });
  const int n = codec.config().RateCount();
  const std::vector<double> grid = a.q.empty() ? QGrid(n, a.step) : a.q;
  const auto points = Stage(kExitRateOutOfRange, "sweep failed", [&] {
    return RdSweep(codec, images, grid, opt);
  });
  for (const RdPoint& p : points) {
    if (p.ms_ssim_reduced) {
      spdlog::warn("MS-SSIM used fewer than five scales on small images");
      break;
    }
  }
  Emit(a.format == "json" ? RdPointsJson(points) : RdPointsCsv(points), a.out);
  return kExitOk;
}

struct OverheadArgs {
  std::string model, format = "csv";
  int64_t height = 256, width = 256;
  OverheadInput in;
};

int RunOverhead(const OverheadArgs& a) {
  OverheadReport r;
  if (!a.model.empty()) {
    const Codec codec = LoadModel(a.model);
    r = codec.MeasuredOverhead(a.height, a.width);
  } else {
    r = ComputeOverhead(a.in);
  }
  if (a.format == "json") {
    nlohmann::json j = {{"params", r.params},
                        {"flops", r.flops},
                        {"params_percent", r.params_percent},
                        {"flops_percent", r.flops_percent}};
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    std::printf("params,flops,params_percent,flops_percent\n%lld,%lld,%.6f,%.6f\n",
                static_cast<long long>(r.params), static_cast<long long>(r.flops),
                r.params_percent, r.flops_percent);
  }
  return kExitOk;
}

int RunSelftestCommand(uint64_t seed, bool corrupt) {
  SelftestOptions opt;
  opt.seed = seed;
  opt.corrupt_embedded_table = corrupt;
  const auto checks = RunSelftest(opt);
  std::fputs(FormatSelftestReport(checks).c_str(), stdout);
  for (const SelftestCheck& c : checks) {
    if (!c.passed) return kExitSelftestFailed;
  }
  return kExitOk;
}

int Main(int argc, char** argv) {
  ConfigureLogging();
  CLI::App app{"Continuously variable-rate learned image codec"};
  app.footer(kUsageFooter);
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a multi-rate or fixed-rate model");
  t->add_option("--config", train.config, "Key-value config file")->check(CLI::ExistingFile);
  t->add_option("--set", train.overrides, "Override one config key (key=value)");
  t->add_option("--seed", train.seed, "Seed for initialization, patches and rate draws");
  t->add_option("--dataset", train.dataset, "Directory of .ppm training images");
  t->add_option("--out", train.out, "Output checkpoint")->required();
  t->add_option("--log", train.log, "Prefix for <prefix>.steps.csv / .evals.csv (default: --out)");

  EncodeArgs enc;
  auto* e = app.add_subcommand("encode", "Compress a PPM image");
  e->add_option("model", enc.model, "Checkpoint")->required();
  e->add_option("image", enc.image, "Input .ppm image")->required();
  e->add_option("--out", enc.out, "Output bitstream")->required();
  auto* eq = e->add_option("--q", enc.sel.q, "Rate dial in [0, n-1]");
  auto* es = e->add_option("--s", enc.sel.s, "Lower gain index");
  auto* el = e->add_option("--l", enc.sel.l, "Interpolation coefficient");
  eq->excludes(es)->excludes(el);
  e->add_option("--quantizer", enc.quantizer, "round or universal");
  e->add_option("--seed", enc.seed, "Dither seed for universal quantization");
  e->add_flag("--extrapolate", enc.sel.extrapolate, "Allow l outside [0, 1]");

  DecodeArgs dec;
  auto* d = app.add_subcommand("decode", "Decompress a bitstream to PPM");
  d->add_option("model", dec.model, "Checkpoint")->required();
  d->add_option("bitstream", dec.bitstream, "Input bitstream")->required();
  d->add_option("--out", dec.out, "Output .ppm image")->required();
  d->add_option("--s", dec.s, "Override the inverse-gain index (diagnostics)");
  d->add_option("--l", dec.l, "Override the inverse-gain coefficient (diagnostics)");

  SweepArgs sweep;
  auto* r = app.add_subcommand("rd-sweep", "Rate-distortion sweep over q");
  r->add_option("model", sweep.model, "Checkpoint")->required();
  auto* ri = r->add_option("--images", sweep.images, "Directory of .ppm evaluation images");
  auto* rp = r->add_option("--procedural", sweep.procedural, "Use N procedural images instead");
  ri->excludes(rp);
  r->add_option("--extent", sweep.extent, "Procedural image size");
  r->add_option("--step", sweep.step, "q grid step");
  r->add_option("--q", sweep.q, "Explicit q values");
  r->add_option("--quantizer", sweep.quantizer, "round or universal");
  r->add_option("--seed", sweep.seed, "Dither and procedural image seed");
  r->add_option("--jobs", sweep.jobs, "Worker threads")->check(CLI::PositiveNumber);
  r->add_flag("--extrapolate", sweep.extrapolate, "Allow q outside [0, n-1]");
  r->add_option("--format", sweep.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  r->add_option("--out", sweep.out, "Output file (default stdout)");

  OverheadArgs over;
  auto* o = app.add_subcommand("overhead", "Gain-unit parameter and FLOP overhead");
  o->add_option("--model", over.model, "Measure against this checkpoint's network");
  o->add_option("--height", over.height, "Image height for --model");
  o->add_option("--width", over.width, "Image width for --model");
  o->add_option("--c", over.in.c, "Latent channels");
  o->add_option("--n", over.in.n, "Gain vectors");
  o->add_option("--latent-height", over.in.h, "Latent height");
  o->add_option("--latent-width", over.in.w, "Latent width");
  o->add_option("--c-hp", over.in.c_hp, "Hyper-latent channels");
  o->add_option("--n-hp", over.in.n_hp, "Hyper gain vectors");
  o->add_option("--hyper-height", over.in.h_hp, "Hyper-latent height");
  o->add_option("--hyper-width", over.in.w_hp, "Hyper-latent width");
  o->add_option("--base-params", over.in.base_params, "Base model parameter count");
  o->add_option("--base-flops", over.in.base_flops, "Base model FLOPs");
  o->add_option("--format", over.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  uint64_t selftest_seed = 1;
  bool corrupt_table = false;
  auto* st = app.add_subcommand("selftest", "Run the embedded invariant suite");
  st->add_option("--seed", selftest_seed, "Seed for randomized checks");
  st->add_flag("--corrupt-table", corrupt_table, "Fault injection: damage the embedded table")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*t) return RunTrain(train);
    if (*e) {
      if (!enc.sel.q && !enc.sel.s) {
        throw StageError{kExitUsage, "encode needs --q or --s/--l"};
      }
      return RunEncode(enc);
    }
    if (*d) return RunDecode(dec);
    if (*r) {
      if (sweep.images.empty() && sweep.procedural <= 0) {
        throw StageError{kExitUsage, "rd-sweep needs --images DIR or --procedural N"};
      }
      return RunSweep(sweep);
    }
    if (*o) return RunOverhead(over);
    if (*st) return RunSelftestCommand(selftest_seed, corrupt_table);
  } catch (const StageError& err) {
    std::fprintf(stderr, "error: %s\n", err.message.c_str());
    return err.code;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace gvae

int main(int argc, char** argv) { return gvae::Main(argc, argv); }
