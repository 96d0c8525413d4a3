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

#ifndef GVAE_DATASET_H_
#define GVAE_DATASET_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gvae/image.h"
#include "gvae/tensor.h"

namespace gvae {

// Seeded synthetic textures: multi-octave value noise, a color gradient and a
// few hard-edged shapes per image. Image i depends only on (seed, i).
std::vector<Image> ProceduralCorpus(int count, int extent, uint64_t seed);
Image ProceduralImage(int extent, uint64_t seed, uint64_t index);

// Every *.ppm file in `dir`, sorted by file name. Throws kIo if the directory
// is missing and kInvalidArgument if it holds no images.
std::vector<Image> LoadImageDirectory(const std::string& dir);

// `count` crops of size patch x patch, each from a uniformly chosen eligible
// image at a uniform offset, as an N,3,P,P tensor on [0, 1]. Images smaller
// than the patch are skipped with a warning; throws kInvalidArgument if none
// is large enough.
Tensor ExtractPatches(const std::vector<Image>& images, int patch, int count,
                      std::mt19937_64& rng);

// Uniform over [0, n - 1].
int SampleRateIndex(std::mt19937_64& rng, int n);

}  // namespace gvae

#endif  // GVAE_DATASET_H_
