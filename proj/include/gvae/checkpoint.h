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

// Checkpoint container (little-endian throughout):
//
//   "GVAE"            4 bytes magic
//   version           u16 (currently 1)
//   entry count       u32
//   entries, each:
//     name length     u16, then that many bytes of name (no terminator)
//     ndim            u8, then ndim x u32 extents
//     payload         prod(extents) x IEEE-754 binary32
//
// The byte layout is also described in docs/formats.md.

#ifndef GVAE_CHECKPOINT_H_
#define GVAE_CHECKPOINT_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gvae/tensor.h"

namespace gvae {

inline constexpr uint16_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

std::vector<uint8_t> SerializeCheckpoint(const std::vector<NamedTensor>& entries);
// Throws kBadMagic / kBadVersion / kTruncated / kBadCheckpoint.
std::vector<NamedTensor> ParseCheckpoint(std::span<const uint8_t> bytes);

void WriteCheckpointFile(const std::string& path,
                         const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> ReadCheckpointFile(const std::string& path);

// 64-bit FNV-1a, stored big-end-first as 8 bytes.
std::array<uint8_t, 8> Fnv1a64(std::span<const uint8_t> bytes);

std::vector<uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace gvae

#endif  // GVAE_CHECKPOINT_H_
