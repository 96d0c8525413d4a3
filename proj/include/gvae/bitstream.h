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

// Compressed-image container. Little-endian, byte offsets:
//
//    0  magic "GVC1"                          4 bytes
//    4  version                               u16 (= 1)
//    6  model checksum                        8 bytes
//   14  s (lower gain index)                  u8
//   15  l (interpolation coefficient)         binary32, a multiple of 1/1024
//   19  quantizer: bits 0-3 mode (0 round, 1 universal); bit 7 extrapolated
//   20  dither seed                           u64
//   28  image width                           u32
//   32  image height                          u32
//   36  payload count k                       u8 (1 = CVR, 2 = HCVR)
//   37  payload lengths                       k x u32
//       payloads, in order                    (hyper payload first for HCVR)
//
// The total size must equal 37 + 4k + sum(lengths) exactly.

#ifndef GVAE_BITSTREAM_H_
#define GVAE_BITSTREAM_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gvae/quantizer.h"

namespace gvae {

inline constexpr uint16_t kBitstreamVersion = 1;
inline constexpr size_t kBitstreamFixedHeaderBytes = 37;

using ModelChecksum = std::array<uint8_t, 8>;

struct BitstreamHeader {
  uint16_t version = kBitstreamVersion;
  ModelChecksum model_checksum{};
  uint8_t s = 0;
  float l = 0.0f;
  QuantizerMode quantizer = QuantizerMode::kRound;
  bool extrapolated = false;
  uint64_t dither_seed = 0;
  uint32_t width = 0;
  uint32_t height = 0;
};

struct Bitstream {
  BitstreamHeader header;
  std::vector<std::vector<uint8_t>> payloads;

  size_t payload_bytes() const;
};

// Rounds l to the nearest multiple of 1/1024; the header carries this value
// and both coder sides interpolate with it.
float QuantizeInterpolation(double l);

std::vector<uint8_t> PackBitstream(const Bitstream& stream);

// Throws kBadMagic, kBadVersion, kBadChecksum (when `expected` is given and
// differs), kTruncated, or kCorrupt for any other malformed field.
Bitstream UnpackBitstream(std::span<const uint8_t> bytes,
                          const ModelChecksum* expected = nullptr);

}  // namespace gvae

#endif  // GVAE_BITSTREAM_H_
