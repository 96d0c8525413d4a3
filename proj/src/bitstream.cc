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

#include "gvae/bitstream.h"

#include <cmath>
#include <cstring>

#include "gvae/error.h"

namespace gvae {
namespace {

void Put(std::vector<uint8_t>& out, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t Get(std::span<const uint8_t> in, size_t pos, int bytes) {
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(in[pos + i]) << (8 * i);
  return v;
}

}  // namespace

size_t Bitstream::payload_bytes() const {
  size_t n = 0;
  for (const auto& p : payloads) n += p.size();
  return n;
}

float QuantizeInterpolation(double l) {
  return static_cast<float>(std::round(l * 1024.0) / 1024.0);
}

std::vector<uint8_t> PackBitstream(const Bitstream& stream) {
  const BitstreamHeader& h = stream.header;
  GVAE_CHECK(h.quantizer != QuantizerMode::kNoise, ErrorCode::kInvalidArgument,
             "noise quantization cannot be stored in a bitstream");
  GVAE_CHECK(stream.payloads.size() >= 1 && stream.payloads.size() <= 2,
             ErrorCode::kInvalidArgument, "bitstream carries one or two payloads");
  GVAE_CHECK(std::isfinite(h.l) && (h.extrapolated || (h.l >= 0.0f && h.l <= 1.0f)),
             ErrorCode::kInvalidArgument, "interpolation coefficient out of range");
  std::vector<uint8_t> out = {'G', 'V', 'C', '1'};
  Put(out, h.version, 2);
  out.insert(out.end(), h.model_checksum.begin(), h.model_checksum.end());
  out.push_back(h.s);
  uint32_t lbits;
  std::memcpy(&lbits, &h.l, 4);
  Put(out, lbits, 4);
  out.push_back(static_cast<uint8_t>(static_cast<uint8_t>(h.quantizer) |
                                     (h.extrapolated ? 0x80 : 0x00)));
  Put(out, h.dither_seed, 8);
  Put(out, h.width, 4);
  Put(out, h.height, 4);
  out.push_back(static_cast<uint8_t>(stream.payloads.size()));
  for (const auto& p : stream.payloads) {
    GVAE_CHECK(p.size() <= 0xFFFFFFFFu, ErrorCode::kInvalidArgument,
               "payload too large");
    Put(out, p.size(), 4);
  }
  for (const auto& p : stream.payloads) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Bitstream UnpackBitstream(std::span<const uint8_t> bytes,
                          const ModelChecksum* expected) {
  GVAE_CHECK(bytes.size() >= 4, ErrorCode::kTruncated, "bitstream too short");
  GVAE_CHECK(std::memcmp(bytes.data(), "GVC1", 4) == 0, ErrorCode::kBadMagic,
             "not a compressed image (magic mismatch)");
  GVAE_CHECK(bytes.size() >= 6, ErrorCode::kTruncated, "bitstream too short");
  Bitstream out;
  BitstreamHeader& h = out.header;
  h.version = static_cast<uint16_t>(Get(bytes, 4, 2));
  GVAE_CHECK(h.version == kBitstreamVersion, ErrorCode::kBadVersion,
             "bitstream version " + std::to_string(h.version));
  GVAE_CHECK(bytes.size() >= kBitstreamFixedHeaderBytes, ErrorCode::kTruncated,
             "bitstream header truncated");
  std::memcpy(h.model_checksum.data(), bytes.data() + 6, 8);
  if (expected != nullptr) {
    GVAE_CHECK(h.model_checksum == *expected, ErrorCode::kBadChecksum,
               "bitstream was produced by a different model");
  }
  h.s = bytes[14];
  const uint32_t lbits = static_cast<uint32_t>(Get(bytes, 15, 4));
  std::memcpy(&h.l, &lbits, 4);
  const uint8_t q = bytes[19];
  h.extrapolated = (q & 0x80) != 0;
  const uint8_t mode = q & 0x0F;
  GVAE_CHECK((q & 0x70) == 0 && mode <= 1, ErrorCode::kCorrupt,
             "unknown quantizer byte " + std::to_string(q));
  h.quantizer = static_cast<QuantizerMode>(mode);
  GVAE_CHECK(std::isfinite(h.l) &&
                 (h.extrapolated || (h.l >= 0.0f && h.l <= 1.0f)),
             ErrorCode::kCorrupt, "interpolation coefficient out of range");
  h.dither_seed = Get(bytes, 20, 8);
  h.width = static_cast<uint32_t>(Get(bytes, 28, 4));
  h.height = static_cast<uint32_t>(Get(bytes, 32, 4));
  GVAE_CHECK(h.width > 0 && h.height > 0, ErrorCode::kCorrupt,
             "zero image extent");
  const size_t count = bytes[36];
  GVAE_CHECK(count >= 1 && count <= 2, ErrorCode::kCorrupt,
             "payload count " + std::to_string(count));
  const size_t table_end = kBitstreamFixedHeaderBytes + 4 * count;
  GVAE_CHECK(bytes.size() >= table_end, ErrorCode::kTruncated,
             "payload length table truncated");
  uint64_t total = table_end;
  std::vector<uint64_t> lengths(count);
  for (size_t i = 0; i < count; ++i) {
    lengths[i] = Get(bytes, kBitstreamFixedHeaderBytes + 4 * i, 4);
    total += lengths[i];
  }
  GVAE_CHECK(total <= bytes.size(), ErrorCode::kTruncated,
             "payloads truncated: header announces " + std::to_string(total) +
                 " bytes, have " + std::to_string(bytes.size()));
  GVAE_CHECK(total == bytes.size(), ErrorCode::kCorrupt,
             "trailing bytes after the last payload");
  size_t pos = table_end;
  for (size_t i = 0; i < count; ++i) {
    out.payloads.emplace_back(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                              bytes.begin() + static_cast<std::ptrdiff_t>(pos + lengths[i]));
    pos += lengths[i];
  }
  return out;
}

}  // namespace gvae
