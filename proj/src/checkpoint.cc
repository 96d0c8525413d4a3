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

#include "gvae/checkpoint.h"

#include <cstring>
#include <fstream>
#include <iterator>

#include "gvae/error.h"

namespace gvae {
namespace {

void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  void Need(size_t n) const {
    GVAE_CHECK(bytes_.size() - pos_ >= n, ErrorCode::kTruncated,
               "checkpoint ends at byte " + std::to_string(bytes_.size()) +
                   ", needed " + std::to_string(n) + " more at " +
                   std::to_string(pos_));
  }
  uint8_t U8() {
    Need(1);
    return bytes_[pos_++];
  }
  uint16_t U16() {
    Need(2);
    uint16_t v = static_cast<uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  uint32_t U32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const uint8_t> Bytes(size_t n) {
    Need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::vector<uint8_t> SerializeCheckpoint(const std::vector<NamedTensor>& entries) {
  std::vector<uint8_t> out = {'G', 'V', 'A', 'E'};
  PutU16(out, kCheckpointVersion);
  PutU32(out, static_cast<uint32_t>(entries.size()));
  for (const auto& e : entries) {
    GVAE_CHECK(e.name.size() < 65536, ErrorCode::kInvalidArgument,
               "checkpoint entry name too long");
    GVAE_CHECK(e.tensor.ndim() < 256, ErrorCode::kInvalidArgument,
               "checkpoint entry rank too large");
    PutU16(out, static_cast<uint16_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    out.push_back(static_cast<uint8_t>(e.tensor.ndim()));
    for (int64_t d : e.tensor.shape()) PutU32(out, static_cast<uint32_t>(d));
    for (double v : e.tensor.data()) {
      const float f = static_cast<float>(v);
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      PutU32(out, bits);
    }
  }
  return out;
}

std::vector<NamedTensor> ParseCheckpoint(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.Bytes(4);
  GVAE_CHECK(std::memcmp(magic.data(), "GVAE", 4) == 0, ErrorCode::kBadMagic,
             "not a checkpoint (magic mismatch)");
  const uint16_t version = r.U16();
  GVAE_CHECK(version == kCheckpointVersion, ErrorCode::kBadVersion,
             "checkpoint version " + std::to_string(version));
  const uint32_t count = r.U32();
  std::vector<NamedTensor> entries;
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = r.U16();
    auto name = r.Bytes(name_len);
    const uint8_t ndim = r.U8();
    Shape shape;
    uint64_t numel = 1;
    for (uint8_t d = 0; d < ndim; ++d) {
      shape.push_back(r.U32());
      numel *= static_cast<uint64_t>(shape.back());
      GVAE_CHECK(numel <= (1ull << 32), ErrorCode::kBadCheckpoint,
                 "checkpoint entry too large");
    }
    auto payload = r.Bytes(static_cast<size_t>(numel) * 4);
    std::vector<double> data(static_cast<size_t>(numel));
    for (size_t j = 0; j < data.size(); ++j) {
      uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<uint32_t>(payload[j * 4 + b]) << (8 * b);
      }
      float f;
      std::memcpy(&f, &bits, 4);
      data[j] = static_cast<double>(f);
    }
    entries.push_back(
        {std::string(name.begin(), name.end()), Tensor(shape, std::move(data))});
  }
  GVAE_CHECK(r.AtEnd(), ErrorCode::kBadCheckpoint,
             "trailing bytes after checkpoint directory");
  return entries;
}

std::array<uint8_t, 8> Fnv1a64(std::span<const uint8_t> bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  std::array<uint8_t, 8> out;
  for (int i = 0; i < 8; ++i) out[i] = static_cast<uint8_t>(h >> (56 - 8 * i));
  return out;
}

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  GVAE_CHECK(in.good(), ErrorCode::kIo, "cannot open " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  GVAE_CHECK(out.good(), ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  GVAE_CHECK(out.good(), ErrorCode::kIo, "short write to " + path);
}

void WriteCheckpointFile(const std::string& path,
                         const std::vector<NamedTensor>& entries) {
  WriteFileBytes(path, SerializeCheckpoint(entries));
}

std::vector<NamedTensor> ReadCheckpointFile(const std::string& path) {
  try {
    return ParseCheckpoint(ReadFileBytes(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(ErrorCode::kBadCheckpoint, path + ": " + e.what());
  }
}

}  // namespace gvae
