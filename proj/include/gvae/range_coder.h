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

// Carry-less 32-bit range coder with 16-bit frequency precision, plus the
// symbol-stream layer used for every latent payload.
//
// Symbols are integers in [-kMaxAbsSymbol, kMaxAbsSymbol]. Each symbol is
// coded under its own FrequencyTable (pmf quantized to integer frequencies
// summing to 2^16, every entry >= 1). A table covers a contiguous support
// plus one escape entry; symbols outside the support are coded as the
// escape followed by the raw value under a flat 512-slot model.

#ifndef GVAE_RANGE_CODER_H_
#define GVAE_RANGE_CODER_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gvae {

inline constexpr int kFreqBits = 16;
inline constexpr uint32_t kFreqTotal = 1u << kFreqBits;
inline constexpr int32_t kMaxAbsSymbol = 255;

class RangeEncoder {
 public:
  // Codes the interval [cum, cum + freq) of a 2^16 total.
  void Encode(uint32_t cum, uint32_t freq);
  // Flushes one byte of state and returns the complete output.
  std::vector<uint8_t> Finish();

 private:
  // Emits the settled top byte of low, resolving a pending carry.
  void ShiftLow();

  uint64_t low_ = 0;  // 33 bits: bit 32 is a carry into the cached byte
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t pending_ = 0;  // 0xFF bytes waiting on the carry
  bool started_ = false;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  // The last three bytes of every stream are implicit zeros; reading past
  // them throws kTruncated.
  explicit RangeDecoder(std::span<const uint8_t> bytes);
  // Target frequency in [0, 2^16); throws kCorrupt otherwise.
  uint32_t DecodeFreq();
  // Must follow DecodeFreq with the interval containing the target.
  void Consume(uint32_t cum, uint32_t freq);
  size_t consumed() const { return pos_; }
  // True once all implicit tail bytes have been read.
  bool exhausted() const { return implicit_ == kImplicitTail; }

 private:
  static constexpr int kImplicitTail = 3;

  uint8_t NextByte();

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t step_ = 0;
  uint32_t code_ = 0;  // offset of the coded value from the interval start
  int implicit_ = 0;
};

struct FrequencyTable {
  int32_t min_symbol = 0;
  // cdf[j] is the cumulative frequency before entry j; entries are the
  // support symbols min_symbol.. in order, then the escape. cdf.back() = 2^16.
  std::vector<uint32_t> cdf;

  int32_t support_size() const { return static_cast<int32_t>(cdf.size()) - 2; }
  uint32_t freq(size_t j) const { return cdf[j + 1] - cdf[j]; }
};

// Integer frequencies summing to 2^16 with every entry >= 1. Rounding slack
// is assigned greedily where it costs the fewest expected bits.
std::vector<uint32_t> QuantizePmf(std::span<const double> probs);

// pmf covers the support [min_symbol, min_symbol + pmf.size()).
FrequencyTable MakeFrequencyTable(int32_t min_symbol,
                                  std::span<const double> pmf,
                                  double escape_mass);

// A table plus the offset added to its support for one symbol.
struct TableRef {
  const FrequencyTable* table = nullptr;
  int32_t shift = 0;
};
using PmfProvider = std::function<TableRef(size_t index)>;

void EncodeSymbol(RangeEncoder& enc, const TableRef& ref, int32_t symbol);
int32_t DecodeSymbol(RangeDecoder& dec, const TableRef& ref);

std::vector<uint8_t> EncodeStream(std::span<const int32_t> symbols,
                                  const PmfProvider& pmf);
// Throws kTruncated when the bytes run out and kCorrupt on an impossible
// state or unconsumed trailing bytes.
std::vector<int32_t> DecodeStream(std::span<const uint8_t> bytes, size_t count,
                                  const PmfProvider& pmf);

// Sum of -log2(freq / 2^16) over the stream, escapes included.
double IdealCodeLengthBits(std::span<const int32_t> symbols,
                           const PmfProvider& pmf);

}  // namespace gvae

#endif  // GVAE_RANGE_CODER_H_
