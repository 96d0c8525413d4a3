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

#include "gvae/range_coder.h"

#include <algorithm>
#include <cmath>
#include <queue>

#include "gvae/error.h"

namespace gvae {
namespace {

constexpr uint32_t kTop = 1u << 24;
constexpr uint32_t kEscapeSlots = 512;
constexpr uint32_t kEscapeSlotFreq = kFreqTotal / kEscapeSlots;

}  // namespace

void RangeEncoder::Encode(uint32_t cum, uint32_t freq) {
  const uint32_t r = range_ >> kFreqBits;
  low_ += static_cast<uint64_t>(cum) * r;
  range_ = r * freq;
  while (range_ < kTop) {
    range_ <<= 8;
    ShiftLow();
  }
}

void RangeEncoder::ShiftLow() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    // The first cached byte is always zero and is never written.
    if (started_) out_.push_back(static_cast<uint8_t>(cache_ + carry));
    started_ = true;
    for (; pending_ > 0; --pending_) out_.push_back(static_cast<uint8_t>(0xFF + carry));
    cache_ = static_cast<uint8_t>(low_ >> 24);
  } else {
    ++pending_;
  }
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<uint8_t> RangeEncoder::Finish() {
  // range >= 2^24, so [low, low + range) holds a multiple of 2^24. Its top
  // byte is written; the three zero bytes after it are left implicit.
  low_ = (low_ + kTop - 1) & ~static_cast<uint64_t>(kTop - 1);
  ShiftLow();
  ShiftLow();
  std::vector<uint8_t> out;
  out.swap(out_);
  *this = RangeEncoder();
  return out;
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
}

uint8_t RangeDecoder::NextByte() {
  if (pos_ >= bytes_.size() && implicit_ < kImplicitTail) {
    ++implicit_;
    return 0;
  }
  GVAE_CHECK(pos_ < bytes_.size(), ErrorCode::kTruncated,
             "range decoder ran past the end of a " +
                 std::to_string(bytes_.size()) + "-byte payload");
  return bytes_[pos_++];
}

uint32_t RangeDecoder::DecodeFreq() {
  step_ = range_ >> kFreqBits;
  const uint32_t v = code_ / step_;
  GVAE_CHECK(v < kFreqTotal, ErrorCode::kCorrupt,
             "range decoder target outside the frequency total");
  return v;
}

void RangeDecoder::Consume(uint32_t cum, uint32_t freq) {
  code_ -= cum * step_;
  range_ = freq * step_;
  GVAE_CHECK(code_ < range_, ErrorCode::kCorrupt, "range decoder left its interval");
  while (range_ < kTop) {
    code_ = (code_ << 8) | NextByte();
    range_ <<= 8;
  }
}

std::vector<uint32_t> QuantizePmf(std::span<const double> probs) {
  const size_t n = probs.size();
  GVAE_CHECK(n >= 1 && n <= kFreqTotal, ErrorCode::kInvalidArgument,
             "pmf needs between 1 and 65536 entries");
  double total = 0.0;
  for (double p : probs) {
    GVAE_CHECK(p >= 0.0 && std::isfinite(p), ErrorCode::kInvalidArgument,
               "pmf entries must be finite and non-negative");
    total += p;
  }
  GVAE_CHECK(total > 0.0, ErrorCode::kInvalidArgument, "pmf has zero mass");
  std::vector<uint32_t> freq(n);
  int64_t sum = 0;
  for (size_t i = 0; i < n; ++i) {
    const double f = std::floor(probs[i] / total * kFreqTotal + 0.5);
    freq[i] = static_cast<uint32_t>(std::max(1.0, f));
    sum += freq[i];
  }
  // Remove or add one unit at a time where the expected cost (under the
  // target probabilities) changes least. Ties resolve to the lower index.
  using Item = std::pair<double, size_t>;
  auto cmp = [](const Item& a, const Item& b) {
    return a.first != b.first ? a.first > b.first : a.second > b.second;
  };
  while (sum != kFreqTotal) {
    std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
    const bool shrink = sum > kFreqTotal;
    for (size_t i = 0; i < n; ++i) {
      const double p = probs[i] / total;
      if (shrink) {
        if (freq[i] <= 1) continue;
        heap.push({p * std::log2(static_cast<double>(freq[i]) / (freq[i] - 1)), i});
      } else {
        heap.push({-p * std::log2(static_cast<double>(freq[i] + 1) / freq[i]), i});
      }
    }
    int64_t steps = std::min<int64_t>(std::llabs(sum - kFreqTotal),
                                      static_cast<int64_t>(heap.size()));
    GVAE_CHECK(steps > 0, ErrorCode::kInvalidArgument,
               "pmf has too many entries to quantize");
    // One unit per entry per round keeps the greedy choice accurate.
    while (steps-- > 0) {
      const size_t i = heap.top().second;
      heap.pop();
      if (shrink) {
        freq[i]--;
        sum--;
      } else {
        freq[i]++;
        sum++;
      }
    }
  }
  return freq;
}

FrequencyTable MakeFrequencyTable(int32_t min_symbol,
                                  std::span<const double> pmf,
                                  double escape_mass) {
  std::vector<double> probs(pmf.begin(), pmf.end());
  probs.push_back(std::max(escape_mass, 0.0));
  const std::vector<uint32_t> freq = QuantizePmf(probs);
  FrequencyTable t;
  t.min_symbol = min_symbol;
  t.cdf.resize(freq.size() + 1);
  t.cdf[0] = 0;
  for (size_t i = 0; i < freq.size(); ++i) t.cdf[i + 1] = t.cdf[i] + freq[i];
  return t;
}

void EncodeSymbol(RangeEncoder& enc, const TableRef& ref, int32_t symbol) {
  GVAE_CHECK(symbol >= -kMaxAbsSymbol && symbol <= kMaxAbsSymbol,
             ErrorCode::kInvalidArgument,
             "symbol " + std::to_string(symbol) + " outside the alphabet");
  const FrequencyTable& t = *ref.table;
  const int64_t j = static_cast<int64_t>(symbol) - ref.shift - t.min_symbol;
  if (j >= 0 && j < t.support_size()) {
    enc.Encode(t.cdf[static_cast<size_t>(j)], t.freq(static_cast<size_t>(j)));
    return;
  }
  const size_t esc = static_cast<size_t>(t.support_size());
  enc.Encode(t.cdf[esc], t.freq(esc));
  enc.Encode(static_cast<uint32_t>(symbol + kMaxAbsSymbol) * kEscapeSlotFreq,
             kEscapeSlotFreq);
}

int32_t DecodeSymbol(RangeDecoder& dec, const TableRef& ref) {
  const FrequencyTable& t = *ref.table;
  const uint32_t target = dec.DecodeFreq();
  // Largest j with cdf[j] <= target.
  const auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), target);
  const size_t j = static_cast<size_t>(it - t.cdf.begin()) - 1;
  dec.Consume(t.cdf[j], t.freq(j));
  if (j < static_cast<size_t>(t.support_size())) {
    return t.min_symbol + ref.shift + static_cast<int32_t>(j);
  }
  const uint32_t slot = dec.DecodeFreq() / kEscapeSlotFreq;
  GVAE_CHECK(slot <= 2 * kMaxAbsSymbol, ErrorCode::kCorrupt,
             "escaped symbol outside the alphabet");
  dec.Consume(slot * kEscapeSlotFreq, kEscapeSlotFreq);
  return static_cast<int32_t>(slot) - kMaxAbsSymbol;
}

std::vector<uint8_t> EncodeStream(std::span<const int32_t> symbols,
                                  const PmfProvider& pmf) {
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) EncodeSymbol(enc, pmf(i), symbols[i]);
  return enc.Finish();
}

std::vector<int32_t> DecodeStream(std::span<const uint8_t> bytes, size_t count,
                                  const PmfProvider& pmf) {
  RangeDecoder dec(bytes);
  std::vector<int32_t> out(count);
  for (size_t i = 0; i < count; ++i) out[i] = DecodeSymbol(dec, pmf(i));
  GVAE_CHECK(dec.consumed() == bytes.size() && dec.exhausted(), ErrorCode::kCorrupt,
             std::to_string(bytes.size() - dec.consumed()) +
                 " unconsumed bytes after the last symbol");
  return out;
}

double IdealCodeLengthBits(std::span<const int32_t> symbols,
                           const PmfProvider& pmf) {
  double bits = 0.0;
  for (size_t i = 0; i < symbols.size(); ++i) {
    const TableRef ref = pmf(i);
    const FrequencyTable& t = *ref.table;
    const int64_t j = static_cast<int64_t>(symbols[i]) - ref.shift - t.min_symbol;
    if (j >= 0 && j < t.support_size()) {
      bits += kFreqBits - std::log2(static_cast<double>(t.freq(static_cast<size_t>(j))));
    } else {
      bits += kFreqBits -
              std::log2(static_cast<double>(t.freq(static_cast<size_t>(t.support_size())))) +
              std::log2(static_cast<double>(kEscapeSlots));
    }
  }
  return bits;
}

}  // namespace gvae
