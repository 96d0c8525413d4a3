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

#include "gvae/tensor.h"

#include <cmath>
#include <sstream>

#include "gvae/error.h"

namespace gvae {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kDomain: return "domain error";
    case ErrorCode::kIndex: return "index error";
    case ErrorCode::kMissingGradient: return "missing gradient";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBadImage: return "bad image";
    case ErrorCode::kBadCheckpoint: return "bad checkpoint";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadVersion: return "bad version";
    case ErrorCode::kBadChecksum: return "bad checksum";
    case ErrorCode::kTruncated: return "truncated input";
    case ErrorCode::kCorrupt: return "corrupt data";
    case ErrorCode::kNonFinite: return "non-finite value";
  }
  return "error";
}

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)),
      data_(static_cast<size_t>(NumElements(shape_)), fill) {
  for (int64_t d : shape_) {
    GVAE_CHECK(d >= 0, ErrorCode::kShape,
               "negative extent in " + ShapeString(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  GVAE_CHECK(static_cast<int64_t>(data_.size()) == NumElements(shape_),
             ErrorCode::kShape,
             "data length " + std::to_string(data_.size()) +
                 " does not match shape " + ShapeString(shape_));
}

void Tensor::Fill(double v) {
  for (double& x : data_) x = v;
}

Tensor Tensor::Reshaped(Shape shape) const {
  GVAE_CHECK(NumElements(shape) == numel(), ErrorCode::kShape,
             "cannot reshape " + ShapeString(shape_) + " to " +
                 ShapeString(shape));
  return Tensor(std::move(shape), data_);
}

bool Tensor::AllFinite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void AddInPlace(Tensor& a, const Tensor& b) {
  GVAE_CHECK(a.shape() == b.shape(), ErrorCode::kShape,
             "AddInPlace " + ShapeString(a.shape()) + " vs " +
                 ShapeString(b.shape()));
  double* pa = a.ptr();
  const double* pb = b.ptr();
  for (int64_t i = 0; i < a.numel(); ++i) pa[i] += pb[i];
}

}  // namespace gvae
