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

#ifndef GVAE_ERROR_H_
#define GVAE_ERROR_H_

#include <stdexcept>
#include <string>

namespace gvae {

enum class ErrorCode {
  kShape,
  kDomain,
  kIndex,
  kMissingGradient,
  kInvalidArgument,
  kIo,
  kBadImage,
  kBadCheckpoint,
  kBadMagic,
  kBadVersion,
  kBadChecksum,
  kTruncated,
  kCorrupt,
  kNonFinite,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type; the code
// lets callers (notably the CLI) distinguish failure classes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

#define GVAE_CHECK(cond, code, msg)                 \
  do {                                              \
    if (!(cond)) throw ::gvae::Error((code), (msg)); \
  } while (0)

}  // namespace gvae

#endif  // GVAE_ERROR_H_
