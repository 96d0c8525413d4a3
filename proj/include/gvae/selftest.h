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

#ifndef GVAE_SELFTEST_H_
#define GVAE_SELFTEST_H_

#include <cstdint>
#include <string>
#include <vector>

namespace gvae {

struct SelftestOptions {
  uint64_t seed = 1;
  // Fault injection: damages the embedded reference frequency table so the
  // coder checks must fail.
  bool corrupt_embedded_table = false;
};

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Embedded invariant suite: range-coder round trips, gain algebra, gradient
// spot checks, overhead arithmetic, container parsing and a tiny codec round
// trip. Deterministic for a given seed.
std::vector<SelftestCheck> RunSelftest(const SelftestOptions& options = {});

// One "PASS name" / "FAIL name: detail" line per check.
std::string FormatSelftestReport(const std::vector<SelftestCheck>& checks);

}  // namespace gvae

#endif  // GVAE_SELFTEST_H_
