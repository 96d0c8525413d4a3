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

#include "gvae/logging.h"

#include <spdlog/cfg/helpers.h>
#include <spdlog/spdlog.h>

#include <cstdlib>

namespace gvae {

void ConfigureLogging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("GVAE_LOG")) {
    spdlog::cfg::helpers::load_levels(env);
  }
}

}  // namespace gvae
