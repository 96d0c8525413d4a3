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

#ifndef GVAE_LOGGING_H_
#define GVAE_LOGGING_H_

namespace gvae {

// Sets log levels from the GVAE_LOG environment variable using spdlog's
// level syntax ("debug", "info", "off", ...). Defaults to warnings only.
void ConfigureLogging();

}  // namespace gvae

#endif  // GVAE_LOGGING_H_
