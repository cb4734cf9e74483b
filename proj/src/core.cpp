// Copyright (c) 2026 The semix Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "semix/core.hpp"

#include <atomic>
#include <iostream>

namespace semix {

namespace {
std::atomic<bool> g_verbose{false};
}

void set_verbose(bool verbose) { g_verbose = verbose; }

void log_warning(std::string_view message) { std::cerr << "[semix] warning: " << message << '\n'; }

void log_info(std::string_view message) {
  if (g_verbose) std::cerr << "[semix] " << message << '\n';
}

}  // namespace semix
