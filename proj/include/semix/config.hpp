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

// Flat key=value run configuration. Every key is checked against a fixed
// schema; unknown keys and unparsable values raise ConfigError.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "semix/corpus.hpp"
#include "semix/encoder.hpp"
#include "semix/trainer.hpp"

namespace semix {

class RunConfig {
 public:
  /// All schema keys at their defaults.
  RunConfig();

  static bool is_key(std::string_view key);
  static std::vector<std::string> keys();

  /// Validates and stores one value.
  void set(std::string_view key, std::string_view value);
  const std::string& get(std::string_view key) const;

  std::int64_t get_int(std::string_view key) const;
  double get_real(std::string_view key) const;
  bool get_bool(std::string_view key) const;

  /// Sorted `key=value` lines; stable input for the fingerprint.
  std::string canonical_text() const;
  /// 16 hex digits of FNV-1a over canonical_text().
  std::string fingerprint() const;

  TrainConfig train_config() const;
  ModelConfig model_config(std::size_t vocab_size, std::size_t num_classes) const;
  FewShotOptions few_shot_options() const;
  std::vector<std::uint64_t> seeds() const;

  bool operator==(const RunConfig& other) const { return values_ == other.values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

/// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Applies `--key=value` arguments in order.
void apply_overrides(RunConfig& config, const std::vector<std::pair<std::string, std::string>>& overrides);

std::string fnv1a_hex(std::string_view text);

}  // namespace semix
