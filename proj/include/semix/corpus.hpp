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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semix/core.hpp"

namespace semix {

struct RawRecord {
  std::string text;
  std::string label_name;

  bool operator==(const RawRecord&) const = default;
};

enum class DataFormat { tsv, jsonl };

DataFormat parse_data_format(std::string_view name);

struct LoadedRecords {
  std::vector<RawRecord> records;
  std::size_t malformed = 0;
};

/// Reads `label<TAB>text` rows or JSON Lines objects with "label" and "text".
/// Malformed rows are skipped with a warning; more than 10% malformed, an
/// unreadable file, or no usable rows at all is a DataError.
LoadedRecords load_dataset(const std::filesystem::path& path, DataFormat format);

/// Lowercases ASCII and splits on whitespace and ASCII punctuation.
std::vector<std::string> tokenize(std::string_view text);

class Vocab {
 public:
  static constexpr std::string_view kPadToken = "[PAD]";
  static constexpr std::string_view kUnkToken = "[UNK]";

  Vocab();

  /// Appends a token and returns its id; existing tokens keep their id.
  TokenId add(const std::string& token);

  TokenId lookup(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// One token per line, line number = id.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Tokens with corpus frequency >= min_freq, ordered by descending
/// frequency then lexicographically, receive ids from 2 upwards.
Vocab build_vocab(std::span<const RawRecord> records, int min_freq);

/// Label name -> class index; sorted by name so indices are stable.
using LabelMap = std::map<std::string, int>;

LabelMap make_label_map(std::span<const RawRecord> records);
std::vector<std::string> label_names(const LabelMap& labels);

struct Example {
  std::size_t id = 0;
  std::vector<TokenId> token_ids;
  std::vector<std::uint8_t> mask;
  int label = 0;
  VectorXd one_hot;

  /// Number of real (non-pad) tokens; they form a prefix.
  Index length() const;

  bool operator==(const Example& other) const {
    return id == other.id && token_ids == other.token_ids && mask == other.mask && label == other.label &&
           one_hot == other.one_hot;
  }
};

VectorXd one_hot(int label, int num_classes);

/// Truncates to max_len and right-pads with PAD.
Example encode(const RawRecord& record, const Vocab& vocab, const LabelMap& labels, int max_len,
               std::size_t id = 0);

/// Space-joined in-vocabulary tokens of the non-pad prefix.
std::string decode(const Example& example, const Vocab& vocab);

/// Record ids (indices into the loaded record list) of each subset.
struct SplitManifest {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
  int shots_per_class = 0;
  std::uint64_t seed = 0;

  bool operator==(const SplitManifest&) const = default;
};

struct FewShotOptions {
  int shots_per_class = 10;
  double dev_fraction = 0.25;
  std::size_t dev_max = 500;
  std::uint64_t seed = 0;
};

/// Per-class uniform sampling without replacement for train, then dev from
/// the remaining records. Records with index >= first_test_id form the
/// held-out test set when present; otherwise test is the remainder.
SplitManifest sample_few_shot(std::span<const RawRecord> records, const FewShotOptions& options,
                              std::optional<std::size_t> first_test_id = std::nullopt);

struct FewShotSplit {
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;
  int shots_per_class = 0;
  std::uint64_t seed = 0;
};

FewShotSplit materialize(std::span<const RawRecord> records, const SplitManifest& manifest, const Vocab& vocab,
                         const LabelMap& labels, int max_len);

void write_manifest(const SplitManifest& manifest, const std::filesystem::path& path);
SplitManifest read_manifest(const std::filesystem::path& path);

/// records.tsv: `id<TAB>label<TAB>text`, used by prepared split directories.
void write_records(std::span<const RawRecord> records, const std::filesystem::path& path);
std::vector<RawRecord> read_records(const std::filesystem::path& path);

}  // namespace semix
