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
#include <string>
#include <utility>
#include <vector>

#include "semix/config.hpp"
#include "semix/corpus.hpp"
#include "semix/encoder.hpp"
#include "semix/evaluate.hpp"
#include "semix/trainer.hpp"

namespace semix {

/// Record pool plus optional held-out test records appended at the end.
struct Dataset {
  std::vector<RawRecord> records;
  std::optional<std::size_t> first_test_id;
  Vocab vocab;
  LabelMap labels;
};

/// Vocabulary and label map come from `pool` only.
Dataset make_dataset(std::vector<RawRecord> pool, std::optional<std::vector<RawRecord>> test, int min_freq);

struct SeedRun {
  std::uint64_t seed = 0;
  double dev_accuracy = 0;   // best dev accuracy over stage 2
  double test_accuracy = 0;  // at the best dev checkpoint
  bool failed = false;
  std::string error;
};

struct EvalReport {
  std::vector<SeedRun> runs;  // sorted by seed
  double mean = 0;
  double sd = 0;
  double dev_mean = 0;
  double dev_sd = 0;
  std::size_t n_seeds = 0;  // successful runs
  std::string fingerprint;

  /// Aggregates test (and dev) accuracies of the successful runs.
  static EvalReport from_runs(std::vector<SeedRun> runs, std::string fingerprint);
};

struct MeanSd {
  double mean = 0;
  double sd = 0;  // sample standard deviation, 0 for one value
};

/// Order-independent: values are sorted before summation.
MeanSd mean_sd(std::vector<double> values);

/// One full pipeline run for `seed`: split sampling, initialisation and
/// training all derive from it.
PipelineResult run_seed(const RunConfig& config, std::uint64_t seed, const Dataset& data,
                        const std::optional<std::filesystem::path>& run_dir = std::nullopt);

/// Per-seed runs; a failing seed is flagged and the rest still aggregate.
/// With `run_root`, each seed writes run_root/seed<N>/.
EvalReport multi_seed(const RunConfig& config, std::vector<std::uint64_t> seeds, const Dataset& data,
                      const std::optional<std::filesystem::path>& run_root = std::nullopt);

using AblationAxis = std::pair<std::string, std::vector<std::string>>;

struct AblationRow {
  std::vector<std::pair<std::string, std::string>> point;
  EvalReport report;
};

/// Every key and value is validated before the first run.
std::vector<AblationRow> ablation_matrix(const RunConfig& base, const std::vector<AblationAxis>& axes,
                                         const Dataset& data,
                                         const std::optional<std::filesystem::path>& run_root = std::nullopt);

/// Lines of the form `key=v1,v2,...`; blank lines and `#` comments skipped.
std::vector<AblationAxis> parse_axes(std::string_view text);

/// Columns: axis keys, mean, sd, dev_mean, dev_sd, n_seeds, fingerprint,
/// per_seed (seed:test_accuracy list; failed seeds read seed:failed).
void write_report_tsv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

struct ReportTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a report TSV and recomputes mean and sd from the per-seed column;
/// a mismatch beyond 1e-12 throws FormatError.
ReportTable read_report_tsv(const std::filesystem::path& path);

struct OodTarget {
  std::string name;
  std::vector<RawRecord> records;
};

struct OodResult {
  std::string name;
  double accuracy = 0;
  std::size_t examples = 0;
};

/// Frozen evaluation of `params` on every target. Target label names must
/// all exist in `source_labels`, or be mapped onto source names through
/// `mapping`; otherwise DataError.
std::vector<OodResult> ood_eval(const ParamStore<float>& params, const Vocab& vocab, const LabelMap& source_labels,
                                const std::vector<OodTarget>& targets,
                                const std::map<std::string, std::string>& mapping = {});

}  // namespace semix
