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

#include <filesystem>
#include <span>
#include <vector>

#include "semix/core.hpp"
#include "semix/corpus.hpp"
#include "semix/encoder.hpp"

namespace semix {

struct DifficultyScore {
  std::size_t example_id = 0;
  double d = 0;
  VectorXd probs;  // also the ILS reference distribution
};

/// p[label] - max_{j != label} p[j]. Lies in [-1, 1]; higher is easier.
double difficulty(const VectorXd& probs, int label);

template <typename Scalar>
std::vector<DifficultyScore> score_all(const ParamStore<Scalar>& params, std::span<const Example> examples) {
  std::vector<DifficultyScore> out;
  out.reserve(examples.size());
  for (const Example& ex : examples) {
    DifficultyScore s;
    s.example_id = ex.id;
    s.probs = forward(params, ex).probs.transpose().template cast<double>();
    s.d = difficulty(s.probs, ex.label);
    out.push_back(std::move(s));
  }
  return out;
}

struct DifficultyPartition {
  std::vector<std::size_t> easy;  // ascending ids
  std::vector<std::size_t> hard;  // ascending ids
  double threshold = 0;
};

/// Median of the scores (mean of the central pair for even counts).
double median(std::vector<double> values);

/// d >= median goes to easy, d < median to hard. Exact ties with the median
/// are assigned to easy only.
DifficultyPartition partition_by_median(std::span<const DifficultyScore> scores);

/// `example_id<TAB>d<TAB>p_0<TAB>...<TAB>p_{C-1}` with a header row.
void write_scores_tsv(std::span<const DifficultyScore> scores, const std::filesystem::path& path);

}  // namespace semix
