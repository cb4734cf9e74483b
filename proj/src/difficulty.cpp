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

#include "semix/difficulty.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <fmt/core.h>

namespace semix {

double difficulty(const VectorXd& probs, int label) {
  if (probs.size() < 2) throw ShapeError("difficulty: needs at least two classes");
  if (label < 0 || label >= probs.size()) throw ShapeError("difficulty: label out of range");
  double best_wrong = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < probs.size(); ++j)
    if (j != label) best_wrong = std::max(best_wrong, probs(j));
  return probs(label) - best_wrong;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

DifficultyPartition partition_by_median(std::span<const DifficultyScore> scores) {
  if (scores.empty()) throw DataError("partition_by_median: no scores");
  if (scores.size() < 2) throw DataError("partition_by_median: needs at least two scores");
  std::vector<double> d;
  d.reserve(scores.size());
  for (const auto& s : scores) d.push_back(s.d);

  DifficultyPartition p;
  p.threshold = median(std::move(d));
  for (const auto& s : scores) (s.d >= p.threshold ? p.easy : p.hard).push_back(s.example_id);
  std::sort(p.easy.begin(), p.easy.end());
  std::sort(p.hard.begin(), p.hard.end());
  return p;
}

void write_scores_tsv(std::span<const DifficultyScore> scores, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write scores '{}'", path.string()));
  const Index C = scores.empty() ? 0 : scores.front().probs.size();
  out << "example_id\td";
  for (Index c = 0; c < C; ++c) out << "\tp" << c;
  out << '\n';
  for (const auto& s : scores) {
    out << s.example_id << '\t' << fmt::format("{:.17g}", s.d);
    for (Index c = 0; c < s.probs.size(); ++c) out << '\t' << fmt::format("{:.17g}", s.probs(c));
    out << '\n';
  }
}

}  // namespace semix
