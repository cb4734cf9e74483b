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

// Planted-difficulty text corpus. Two clusters share the labels pos/neg;
// each record is a Gaussian latent vector rendered as one token per
// dimension ("f<dim>b<bin>"), in dimension order. The easy cluster
// separates its classes by `easy_margin_ratio` times the hard cluster's
// margin.

#pragma once

#include <cstdint>
#include <vector>

#include "semix/corpus.hpp"

namespace semix {

struct SyntheticSpec {
  std::size_t records_per_class_per_cluster = 100;
  std::uint32_t dims = 8;
  std::uint32_t bins = 8;
  double hard_margin = 0.35;       // class mean offset along the label direction, hard cluster
  double easy_margin_ratio = 4.0;  // easy margin = ratio * hard margin
  double cluster_separation = 2.0;
  double noise = 1.0;
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  std::vector<RawRecord> records;
  std::vector<int> cluster;  // 0 = easy, 1 = hard, per record
};

SyntheticCorpus make_synthetic(const SyntheticSpec& spec);

}  // namespace semix
