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

#include <map>
#include <span>
#include <vector>

#include "semix/core.hpp"
#include "semix/corpus.hpp"
#include "semix/encoder.hpp"

namespace semix {

/// Example id -> sentence representation.
using RepresentationCache = std::map<std::size_t, VectorXd>;

struct PairAssignment {
  std::size_t anchor_id = 0;
  std::size_t partner_id = 0;
  double similarity = 0;
};

/// Pooled sentence vector of the encoder.
template <typename Scalar>
VectorXd represent(const ParamStore<Scalar>& params, const Example& example) {
  return forward(params, example).pooled.transpose().template cast<double>();
}

template <typename Scalar>
RepresentationCache represent_all(const ParamStore<Scalar>& params, std::span<const Example> examples) {
  RepresentationCache cache;
  for (const Example& ex : examples) cache.emplace(ex.id, represent(params, ex));
  return cache;
}

/// u.v / (|u| |v|) clamped to [-1, 1]; 0 when either norm is zero.
double cosine(const VectorXd& u, const VectorXd& v);

/// Most cosine-similar member of `subset` other than the anchor; ties go
/// to the smallest example id.
PairAssignment nearest_partner(std::size_t anchor_id, std::span<const std::size_t> subset,
                               const RepresentationCache& reprs);

/// nearest_partner for every member of the subset, in subset order.
std::vector<PairAssignment> pair_subset(std::span<const std::size_t> subset, const RepresentationCache& reprs);

}  // namespace semix
