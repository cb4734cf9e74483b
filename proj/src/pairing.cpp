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

#include "semix/pairing.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

namespace semix {

double cosine(const VectorXd& u, const VectorXd& v) {
  if (u.size() != v.size()) throw ShapeError("cosine: vectors differ in length");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

PairAssignment nearest_partner(std::size_t anchor_id, std::span<const std::size_t> subset,
                               const RepresentationCache& reprs) {
  if (subset.size() < 2) throw DataError("nearest_partner: no partner available (subset has one member)");
  if (std::find(subset.begin(), subset.end(), anchor_id) == subset.end())
    throw DataError(fmt::format("nearest_partner: anchor {} is not in the subset", anchor_id));
  const VectorXd& a = reprs.at(anchor_id);

  PairAssignment best{anchor_id, anchor_id, -2.0};
  for (std::size_t id : subset) {
    if (id == anchor_id) continue;
    const double s = cosine(a, reprs.at(id));
    if (s > best.similarity || (s == best.similarity && id < best.partner_id)) {
      best.partner_id = id;
      best.similarity = s;
    }
  }
  return best;
}

std::vector<PairAssignment> pair_subset(std::span<const std::size_t> subset, const RepresentationCache& reprs) {
  std::vector<PairAssignment> out;
  out.reserve(subset.size());
  for (std::size_t id : subset) out.push_back(nearest_partner(id, subset, reprs));
  return out;
}

}  // namespace semix
