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

#include <span>

#include "semix/corpus.hpp"
#include "semix/encoder.hpp"

namespace semix {

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Index best = 0;
  for (Index c = 1; c < v.size(); ++c)
    if (v(c) > v(best)) best = c;
  return best;
}

/// Fraction of examples whose argmax prediction equals the label.
template <typename Scalar>
double evaluate(const ParamStore<Scalar>& params, std::span<const Example> examples) {
  if (examples.empty()) throw DataError("evaluate: empty example list");
  std::size_t correct = 0;
  for (const Example& ex : examples)
    if (argmax(forward(params, ex).probs) == ex.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace semix
