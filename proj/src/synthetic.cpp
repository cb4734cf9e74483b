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

#include "semix/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/core.h>

#include "semix/rng.hpp"

namespace semix {

namespace {

// Latent range [-3, 3] split into equal-width bins; outliers clamp.
std::uint32_t bin_of(double z, std::uint32_t bins) {
  const double u = (z + 3.0) / 6.0 * static_cast<double>(bins);
  return static_cast<std::uint32_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(bins - 1)));
}

}  // namespace

SyntheticCorpus make_synthetic(const SyntheticSpec& spec) {
  if (spec.dims < 2 || spec.bins < 2) throw ConfigError("synthetic: dims and bins must be >= 2");
  if (spec.records_per_class_per_cluster == 0) throw ConfigError("synthetic: records_per_class_per_cluster must be >= 1");
  Rng rng = make_rng(spec.seed, {0x73796E74ULL});
  std::normal_distribution<double> normal(0.0, 1.0);

  // The label acts on the first half of the dimensions, the cluster on the rest.
  const std::uint32_t half = spec.dims / 2;
  SyntheticCorpus out;
  for (int c = 0; c < 2; ++c) {
    const double margin = c == 0 ? spec.hard_margin * spec.easy_margin_ratio : spec.hard_margin;
    const double centre = (c == 0 ? -0.5 : 0.5) * spec.cluster_separation;
    for (int y = 0; y < 2; ++y) {
      const double sign = y == 0 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < spec.records_per_class_per_cluster; ++i) {
        std::string text;
        for (std::uint32_t d = 0; d < spec.dims; ++d) {
          const double mean = d < half ? sign * margin : centre;
          const double z = mean + spec.noise * normal(rng);
          if (!text.empty()) text += ' ';
          text += fmt::format("f{}b{}", d, bin_of(z, spec.bins));
        }
        out.records.push_back({std::move(text), y == 0 ? "pos" : "neg"});
        out.cluster.push_back(c);
      }
    }
  }
  // Interleave deterministically so file order carries no label signal.
  std::vector<std::size_t> order(out.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle_in_place(order, rng);
  SyntheticCorpus shuffled;
  for (std::size_t i : order) {
    shuffled.records.push_back(out.records[i]);
    shuffled.cluster.push_back(out.cluster[i]);
  }
  return shuffled;
}

}  // namespace semix
