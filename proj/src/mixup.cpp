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

#include "semix/mixup.hpp"

#include <algorithm>
#include <random>

#include <fmt/core.h>

namespace semix {

MixVariant parse_mix_variant(std::string_view name) {
  if (name == "embed") return MixVariant::embed;
  if (name == "hidden") return MixVariant::hidden;
  if (name == "span") return MixVariant::span;
  throw ConfigError(fmt::format("unknown mix variant '{}' (expected embed, hidden or span)", name));
}

std::string_view to_string(MixVariant variant) {
  switch (variant) {
    case MixVariant::embed:
      return "embed";
    case MixVariant::hidden:
      return "hidden";
    case MixVariant::span:
      return "span";
  }
  return "?";
}

void LambdaDist::validate() const {
  if (kind == Kind::beta && !(value > 0.0 && std::isfinite(value)))
    throw ConfigError(fmt::format("beta lambda distribution needs a > 0 (got {})", value));
  if (kind == Kind::fixed && !(value >= 0.0 && value <= 1.0))
    throw ConfigError(fmt::format("fixed lambda {} outside [0, 1]", value));
}

double sample_lambda(Rng& rng, const LambdaDist& dist) {
  dist.validate();
  if (dist.kind == LambdaDist::Kind::fixed) return dist.value;
  std::gamma_distribution<double> gamma(dist.value, 1.0);
  for (;;) {
    const double x = gamma(rng);
    const double y = gamma(rng);
    if (x + y > 0.0) {
      const double draw = x / (x + y);
      return std::max(draw, 1.0 - draw);
    }
  }
}

Index span_length(double lambda_target, Index anchor_len, Index partner_len) {
  if (lambda_target >= 1.0) return 0;
  Index len = std::lround((1.0 - lambda_target) * static_cast<double>(anchor_len));
  len = std::max<Index>(len, 1);
  return std::min({len, anchor_len, partner_len});
}

namespace {

template <typename Better>
Index best_window(const std::vector<double>& scores, Index active, Index len, Better better) {
  if (len < 1 || len > active) throw ShapeError("span window longer than the active sequence");
  Index best = 0;
  double best_sum = 0;
  for (Index start = 0; start + len <= active; ++start) {
    double s = 0;
    for (Index k = 0; k < len; ++k) s += scores[static_cast<std::size_t>(start + k)];
    if (start == 0 || better(s, best_sum)) {
      best = start;
      best_sum = s;
    }
  }
  return best;
}

}  // namespace

Index least_salient_window(const std::vector<double>& scores, Index active, Index len) {
  return best_window(scores, active, len, [](double s, double best) { return s < best; });
}

Index most_salient_window(const std::vector<double>& scores, Index active, Index len) {
  return best_window(scores, active, len, [](double s, double best) { return s > best; });
}

}  // namespace semix
