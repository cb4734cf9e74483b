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

#include "semix/smoothing.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "semix/tensor.hpp"

namespace semix {
namespace {

void require_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError(fmt::format("smoothing alpha {} outside [0, 1]", alpha));
}

void require_one_hot(const VectorXd& y) {
  if (y.size() < 1 || !is_distribution(y, 1e-9)) throw DataError("label is not a valid one-hot vector");
}

}  // namespace

SmoothingMode parse_smoothing_mode(std::string_view name) {
  if (name == "none") return SmoothingMode::none;
  if (name == "uniform_ls") return SmoothingMode::uniform_ls;
  if (name == "ils") return SmoothingMode::ils;
  throw ConfigError(fmt::format("unknown smoothing mode '{}' (expected none, uniform_ls or ils)", name));
}

std::string_view to_string(SmoothingMode mode) {
  switch (mode) {
    case SmoothingMode::none:
      return "none";
    case SmoothingMode::uniform_ls:
      return "uniform_ls";
    case SmoothingMode::ils:
      return "ils";
  }
  return "?";
}

bool is_distribution(const VectorXd& p, double tol) {
  if (p.size() == 0 || !p.allFinite() || p.minCoeff() < 0.0) return false;
  return std::abs(p.sum() - 1.0) <= tol;
}

SoftLabel smooth_uniform(const VectorXd& one_hot, double alpha) {
  require_alpha(alpha);
  require_one_hot(one_hot);
  if (one_hot.size() < 2) throw DataError("smooth_uniform: needs at least two classes");
  const double u = 1.0 / static_cast<double>(one_hot.size());
  return SoftLabel{((1.0 - alpha) * one_hot.array() + alpha * u).matrix()};
}

SoftLabel smooth_instance(const VectorXd& one_hot, const VectorXd& reference, double alpha) {
  require_alpha(alpha);
  require_one_hot(one_hot);
  if (reference.size() != one_hot.size()) throw ShapeError("smooth_instance: reference has the wrong length");
  if (!is_distribution(reference, 1e-4)) throw DataError("smooth_instance: reference is not normalised");
  return SoftLabel{(1.0 - alpha) * one_hot + alpha * reference};
}

SoftLabel smooth(const SmoothingConfig& config, const VectorXd& one_hot, const VectorXd& reference) {
  switch (config.mode) {
    case SmoothingMode::none:
      return SoftLabel{one_hot};
    case SmoothingMode::uniform_ls:
      return smooth_uniform(one_hot, config.alpha);
    case SmoothingMode::ils:
      return smooth_instance(one_hot, reference, config.alpha);
  }
  return SoftLabel{one_hot};
}

SoftLabel mix_labels(const SoftLabel& a, const SoftLabel& b, double lambda) {
  if (a.size() != b.size()) throw ShapeError("mix_labels: label sizes differ");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mix_labels: lambda outside [0, 1]");
  return SoftLabel{lambda * a.probs + (1.0 - lambda) * b.probs};
}

double entropy(const VectorXd& p) {
  double h = 0;
  for (Index c = 0; c < p.size(); ++c)
    if (p(c) > 0) h -= p(c) * std::log(p(c));
  return h;
}

double cross_entropy(const VectorXd& target, const VectorXd& probs) {
  if (target.size() != probs.size()) throw ShapeError("cross_entropy: size mismatch");
  double s = 0;
  for (Index c = 0; c < target.size(); ++c) s -= target(c) * std::log(std::max(probs(c), tensor::kProbFloor));
  return s;
}

double kl_divergence(const VectorXd& q, const VectorXd& p) {
  if (q.size() != p.size()) throw ShapeError("kl_divergence: size mismatch");
  double s = 0;
  for (Index c = 0; c < q.size(); ++c)
    if (q(c) > 0) s += q(c) * (std::log(q(c)) - std::log(std::max(p(c), tensor::kProbFloor)));
  return s;
}

double soft_cross_entropy(std::span<const SoftLabel> targets, std::span<const VectorXd> probs) {
  if (targets.size() != probs.size()) throw ShapeError("soft_cross_entropy: batch sizes differ");
  if (targets.empty()) throw ShapeError("soft_cross_entropy: empty batch");
  double total = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) total += cross_entropy(targets[i].probs, probs[i]);
  return total / static_cast<double>(targets.size());
}

DecompositionCheck ls_decomposition_check(const VectorXd& one_hot, const VectorXd& prior, double alpha,
                                          const VectorXd& probs) {
  DecompositionCheck out;
  const VectorXd smoothed = (1.0 - alpha) * one_hot + alpha * prior;
  out.lhs = cross_entropy(smoothed, probs);
  out.rhs = (1.0 - alpha) * cross_entropy(one_hot, probs) + alpha * kl_divergence(prior, probs) +
            alpha * entropy(prior);
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace semix
