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
#include <string_view>

#include "semix/core.hpp"

namespace semix {

enum class SmoothingMode { none, uniform_ls, ils };

SmoothingMode parse_smoothing_mode(std::string_view name);
std::string_view to_string(SmoothingMode mode);

struct SmoothingConfig {
  SmoothingMode mode = SmoothingMode::ils;
  double alpha = 0.1;
};

/// A probability vector used as a training target.
struct SoftLabel {
  VectorXd probs;

  Index size() const { return probs.size(); }
  bool operator==(const SoftLabel& other) const { return probs == other.probs; }
};

/// Entries >= 0 and sum within `tol` of one.
bool is_distribution(const VectorXd& p, double tol = 1e-6);

/// (1 - alpha) y + alpha / C
SoftLabel smooth_uniform(const VectorXd& one_hot, double alpha);

/// (1 - alpha) y + alpha r, where r is the model's own predicted
/// distribution for the instance. r must be normalised within 1e-4.
SoftLabel smooth_instance(const VectorXd& one_hot, const VectorXd& reference, double alpha);

/// Dispatches on config.mode; `reference` is only read for ils.
SoftLabel smooth(const SmoothingConfig& config, const VectorXd& one_hot, const VectorXd& reference);

/// lambda * a + (1 - lambda) * b
SoftLabel mix_labels(const SoftLabel& a, const SoftLabel& b, double lambda);

double entropy(const VectorXd& p);
/// -sum target * log(max(p, 1e-12))
double cross_entropy(const VectorXd& target, const VectorXd& probs);
/// KL(q || p) with the same clamp on p.
double kl_divergence(const VectorXd& q, const VectorXd& p);

/// -(1/m) sum_i target_i . log p_i
double soft_cross_entropy(std::span<const SoftLabel> targets, std::span<const VectorXd> probs);

struct DecompositionCheck {
  double lhs = 0;
  double rhs = 0;
  double gap = 0;
};

/// lhs: cross-entropy of (1 - alpha) y + alpha q against p.
/// rhs: (1 - alpha) H(y, p) + alpha KL(q || p) + alpha H(q).
/// The alpha H(q) term is the constant that the KL form of smoothed
/// cross-entropy drops; with it the two sides agree exactly.
DecompositionCheck ls_decomposition_check(const VectorXd& one_hot, const VectorXd& prior, double alpha,
                                          const VectorXd& probs);

}  // namespace semix
