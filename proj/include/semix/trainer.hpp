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

// Two-stage training. Stage 1 fits the classifier on the few-shot set with
// one-hot cross-entropy. Stage 2 starts from the stage-1 best checkpoint,
// scores every training example's difficulty once, splits the set at the
// median, pairs each anchor with its most similar neighbour inside its own
// subset, and trains on mixed pseudo-samples: every easy anchor first, then
// every hard anchor, in each epoch.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semix/core.hpp"
#include "semix/corpus.hpp"
#include "semix/encoder.hpp"
#include "semix/mixup.hpp"
#include "semix/smoothing.hpp"
#include "semix/tensor.hpp"

namespace semix {

// ---------------------------------------------------------------------------
// AdamW

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamWState {
  tensor::NamedTensors<Scalar> first;
  tensor::NamedTensors<Scalar> second;
  std::int64_t step = 0;
};

/// One AdamW update with bias correction and decoupled decay
/// theta <- theta - lr * wd * theta. The PAD embedding row is neither
/// decayed nor updated. Non-finite gradients skip the step (returns false).
template <typename Scalar>
bool optimizer_step(ParamStore<Scalar>& params, const tensor::NamedTensors<Scalar>& grads, AdamWState<Scalar>& state,
                    double lr, double weight_decay, const AdamWHyper& hyper = {}) {
  for (const auto& [name, g] : grads) {
    const auto& p = params.at(name);
    if (g.rows() != p.rows() || g.cols() != p.cols()) throw ShapeError("optimizer_step: gradient shape mismatch");
    if (!g.allFinite()) {
      log_warning("optimizer_step: non-finite gradient for '" + name + "', step skipped");
      return false;
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (const auto& [name, g] : grads) {
    Matrix<Scalar>& p = params.at(name);
    auto& m = state.first.try_emplace(name, Matrix<Scalar>::Zero(p.rows(), p.cols())).first->second;
    auto& v = state.second.try_emplace(name, Matrix<Scalar>::Zero(p.rows(), p.cols())).first->second;
    const bool embedding = name == kEmbeddingName;
    for (Index r = 0; r < p.rows(); ++r) {
      if (embedding && r == kPadId) continue;
      for (Index c = 0; c < p.cols(); ++c) {
        const double gi = g(r, c);
        const double mi = hyper.beta1 * double(m(r, c)) + (1.0 - hyper.beta1) * gi;
        const double vi = hyper.beta2 * double(v(r, c)) + (1.0 - hyper.beta2) * gi * gi;
        m(r, c) = Scalar(mi);
        v(r, c) = Scalar(vi);
        double theta = double(p(r, c));
        theta -= lr * weight_decay * theta;
        theta -= lr * (mi / c1) / (std::sqrt(vi / c2) + hyper.epsilon);
        p(r, c) = Scalar(theta);
      }
    }
  }
  return true;
}

/// Linear warmup from 0 to base_lr over the first warmup_fraction of the
/// steps, then linear decay to 0 at total_steps.
double lr_schedule(std::int64_t step, std::int64_t total_steps, double base_lr, double warmup_fraction);

// ---------------------------------------------------------------------------
// Configuration and records

enum class SelectionPolicy { random, easy_to_hard, hard_to_easy };

SelectionPolicy parse_selection_policy(std::string_view name);
std::string_view to_string(SelectionPolicy policy);

struct TrainConfig {
  std::size_t batch_size = 32;
  double stage1_lr = 1e-3;
  double stage2_lr = 2e-4;
  double weight_decay = 1e-4;
  double warmup_fraction = 0.10;
  int stage1_epochs = 30;
  int stage2_epochs = 20;
  SelectionPolicy selection_policy = SelectionPolicy::easy_to_hard;
  MixVariant mix_variant = MixVariant::span;
  std::uint32_t mix_layer = 1;
  LambdaDist lambda = LambdaDist::beta(0.2);
  SmoothingConfig smoothing;
  std::uint64_t seed = 1;
  bool rescore_every_epoch = false;
  bool append_originals = false;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0;
  double dev_accuracy = 0;
};

struct BatchLogEntry {
  int epoch = 0;
  int batch = 0;
  std::string subset;  // easy, hard or all
  std::vector<std::size_t> anchor_ids;
};

struct RunRecord {
  std::vector<EpochMetrics> epochs;
  double best_dev_accuracy = 0;
  int best_epoch = 0;
  ParamStore<float> best_params;
  std::filesystem::path best_checkpoint;
  std::optional<double> test_accuracy;
  std::vector<BatchLogEntry> batch_log;
};

/// Files of one run: config.txt, metrics.tsv, batchlog.tsv and checkpoints.
/// Creating a RunDirectory over a completed run is an error.
class RunDirectory {
 public:
  explicit RunDirectory(std::filesystem::path dir);

  const std::filesystem::path& path() const { return dir_; }
  void write_config(const std::string& text);
  void metric(int epoch, std::string_view split, std::string_view name, double value);
  void batch(const BatchLogEntry& entry);
  std::filesystem::path checkpoint(const std::string& file, const ParamStore<float>& params);
  void write_file(const std::string& file, const std::string& contents);

 private:
  std::filesystem::path dir_;
  std::ofstream metrics_;
  std::ofstream batchlog_;
};

/// Plain one-hot training from `params`; keeps the best dev checkpoint.
RunRecord train_stage1(const TrainConfig& config, const FewShotSplit& split, const ParamStore<float>& params,
                       RunDirectory* dir = nullptr);

/// Mixup training from the stage-1 best checkpoint under the configured
/// selection policy, mix variant and label smoothing. `epoch_offset` shifts
/// the epoch numbers written to logs.
RunRecord train_stage2_se(const TrainConfig& config, const FewShotSplit& split, const ParamStore<float>& best_ckpt,
                          RunDirectory* dir = nullptr, int epoch_offset = 0);

/// Stage-2 schedule without mixing or smoothing: the same anchor order the
/// random policy visits, each anchor trained on its own one-hot label.
RunRecord train_stage2_plain(const TrainConfig& config, const FewShotSplit& split, const ParamStore<float>& best_ckpt,
                             RunDirectory* dir = nullptr, int epoch_offset = 0);

struct PipelineResult {
  RunRecord stage1;
  RunRecord stage2;
  double best_dev_accuracy = 0;
  double test_accuracy = 0;
};

/// Stage 1 from a seeded initialisation, stage 2 from its best checkpoint,
/// then a single test evaluation of the final best checkpoint.
PipelineResult run_pipeline(const TrainConfig& config, const ModelConfig& model, const FewShotSplit& split,
                            RunDirectory* dir = nullptr);

}  // namespace semix
