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

#include "semix/trainer.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include <fmt/core.h>
#include <fmt/ranges.h>

#include "semix/difficulty.hpp"
#include "semix/evaluate.hpp"
#include "semix/pairing.hpp"
#include "semix/rng.hpp"

namespace semix {

double lr_schedule(std::int64_t step, std::int64_t total_steps, double base_lr, double warmup_fraction) {
  if (total_steps <= 0) throw std::invalid_argument("lr_schedule: total_steps must be positive");
  if (step < 0 || step > total_steps) throw std::invalid_argument("lr_schedule: step outside [0, total_steps]");
  const double s = static_cast<double>(step);
  const double total = static_cast<double>(total_steps);
  const double warmup = warmup_fraction * total;
  if (s < warmup) return base_lr * s / warmup;
  if (total <= warmup) return base_lr;
  return base_lr * (total - s) / (total - warmup);
}

SelectionPolicy parse_selection_policy(std::string_view name) {
  if (name == "random") return SelectionPolicy::random;
  if (name == "easy_to_hard") return SelectionPolicy::easy_to_hard;
  if (name == "hard_to_easy") return SelectionPolicy::hard_to_easy;
  throw ConfigError(fmt::format("unknown selection policy '{}' (expected random, easy_to_hard or hard_to_easy)", name));
}

std::string_view to_string(SelectionPolicy policy) {
  switch (policy) {
    case SelectionPolicy::random:
      return "random";
    case SelectionPolicy::easy_to_hard:
      return "easy_to_hard";
    case SelectionPolicy::hard_to_easy:
      return "hard_to_easy";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(stage1_lr > 0.0) || !(stage2_lr > 0.0)) throw ConfigError("learning rates must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw ConfigError("warmup_fraction must lie in [0, 1)");
  if (stage1_epochs < 0 || stage2_epochs < 0) throw ConfigError("epoch counts must be >= 0");
  if (!(smoothing.alpha >= 0.0 && smoothing.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  lambda.validate();
}

// ---------------------------------------------------------------------------

RunDirectory::RunDirectory(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  if (std::filesystem::exists(dir_ / "metrics.tsv"))
    throw std::runtime_error(fmt::format("run directory '{}' already holds a completed run", dir_.string()));
  metrics_.open(dir_ / "metrics.tsv", std::ios::binary);
  batchlog_.open(dir_ / "batchlog.tsv", std::ios::binary);
  if (!metrics_ || !batchlog_) throw DataError(fmt::format("cannot write into run directory '{}'", dir_.string()));
  metrics_ << "epoch\tsplit\tmetric\tvalue\n";
  batchlog_ << "epoch\tbatch\tsubset\tanchor_ids\n";
}

void RunDirectory::write_config(const std::string& text) { write_file("config.txt", text); }

void RunDirectory::write_file(const std::string& file, const std::string& contents) {
  std::ofstream out(dir_ / file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", (dir_ / file).string()));
  out << contents;
}

void RunDirectory::metric(int epoch, std::string_view split, std::string_view name, double value) {
  metrics_ << fmt::format("{}\t{}\t{}\t{:.17g}\n", epoch, split, name, value);
  metrics_.flush();
}

void RunDirectory::batch(const BatchLogEntry& e) {
  batchlog_ << fmt::format("{}\t{}\t{}\t{}\n", e.epoch, e.batch, e.subset, fmt::join(e.anchor_ids, ","));
  batchlog_.flush();
}

std::filesystem::path RunDirectory::checkpoint(const std::string& file, const ParamStore<float>& params) {
  const auto p = dir_ / file;
  save_checkpoint(params, p);
  return p;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kStage1Tag = 0x5331;
constexpr std::uint64_t kStage2Tag = 0x5332;

enum class Stage2Mode { se, plain };

struct SubsetPlan {
  std::string name;
  std::uint64_t tag = 0;
  std::vector<std::size_t> ids;
};

MixedItem<float> identity_item(const Example& ex, SoftLabel label) {
  MixedItem<float> item;
  item.variant = MixVariant::span;
  item.anchor = ex;
  item.partner = ex;
  item.tokens = ex;
  item.lambda = 1.0;
  item.label = std::move(label);
  return item;
}

/// Mean soft-label cross-entropy over the batch, one optimizer step.
double train_step(ParamStore<float>& params, AdamWState<float>& state, const std::vector<MixedItem<float>>& items,
                  double lr, double weight_decay) {
  tensor::Tape<float> tape;
  tensor::Var total;
  for (const auto& item : items) {
    EncoderGraph g = build_item_graph(tape, params, item);
    tensor::Var l = tensor::cross_entropy(tape, g.probs, item.label.probs);
    total = total.valid() ? tensor::add(tape, total, l) : l;
  }
  tensor::Var loss = tensor::scale(tape, total, 1.0 / static_cast<double>(items.size()));
  const double value = tape.value(loss)(0, 0);
  auto grads = tape.backward(loss);
  optimizer_step(params, grads, state, lr, weight_decay);
#ifndef NDEBUG
  if (!params.at(kEmbeddingName).row(kPadId).isZero(0.0)) throw std::logic_error("PAD embedding row was updated");
#endif
  return value;
}

std::int64_t batches_for(std::size_t n, std::size_t batch_size) {
  return static_cast<std::int64_t>((n + batch_size - 1) / batch_size);
}

void require_split(const FewShotSplit& split) {
  if (split.train.empty()) throw DataError("training set is empty");
  if (split.dev.empty()) throw DataError("dev set is empty");
}

/// Tracks the best dev checkpoint; strict improvement keeps the earliest.
void observe_epoch(RunRecord& rec, int epoch, double loss, double dev, const ParamStore<float>& params,
                   RunDirectory* dir) {
  rec.epochs.push_back({epoch, loss, dev});
  if (dir != nullptr) {
    dir->metric(epoch, "train", "loss", loss);
    dir->metric(epoch, "dev", "accuracy", dev);
  }
  if (rec.epochs.size() == 1 || dev > rec.best_dev_accuracy) {
    rec.best_dev_accuracy = dev;
    rec.best_epoch = epoch;
    rec.best_params = params;
  }
}

struct Curriculum {
  DifficultyPartition partition;
  std::map<std::size_t, VectorXd> reference;  // ILS prior per example
  std::map<std::size_t, std::size_t> partner;  // nearest same-subset partner
};

Curriculum build_curriculum(const ParamStore<float>& params, const FewShotSplit& split) {
  Curriculum c;
  const auto scores = score_all(params, std::span<const Example>(split.train));
  for (const auto& s : scores) c.reference.emplace(s.example_id, s.probs);
  if (scores.size() >= 2) {
    c.partition = partition_by_median(scores);
  } else {
    for (const auto& s : scores) c.partition.easy.push_back(s.example_id);
  }
  const RepresentationCache reprs = represent_all(params, std::span<const Example>(split.train));
  for (const auto* subset : {&c.partition.easy, &c.partition.hard}) {
    if (subset->size() < 2) {
      if (!subset->empty())
        log_info(fmt::format("subset of size {} trains without mixup (no partner available)", subset->size()));
      continue;
    }
    for (const auto& pa : pair_subset(*subset, reprs)) c.partner.emplace(pa.anchor_id, pa.partner_id);
  }
  return c;
}

std::vector<SubsetPlan> plan_subsets(SelectionPolicy policy, Stage2Mode mode, const Curriculum& c,
                                     const FewShotSplit& split) {
  std::vector<SubsetPlan> plans;
  if (mode == Stage2Mode::plain || policy == SelectionPolicy::random) {
    SubsetPlan all{"all", 0, {}};
    for (const auto& ex : split.train) all.ids.push_back(ex.id);
    plans.push_back(std::move(all));
    return plans;
  }
  SubsetPlan easy{"easy", 1, c.partition.easy};
  SubsetPlan hard{"hard", 2, c.partition.hard};
  if (policy == SelectionPolicy::easy_to_hard) {
    plans.push_back(std::move(easy));
    plans.push_back(std::move(hard));
  } else {
    plans.push_back(std::move(hard));
    plans.push_back(std::move(easy));
  }
  std::erase_if(plans, [](const SubsetPlan& p) { return p.ids.empty(); });
  return plans;
}

RunRecord train_stage2(const TrainConfig& config, const FewShotSplit& split, const ParamStore<float>& best_ckpt,
                       RunDirectory* dir, int epoch_offset, Stage2Mode mode) {
  config.validate();
  require_split(split);
  std::map<std::size_t, const Example*> by_id;
  for (const auto& ex : split.train) by_id.emplace(ex.id, &ex);

  ParamStore<float> params = best_ckpt;
  AdamWState<float> state;
  RunRecord rec;
  if (config.stage2_epochs == 0) {
    rec.best_params = params;
    rec.best_dev_accuracy = evaluate(params, std::span<const Example>(split.dev));
    rec.best_epoch = epoch_offset;
    return rec;
  }

  Curriculum curriculum;
  if (mode == Stage2Mode::se) curriculum = build_curriculum(params, split);
  std::int64_t steps_per_epoch = 0;
  for (const auto& s : plan_subsets(config.selection_policy, mode, curriculum, split))
    steps_per_epoch += batches_for(s.ids.size(), config.batch_size);
  const std::int64_t total_steps = steps_per_epoch * config.stage2_epochs;

  const MixPlan plan{config.mix_variant, 1.0, config.mix_layer, 0};
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= config.stage2_epochs; ++epoch) {
    if (mode == Stage2Mode::se && config.rescore_every_epoch && epoch > 1) curriculum = build_curriculum(params, split);
    const auto subsets = plan_subsets(config.selection_policy, mode, curriculum, split);

    double loss_sum = 0;
    std::size_t loss_count = 0;
    int batch_index = 0;
    for (const auto& subset : subsets) {
      std::vector<std::size_t> order = subset.ids;
      Rng order_rng = make_rng(config.seed, {kStage2Tag, static_cast<std::uint64_t>(epoch), subset.tag});
      shuffle_in_place(order, order_rng);

      for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        BatchLogEntry entry{epoch_offset + epoch, batch_index, subset.name,
                            std::vector<std::size_t>(order.begin() + start, order.begin() + end)};
        std::vector<MixedItem<float>> items;
        for (std::size_t k = start; k < end; ++k) {
          const Example& anchor = *by_id.at(order[k]);
          if (mode == Stage2Mode::plain) {
            items.push_back(identity_item(anchor, SoftLabel{anchor.one_hot}));
            continue;
          }
          Rng rng = make_rng(config.seed, {kStage2Tag, static_cast<std::uint64_t>(epoch),
                                           static_cast<std::uint64_t>(batch_index), k - start});
          const SoftLabel y_i = smooth(config.smoothing, anchor.one_hot, curriculum.reference.at(anchor.id));
          const Example* partner = nullptr;
          if (config.selection_policy == SelectionPolicy::random) {
            if (split.train.size() >= 2) {
              std::size_t pick = uniform_index(rng, split.train.size() - 1);
              const std::size_t anchor_pos =
                  static_cast<std::size_t>(std::find_if(split.train.begin(), split.train.end(),
                                                        [&](const Example& e) { return e.id == anchor.id; }) -
                                           split.train.begin());
              if (pick >= anchor_pos) ++pick;
              partner = &split.train[pick];
            }
          } else if (auto it = curriculum.partner.find(anchor.id); it != curriculum.partner.end()) {
            partner = by_id.at(it->second);
          }
          if (partner == nullptr) {
            items.push_back(identity_item(anchor, y_i));
          } else {
            const SoftLabel y_j = smooth(config.smoothing, partner->one_hot, curriculum.reference.at(partner->id));
            MixPlan p = plan;
            p.lambda = sample_lambda(rng, config.lambda);
            items.push_back(mix(params, p, anchor, *partner, y_i, y_j));
          }
          if (config.append_originals) items.push_back(identity_item(anchor, y_i));
        }
        const double lr = lr_schedule(std::min(step, total_steps), total_steps, config.stage2_lr, config.warmup_fraction);
        const double loss = train_step(params, state, items, lr, config.weight_decay);
        ++step;
        loss_sum += loss * static_cast<double>(items.size());
        loss_count += items.size();
        if (dir != nullptr) dir->batch(entry);
        rec.batch_log.push_back(std::move(entry));
      }
    }
    const double dev = evaluate(params, std::span<const Example>(split.dev));
    observe_epoch(rec, epoch_offset + epoch, loss_sum / static_cast<double>(std::max<std::size_t>(loss_count, 1)),
                  dev, params, dir);
  }
  return rec;
}

}  // namespace

RunRecord train_stage1(const TrainConfig& config, const FewShotSplit& split, const ParamStore<float>& init,
                       RunDirectory* dir) {
  config.validate();
  require_split(split);
  ParamStore<float> params = init;
  AdamWState<float> state;

  RunRecord rec;
  rec.best_params = params;
  rec.best_dev_accuracy = evaluate(params, std::span<const Example>(split.dev));
  rec.best_epoch = 0;
  if (dir != nullptr) dir->metric(0, "dev", "accuracy", rec.best_dev_accuracy);

  const std::int64_t steps_per_epoch = batches_for(split.train.size(), config.batch_size);
  const std::int64_t total_steps = steps_per_epoch * config.stage1_epochs;
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= config.stage1_epochs; ++epoch) {
    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = make_rng(config.seed, {kStage1Tag, static_cast<std::uint64_t>(epoch)});
    shuffle_in_place(order, rng);

    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<MixedItem<float>> items;
      for (std::size_t k = start; k < end; ++k) {
        const Example& ex = split.train[order[k]];
        items.push_back(identity_item(ex, SoftLabel{ex.one_hot}));
      }
      const double lr = lr_schedule(step, total_steps, config.stage1_lr, config.warmup_fraction);
      loss_sum += train_step(params, state, items, lr, config.weight_decay) * static_cast<double>(items.size());
      ++step;
    }
    const double dev = evaluate(params, std::span<const Example>(split.dev));
    // Epoch 0 (the initialisation) already holds the first slot.
    rec.epochs.push_back({epoch, loss_sum / static_cast<double>(split.train.size()), dev});
    if (dir != nullptr) {
      dir->metric(epoch, "train", "loss", rec.epochs.back().train_loss);
      dir->metric(epoch, "dev", "accuracy", dev);
    }
    if (dev > rec.best_dev_accuracy) {
      rec.best_dev_accuracy = dev;
      rec.best_epoch = epoch;
      rec.best_params = params;
    }
  }
  if (dir != nullptr) rec.best_checkpoint = dir->checkpoint("ckpt_stage1.semx", rec.best_params);
  return rec;
}

RunRecord train_stage2_se(const TrainConfig& config, const FewShotSplit& split, const ParamStore<float>& best_ckpt,
                          RunDirectory* dir, int epoch_offset) {
  return train_stage2(config, split, best_ckpt, dir, epoch_offset, Stage2Mode::se);
}

RunRecord train_stage2_plain(const TrainConfig& config, const FewShotSplit& split, const ParamStore<float>& best_ckpt,
                             RunDirectory* dir, int epoch_offset) {
  return train_stage2(config, split, best_ckpt, dir, epoch_offset, Stage2Mode::plain);
}

PipelineResult run_pipeline(const TrainConfig& config, const ModelConfig& model, const FewShotSplit& split,
                            RunDirectory* dir) {
  config.validate();
  const ParamStore<float> init = init_params<float>(model, derive_seed(config.seed, {0x696E6974ULL}));
  PipelineResult out;
  out.stage1 = train_stage1(config, split, init, dir);
  out.stage2 = train_stage2_se(config, split, out.stage1.best_params, dir, config.stage1_epochs);
  out.best_dev_accuracy = out.stage2.best_dev_accuracy;
  if (split.test.empty()) throw DataError("test set is empty");
  out.test_accuracy = evaluate(out.stage2.best_params, std::span<const Example>(split.test));
  out.stage2.test_accuracy = out.test_accuracy;
  if (dir != nullptr) {
    out.stage2.best_checkpoint = dir->checkpoint("ckpt_best.semx", out.stage2.best_params);
    dir->metric(out.stage2.best_epoch, "dev", "best_accuracy", out.best_dev_accuracy);
    dir->metric(out.stage2.best_epoch, "test", "accuracy", out.test_accuracy);
  }
  return out;
}

}  // namespace semix
