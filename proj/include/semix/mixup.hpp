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

// Mixed pseudo-samples x~ = lambda x_i + (1 - lambda) x_j with labels
// y~ = lambda y'_i + (1 - lambda) y'_j, where y' are the (possibly
// smoothed) labels of the two originals. Three places to mix:
//   embed  - token embeddings, position-wise
//   hidden - encoder states after block m
//   span   - tokens: a span of the anchor is replaced by a span of the partner

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "semix/core.hpp"
#include "semix/corpus.hpp"
#include "semix/encoder.hpp"
#include "semix/rng.hpp"
#include "semix/smoothing.hpp"
#include "semix/tensor.hpp"

namespace semix {

enum class MixVariant { embed, hidden, span };

MixVariant parse_mix_variant(std::string_view name);
std::string_view to_string(MixVariant variant);

struct LambdaDist {
  enum class Kind { beta, fixed };
  Kind kind = Kind::beta;
  double value = 0.2;  // Beta concentration, or the fixed lambda

  static LambdaDist beta(double a) { return {Kind::beta, a}; }
  static LambdaDist fixed(double v) { return {Kind::fixed, v}; }
  void validate() const;
};

/// Beta(a, a) draws are folded to max(draw, 1 - draw) >= 0.5 so the
/// anchor always dominates; fixed(v) returns v.
double sample_lambda(Rng& rng, const LambdaDist& dist);

struct MixPlan {
  MixVariant variant = MixVariant::span;
  double lambda = 1.0;
  std::uint32_t mix_layer = 1;
  Index span_len = 0;
};

template <typename Scalar>
struct MixedItem {
  MixVariant variant = MixVariant::embed;
  Example anchor;
  Example partner;
  double lambda = 1.0;  // realised weight of the anchor
  std::uint32_t mix_layer = 0;

  Matrix<Scalar> embeddings;   // embed: mixed [T x E]
  Vector<Accum> mask_weights;  // embed/hidden: mixed pooling weights
  Example tokens;              // span: synthesized sequence

  Index span_len = 0;
  Index anchor_start = 0;
  Index partner_start = 0;

  SoftLabel label;
};

/// Split lambda to the nearest representable span: round((1 - lambda) len_i),
/// at least one token when lambda < 1, at most min(len_i, len_j).
Index span_length(double lambda_target, Index anchor_len, Index partner_len);

/// Leftmost window of `len` positions with the smallest (largest) summed score.
Index least_salient_window(const std::vector<double>& scores, Index active, Index len);
Index most_salient_window(const std::vector<double>& scores, Index active, Index len);

/// ||d CE(true label) / d embedding_t||_2 per position; pads score -inf.
template <typename Scalar>
std::vector<double> saliency(const ParamStore<Scalar>& params, const Example& example,
                             std::optional<tensor::Op> fault = std::nullopt) {
  const Index n = example.length();
  tensor::Tape<Scalar> tape;
  tape.inject_fault(fault);
  tensor::Var e = tape.input(lookup_embeddings(params, example, n));
  EncoderGraph g = build_forward_from_embeddings(tape, params, e, mask_weights(example, n));
  tensor::Var loss = tensor::cross_entropy(tape, g.probs, example.one_hot);
  tape.backward(loss);
  const Matrix<Scalar>& grad = tape.grad(e);
  std::vector<double> scores(example.token_ids.size(), -std::numeric_limits<double>::infinity());
  for (Index t = 0; t < n; ++t) scores[static_cast<std::size_t>(t)] = grad.row(t).template cast<double>().norm();
  return scores;
}

template <typename Scalar>
MixedItem<Scalar> mix_embed(const ParamStore<Scalar>& params, const Example& ex_i, const Example& ex_j,
                            double lambda, const SoftLabel& y_i, const SoftLabel& y_j) {
  MixedItem<Scalar> item;
  item.variant = MixVariant::embed;
  item.anchor = ex_i;
  item.partner = ex_j;
  item.lambda = lambda;
  tensor::Tape<Scalar> tape;
  EncoderGraph g = build_forward_mixed_hidden(tape, params, ex_i, ex_j, lambda, 0);
  item.embeddings = tape.value(g.embeddings);
  const Index T = item.embeddings.rows();
  item.mask_weights = lambda * mask_weights(ex_i, T) + (1.0 - lambda) * mask_weights(ex_j, T);
  item.label = mix_labels(y_i, y_j, lambda);
  return item;
}

template <typename Scalar>
MixedItem<Scalar> mix_hidden(const ParamStore<Scalar>& params, const Example& ex_i, const Example& ex_j,
                             double lambda, std::uint32_t mix_layer, const SoftLabel& y_i, const SoftLabel& y_j) {
  if (mix_layer > params.config.num_blocks) throw ConfigError("mix_hidden: mix layer exceeds the number of blocks");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mix_hidden: lambda must lie in [0, 1]");
  MixedItem<Scalar> item;
  item.variant = MixVariant::hidden;
  item.anchor = ex_i;
  item.partner = ex_j;
  item.lambda = lambda;
  item.mix_layer = mix_layer;
  const Index T = std::max(ex_i.length(), ex_j.length());
  item.mask_weights = lambda * mask_weights(ex_i, T) + (1.0 - lambda) * mask_weights(ex_j, T);
  item.label = mix_labels(y_i, y_j, lambda);
  return item;
}

/// Replaces the least-salient span of the anchor with the most-salient span
/// of the partner, same length, so the sequence length is preserved. The
/// label uses the realised lambda = 1 - span_len / len_i.
template <typename Scalar>
MixedItem<Scalar> mix_span(const ParamStore<Scalar>& params, const Example& ex_i, const Example& ex_j,
                           double lambda_target, const SoftLabel& y_i, const SoftLabel& y_j) {
  if (!(lambda_target >= 0.0 && lambda_target <= 1.0)) throw ConfigError("mix_span: lambda must lie in [0, 1]");
  const Index n_i = ex_i.length();
  const Index n_j = ex_j.length();
  if (n_i == 0 || n_j == 0) throw DataError("mix_span: both inputs need at least one real token");

  MixedItem<Scalar> item;
  item.variant = MixVariant::span;
  item.anchor = ex_i;
  item.partner = ex_j;
  item.tokens = ex_i;
  item.span_len = span_length(lambda_target, n_i, n_j);
  if (item.span_len > 0) {
    const auto s_i = saliency(params, ex_i);
    const auto s_j = saliency(params, ex_j);
    item.anchor_start = least_salient_window(s_i, n_i, item.span_len);
    item.partner_start = most_salient_window(s_j, n_j, item.span_len);
    for (Index k = 0; k < item.span_len; ++k)
      item.tokens.token_ids[static_cast<std::size_t>(item.anchor_start + k)] =
          ex_j.token_ids[static_cast<std::size_t>(item.partner_start + k)];
  }
  item.lambda = 1.0 - static_cast<double>(item.span_len) / static_cast<double>(n_i);
  item.label = mix_labels(y_i, y_j, item.lambda);
  return item;
}

template <typename Scalar>
MixedItem<Scalar> mix(const ParamStore<Scalar>& params, const MixPlan& plan, const Example& ex_i,
                      const Example& ex_j, const SoftLabel& y_i, const SoftLabel& y_j) {
  switch (plan.variant) {
    case MixVariant::embed:
      return mix_embed(params, ex_i, ex_j, plan.lambda, y_i, y_j);
    case MixVariant::hidden:
      return mix_hidden(params, ex_i, ex_j, plan.lambda, plan.mix_layer, y_i, y_j);
    case MixVariant::span:
      return mix_span(params, ex_i, ex_j, plan.lambda, y_i, y_j);
  }
  throw ConfigError("unknown mix variant");
}

/// Differentiable graph of a mixed item, rebuilt from the originals so
/// gradients reach the embedding table.
template <typename Scalar>
EncoderGraph build_item_graph(tensor::Tape<Scalar>& tape, const ParamStore<Scalar>& params,
                              const MixedItem<Scalar>& item) {
  switch (item.variant) {
    case MixVariant::embed:
      return build_forward_mixed_hidden(tape, params, item.anchor, item.partner, item.lambda, 0);
    case MixVariant::hidden:
      return build_forward_mixed_hidden(tape, params, item.anchor, item.partner, item.lambda, item.mix_layer);
    case MixVariant::span:
      return build_forward(tape, params, item.tokens);
  }
  throw ConfigError("unknown mix variant");
}

template <typename Scalar>
ForwardTrace<Scalar> forward_item(const ParamStore<Scalar>& params, const MixedItem<Scalar>& item) {
  if (item.variant == MixVariant::embed) return forward_from_embeddings(params, item.embeddings, item.mask_weights);
  tensor::Tape<Scalar> tape;
  return extract_trace(tape, build_item_graph(tape, params, item));
}

}  // namespace semix
