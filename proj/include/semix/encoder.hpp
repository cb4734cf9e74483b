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

// Text classifier: token embeddings, L residual position-wise blocks
// h_l = h_{l-1} + tanh(h_{l-1} W_l + b_l), masked mean pooling, and a
// softmax head. Intermediate states are exposed so inputs can be mixed at
// the embedding layer or after any block.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semix/core.hpp"
#include "semix/corpus.hpp"
#include "semix/rng.hpp"
#include "semix/tensor.hpp"

namespace semix {

struct ModelConfig {
  std::uint32_t vocab_size = 2;
  std::uint32_t embed_dim = 64;
  std::uint32_t num_blocks = 2;
  std::uint32_t hidden_dim = 64;
  std::uint32_t num_classes = 2;
  std::uint32_t max_len = 128;

  /// Throws ConfigError on zero dims or embed_dim != hidden_dim.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

std::string block_weight_name(std::uint32_t block);
std::string block_bias_name(std::uint32_t block);
inline const std::string kEmbeddingName = "embedding";
inline const std::string kHeadWeightName = "head.weight";
inline const std::string kHeadBiasName = "head.bias";

/// Canonical parameter order (checkpoint order).
std::vector<std::string> parameter_names(const ModelConfig& config);

template <typename Scalar>
struct ParamStore {
  ModelConfig config;
  tensor::NamedTensors<Scalar> tensors;

  const Matrix<Scalar>& at(const std::string& name) const { return tensors.at(name); }
  Matrix<Scalar>& at(const std::string& name) { return tensors.at(name); }

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    out.config = config;
    for (const auto& [name, m] : tensors) out.tensors.emplace(name, m.template cast<Other>());
    return out;
  }

  bool operator==(const ParamStore& other) const {
    if (!(config == other.config) || tensors.size() != other.tensors.size()) return false;
    for (const auto& [name, m] : tensors) {
      auto it = other.tensors.find(name);
      if (it == other.tensors.end() || it->second.rows() != m.rows() || it->second.cols() != m.cols() ||
          it->second != m)
        return false;
    }
    return true;
  }
};

/// Embeddings and weights uniform in [-0.1, 0.1], biases zero, PAD row zero.
template <typename Scalar>
ParamStore<Scalar> init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ParamStore<Scalar> p;
  p.config = config;
  Rng rng = make_rng(seed, {0x696E6974ULL});
  auto uniform = [&](Index rows, Index cols) {
    Matrix<Scalar> m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = Scalar(uniform01(rng) * 0.2 - 0.1);
    return m;
  };
  const auto E = static_cast<Index>(config.embed_dim);
  const auto H = static_cast<Index>(config.hidden_dim);
  const auto C = static_cast<Index>(config.num_classes);
  Matrix<Scalar> emb = uniform(static_cast<Index>(config.vocab_size), E);
  emb.row(kPadId).setZero();
  p.tensors.emplace(kEmbeddingName, std::move(emb));
  for (std::uint32_t l = 0; l < config.num_blocks; ++l) {
    p.tensors.emplace(block_weight_name(l), uniform(H, H));
    p.tensors.emplace(block_bias_name(l), Matrix<Scalar>::Zero(1, H));
  }
  p.tensors.emplace(kHeadWeightName, uniform(H, C));
  p.tensors.emplace(kHeadBiasName, Matrix<Scalar>::Zero(1, C));
  return p;
}

template <typename Scalar>
struct ForwardTrace {
  Matrix<Scalar> token_embeddings;             // [T x E]
  std::vector<Matrix<Scalar>> hidden_states;  // L + 1 entries, [0] = embeddings
  RowVector<Scalar> pooled;                   // [E]
  RowVector<Scalar> logits;                   // [C]
  RowVector<Scalar> probs;                    // [C]
};

/// Tape handles of one encoder pass.
struct EncoderGraph {
  tensor::Var embeddings;
  std::vector<tensor::Var> hidden;  // L + 1 entries
  tensor::Var pooled;
  tensor::Var logits;
  tensor::Var probs;
};

/// Mask as pooling weights, padded with zeros to `length`.
inline Vector<Accum> mask_weights(const Example& example, Index length) {
  Vector<Accum> w = Vector<Accum>::Zero(length);
  for (Index t = 0; t < length && t < static_cast<Index>(example.mask.size()); ++t) w(t) = example.mask[t];
  return w;
}

/// Token ids of the active prefix, right-padded with PAD to `length`.
inline std::vector<TokenId> active_ids(const Example& example, Index length) {
  std::vector<TokenId> ids(static_cast<std::size_t>(length), kPadId);
  const Index n = std::min<Index>(example.length(), length);
  for (Index t = 0; t < n; ++t) ids[static_cast<std::size_t>(t)] = example.token_ids[static_cast<std::size_t>(t)];
  return ids;
}

namespace encoder {

inline void require_tokens(const Example& example, const ModelConfig& config) {
  if (example.length() == 0) throw DataError("forward: example has no real tokens");
  for (TokenId id : example.token_ids)
    if (id < 0 || static_cast<std::uint32_t>(id) >= config.vocab_size)
      throw ShapeError("forward: token id outside the vocabulary");
}

/// Embedding lookup of an example padded (or trimmed) to `length` positions.
template <typename Scalar>
tensor::Var embed(tensor::Tape<Scalar>& tape, const ParamStore<Scalar>& params, const Example& example,
                  Index length) {
  require_tokens(example, params.config);
  tensor::Var table = tape.parameter(kEmbeddingName, params.at(kEmbeddingName));
  const auto ids = active_ids(example, length);
  return tensor::gather_rows(tape, table, ids);
}

/// Applies blocks [first, last) to h, appending each output to `states`.
template <typename Scalar>
tensor::Var run_blocks(tensor::Tape<Scalar>& tape, const ParamStore<Scalar>& params, tensor::Var h,
                       std::uint32_t first, std::uint32_t last, std::vector<tensor::Var>& states) {
  for (std::uint32_t l = first; l < last; ++l) {
    tensor::Var w = tape.parameter(block_weight_name(l), params.at(block_weight_name(l)));
    tensor::Var b = tape.parameter(block_bias_name(l), params.at(block_bias_name(l)));
    tensor::Var pre = tensor::add_bias(tape, tensor::matmul(tape, h, w), b);
    h = tensor::add(tape, h, tensor::tanh(tape, pre));
    states.push_back(h);
  }
  return h;
}

/// Pools the final states and applies the classifier head.
template <typename Scalar>
void head(tensor::Tape<Scalar>& tape, const ParamStore<Scalar>& params, tensor::Var h,
          const Vector<Accum>& weights, EncoderGraph& graph) {
  graph.pooled = tensor::mean_pool_masked(tape, h, weights);
  tensor::Var w = tape.parameter(kHeadWeightName, params.at(kHeadWeightName));
  tensor::Var b = tape.parameter(kHeadBiasName, params.at(kHeadBiasName));
  graph.logits = tensor::add_bias(tape, tensor::matmul(tape, graph.pooled, w), b);
  graph.probs = tensor::softmax(tape, graph.logits);
}

}  // namespace encoder

template <typename Scalar>
EncoderGraph build_forward_from_embeddings(tensor::Tape<Scalar>& tape, const ParamStore<Scalar>& params,
                                           tensor::Var embeddings, const Vector<Accum>& weights) {
  const auto& e = tape.value(embeddings);
  if (e.cols() != static_cast<Index>(params.config.embed_dim) || e.rows() != weights.size())
    throw ShapeError("forward_from_embeddings: embeddings must be [T x embed_dim] with T mask weights");
  for (Index t = 0; t < weights.size(); ++t)
    if (!(weights(t) >= 0.0 && weights(t) <= 1.0)) throw DataError("forward_from_embeddings: mask weight outside [0, 1]");
  EncoderGraph g;
  g.embeddings = embeddings;
  g.hidden.push_back(embeddings);
  tensor::Var h = encoder::run_blocks(tape, params, embeddings, 0, params.config.num_blocks, g.hidden);
  encoder::head(tape, params, h, weights, g);
  return g;
}

template <typename Scalar>
EncoderGraph build_forward(tensor::Tape<Scalar>& tape, const ParamStore<Scalar>& params, const Example& example) {
  const Index n = example.length();
  tensor::Var e = encoder::embed(tape, params, example, n);
  return build_forward_from_embeddings(tape, params, e, mask_weights(example, n));
}

/// Both inputs run through blocks [0, mix_layer); their states are then
/// interpolated, mask weights become lambda*mask_i + (1-lambda)*mask_j, and
/// the remaining blocks run on the mixture. mix_layer = 0 mixes embeddings.
template <typename Scalar>
EncoderGraph build_forward_mixed_hidden(tensor::Tape<Scalar>& tape, const ParamStore<Scalar>& params,
                                        const Example& ex_i, const Example& ex_j, double lambda,
                                        std::uint32_t mix_layer) {
  if (mix_layer > params.config.num_blocks) throw ConfigError("mix layer exceeds the number of blocks");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  const Index T = std::max(ex_i.length(), ex_j.length());
  std::vector<tensor::Var> states_i, states_j;
  tensor::Var hi = encoder::embed(tape, params, ex_i, T);
  tensor::Var hj = encoder::embed(tape, params, ex_j, T);
  states_i.push_back(hi);
  states_j.push_back(hj);
  hi = encoder::run_blocks(tape, params, hi, 0, mix_layer, states_i);
  hj = encoder::run_blocks(tape, params, hj, 0, mix_layer, states_j);

  EncoderGraph g;
  tensor::Var mixed = tensor::interpolate(tape, hi, hj, lambda);
  const Vector<Accum> weights = lambda * mask_weights(ex_i, T) + (1.0 - lambda) * mask_weights(ex_j, T);
  g.embeddings = mix_layer == 0 ? mixed : tensor::interpolate(tape, states_i[0], states_j[0], lambda);
  for (std::uint32_t l = 0; l < mix_layer; ++l)
    g.hidden.push_back(tensor::interpolate(tape, states_i[l], states_j[l], lambda));
  g.hidden.push_back(mixed);
  tensor::Var h = encoder::run_blocks(tape, params, mixed, mix_layer, params.config.num_blocks, g.hidden);
  encoder::head(tape, params, h, weights, g);
  return g;
}

template <typename Scalar>
ForwardTrace<Scalar> extract_trace(const tensor::Tape<Scalar>& tape, const EncoderGraph& g) {
  ForwardTrace<Scalar> t;
  t.token_embeddings = tape.value(g.embeddings);
  for (auto v : g.hidden) t.hidden_states.push_back(tape.value(v));
  t.pooled = tape.value(g.pooled).row(0);
  t.logits = tape.value(g.logits).row(0);
  t.probs = tape.value(g.probs).row(0);
  return t;
}

template <typename Scalar>
ForwardTrace<Scalar> forward(const ParamStore<Scalar>& params, const Example& example) {
  tensor::Tape<Scalar> tape;
  return extract_trace(tape, build_forward(tape, params, example));
}

template <typename Scalar>
ForwardTrace<Scalar> forward_from_embeddings(const ParamStore<Scalar>& params, const Matrix<Scalar>& embeddings,
                                             const Vector<Accum>& weights) {
  tensor::Tape<Scalar> tape;
  tensor::Var e = tape.input(embeddings);
  return extract_trace(tape, build_forward_from_embeddings(tape, params, e, weights));
}

template <typename Scalar>
ForwardTrace<Scalar> forward_mixed_hidden(const ParamStore<Scalar>& params, const Example& ex_i,
                                          const Example& ex_j, double lambda, std::uint32_t mix_layer) {
  tensor::Tape<Scalar> tape;
  return extract_trace(tape, build_forward_mixed_hidden(tape, params, ex_i, ex_j, lambda, mix_layer));
}

/// Embedding rows of an example's active prefix padded to `length`.
template <typename Scalar>
Matrix<Scalar> lookup_embeddings(const ParamStore<Scalar>& params, const Example& example, Index length) {
  encoder::require_tokens(example, params.config);
  const auto& table = params.at(kEmbeddingName);
  const auto ids = active_ids(example, length);
  Matrix<Scalar> out(length, table.cols());
  for (Index t = 0; t < length; ++t) out.row(t) = table.row(ids[static_cast<std::size_t>(t)]);
  return out;
}

// Checkpoint file: "SEMX", u32 version = 1, six u32 config dims, then for
// each tensor: u32 name length, UTF-8 name, u32 rank, u32 dims, float32
// values row-major. All integers and floats are little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParamStore<float>& params, const std::filesystem::path& path);
ParamStore<float> load_checkpoint(const std::filesystem::path& path);
/// Also throws ShapeError when the stored config differs from `expected`.
ParamStore<float> load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace semix
