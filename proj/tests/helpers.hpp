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

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "semix/corpus.hpp"
#include "semix/encoder.hpp"
#include "semix/rng.hpp"

namespace testutil {

inline semix::ModelConfig tiny_config(std::uint32_t vocab = 12, std::uint32_t dim = 6, std::uint32_t blocks = 2,
                                      std::uint32_t classes = 3, std::uint32_t max_len = 8) {
  semix::ModelConfig c;
  c.vocab_size = vocab;
  c.embed_dim = dim;
  c.hidden_dim = dim;
  c.num_blocks = blocks;
  c.num_classes = classes;
  c.max_len = max_len;
  return c;
}

/// Random example with 1..max_len real tokens drawn from ids >= 2.
inline semix::Example random_example(semix::Rng& rng, const semix::ModelConfig& c, std::size_t id = 0,
                                     int min_len = 1) {
  semix::Example ex;
  ex.id = id;
  const auto max_len = static_cast<std::uint64_t>(c.max_len);
  const auto len = static_cast<std::uint64_t>(min_len) + semix::uniform_index(rng, max_len - min_len + 1);
  for (std::uint64_t t = 0; t < max_len; ++t) {
    const bool real = t < len;
    ex.token_ids.push_back(real ? static_cast<semix::TokenId>(2 + semix::uniform_index(rng, c.vocab_size - 2)) : 0);
    ex.mask.push_back(real ? 1 : 0);
  }
  ex.label = static_cast<int>(semix::uniform_index(rng, c.num_classes));
  ex.one_hot = semix::one_hot(ex.label, static_cast<int>(c.num_classes));
  return ex;
}

/// Mean one-hot cross-entropy of the full classifier over `batch`, in the
/// form grad_check expects. The builder copies the perturbed tensors into a
/// store that outlives each tape.
template <typename Scalar>
semix::tensor::LossBuilder<Scalar> batch_loss(const semix::ModelConfig& config, std::vector<semix::Example> batch) {
  auto holder = std::make_shared<semix::ParamStore<Scalar>>();
  holder->config = config;
  return [holder, batch](semix::tensor::Tape<Scalar>& tape, const semix::tensor::NamedTensors<Scalar>& t) {
    holder->tensors = t;
    semix::tensor::Var total;
    for (const auto& ex : batch) {
      const auto g = semix::build_forward(tape, *holder, ex);
      const auto l = semix::tensor::cross_entropy(tape, g.probs, ex.one_hot);
      total = total.valid() ? semix::tensor::add(tape, total, l) : l;
    }
    return semix::tensor::scale(tape, total, 1.0 / static_cast<double>(batch.size()));
  };
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("semix_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (const auto& x : v) out += (out.empty() ? "" : " ") + std::to_string(x);
  return out;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testutil
