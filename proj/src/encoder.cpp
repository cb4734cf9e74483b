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

#include "semix/encoder.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <iterator>

#include <fmt/core.h>

namespace semix {

void ModelConfig::validate() const {
  if (vocab_size < 2 || embed_dim == 0 || num_blocks == 0 || hidden_dim == 0 || num_classes == 0 || max_len == 0)
    throw ConfigError("model config: all dimensions must be >= 1 and vocab_size >= 2");
  if (embed_dim != hidden_dim) throw ConfigError("model config: embed_dim must equal hidden_dim (residual blocks)");
}

std::string block_weight_name(std::uint32_t block) { return fmt::format("block{}.weight", block); }
std::string block_bias_name(std::uint32_t block) { return fmt::format("block{}.bias", block); }

std::vector<std::string> parameter_names(const ModelConfig& config) {
  std::vector<std::string> names{kEmbeddingName};
  for (std::uint32_t l = 0; l < config.num_blocks; ++l) {
    names.push_back(block_weight_name(l));
    names.push_back(block_bias_name(l));
  }
  names.push_back(kHeadWeightName);
  names.push_back(kHeadBiasName);
  return names;
}

namespace {

constexpr std::array<char, 4> kMagic{'S', 'E', 'M', 'X'};

bool is_bias(const std::string& name) { return name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0; }

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    pos_ += 4;
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint: truncated file");
  }

  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ParamStore<float>& params, const std::filesystem::path& path) {
  const ModelConfig& c = params.config;
  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, kCheckpointVersion);
  for (std::uint32_t v : {c.vocab_size, c.embed_dim, c.num_blocks, c.hidden_dim, c.num_classes, c.max_len})
    put_u32(out, v);
  for (const auto& name : parameter_names(c)) {
    const Matrix<float>& m = params.at(name);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    if (is_bias(name)) {
      put_u32(out, 1);
      put_u32(out, static_cast<std::uint32_t>(m.cols()));
    } else {
      put_u32(out, 2);
      put_u32(out, static_cast<std::uint32_t>(m.rows()));
      put_u32(out, static_cast<std::uint32_t>(m.cols()));
    }
    for (Index i = 0; i < m.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(m.data()[i]));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError(fmt::format("cannot write checkpoint '{}'", path.string()));
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError(fmt::format("failed writing checkpoint '{}'", path.string()));
}

ParamStore<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError(fmt::format("cannot read checkpoint '{}'", path.string()));
  Reader r(std::string(std::istreambuf_iterator<char>(f), {}));

  if (r.str(4) != std::string(kMagic.begin(), kMagic.end())) throw FormatError("checkpoint: bad magic (not a SEMX file)");
  if (const auto version = r.u32(); version != kCheckpointVersion)
    throw FormatError(fmt::format("checkpoint: unsupported version {}", version));

  ParamStore<float> p;
  ModelConfig& c = p.config;
  c.vocab_size = r.u32();
  c.embed_dim = r.u32();
  c.num_blocks = r.u32();
  c.hidden_dim = r.u32();
  c.num_classes = r.u32();
  c.max_len = r.u32();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(fmt::format("checkpoint: invalid config block ({})", e.what()));
  }

  const ParamStore<float> shapes = init_params<float>(c, 0);
  while (!r.done()) {
    const std::string name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank < 1 || rank > 3) throw FormatError(fmt::format("checkpoint: tensor '{}' has rank {}", name, rank));
    std::vector<std::uint32_t> dims(rank);
    std::size_t count = 1;
    for (auto& d : dims) {
      d = r.u32();
      count *= d;
    }
    auto expected = shapes.tensors.find(name);
    if (expected == shapes.tensors.end()) throw FormatError(fmt::format("checkpoint: unexpected tensor '{}'", name));
    const Index rows = rank == 1 ? 1 : static_cast<Index>(dims[0]);
    const Index cols = static_cast<Index>(dims.back());
    if (rank > 2 || rows != expected->second.rows() || cols != expected->second.cols())
      throw ShapeError(fmt::format("checkpoint: tensor '{}' shape disagrees with the config block", name));
    Matrix<float> m(rows, cols);
    for (std::size_t i = 0; i < count; ++i) m.data()[i] = std::bit_cast<float>(r.u32());
    if (!p.tensors.emplace(name, std::move(m)).second)
      throw FormatError(fmt::format("checkpoint: duplicate tensor '{}'", name));
  }
  for (const auto& name : parameter_names(c))
    if (!p.tensors.count(name)) throw FormatError(fmt::format("checkpoint: truncated file (missing tensor '{}')", name));
  return p;
}

ParamStore<float> load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  ParamStore<float> p = load_checkpoint(path);
  if (!(p.config == expected))
    throw ShapeError(fmt::format(
        "checkpoint '{}' was written for vocab={} embed={} blocks={} hidden={} classes={}, expected vocab={} embed={} "
        "blocks={} hidden={} classes={}",
        path.string(), p.config.vocab_size, p.config.embed_dim, p.config.num_blocks, p.config.hidden_dim,
        p.config.num_classes, expected.vocab_size, expected.embed_dim, expected.num_blocks, expected.hidden_dim,
        expected.num_classes));
  return p;
}

}  // namespace semix
