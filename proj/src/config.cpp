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

#include "semix/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/core.h>

#include "semix/mixup.hpp"
#include "semix/smoothing.hpp"

namespace semix {

namespace {

enum class Kind { text, integer, real, boolean, choice, seed_list };

struct KeySpec {
  std::string_view key;
  std::string_view default_value;
  Kind kind;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_open = false;
  bool hi_open = false;
  std::vector<std::string_view> choices = {};
};

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s = {
      {"name", "run", Kind::text},
      {"split_dir", "", Kind::text},
      {"data_train", "", Kind::text},
      {"data_test", "", Kind::text},
      {"data_format", "tsv", Kind::choice, 0, 0, false, false, {"tsv", "jsonl"}},
      {"shots", "10", Kind::integer, 1, kInf},
      {"dev_fraction", "0.25", Kind::real, 0, 1, true, true},
      {"dev_max", "500", Kind::integer, 1, kInf},
      {"max_len", "128", Kind::integer, 1, kInf},
      {"min_freq", "1", Kind::integer, 1, kInf},
      {"embed_dim", "64", Kind::integer, 1, kInf},
      {"num_blocks", "2", Kind::integer, 1, kInf},
      {"batch_size", "32", Kind::integer, 1, kInf},
      {"stage1_lr", "0.001", Kind::real, 0, kInf, true},
      {"stage2_lr", "0.0002", Kind::real, 0, kInf, true},
      {"weight_decay", "0.0001", Kind::real, 0, kInf},
      {"warmup_fraction", "0.1", Kind::real, 0, 1, false, true},
      {"stage1_epochs", "30", Kind::integer, 0, kInf},
      {"stage2_epochs", "20", Kind::integer, 0, kInf},
      {"selection_policy", "easy_to_hard", Kind::choice, 0, 0, false, false, {"random", "easy_to_hard", "hard_to_easy"}},
      {"mix_variant", "span", Kind::choice, 0, 0, false, false, {"embed", "hidden", "span"}},
      {"mix_layer", "1", Kind::integer, 0, kInf},
      {"lambda_dist", "beta", Kind::choice, 0, 0, false, false, {"beta", "fixed"}},
      {"lambda_param", "0.2", Kind::real, 0, kInf},
      {"smoothing", "ils", Kind::choice, 0, 0, false, false, {"none", "uniform_ls", "ils"}},
      {"alpha", "0.1", Kind::real, 0, 1},
      {"seed", "1", Kind::integer, 0, kInf},
      {"seeds", "1,2,3,4,5", Kind::seed_list},
      {"rescore_every_epoch", "false", Kind::boolean},
      {"append_originals", "false", Kind::boolean},
  };
  return s;
}

const KeySpec* find_spec(std::string_view key) {
  for (const auto& s : schema())
    if (s.key == key) return &s;
  return nullptr;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::optional<bool> parse_bool(std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  return std::nullopt;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    std::uint64_t s = 0;
    if (!parse_number(text.substr(start, comma - start), s))
      throw ConfigError(fmt::format("seeds: '{}' is not a comma-separated list of non-negative integers", text));
    seeds.push_back(s);
    start = comma + 1;
  }
  return seeds;
}

void check_range(const KeySpec& s, double v, std::string_view raw) {
  const bool lo_ok = s.lo_open ? v > s.lo : v >= s.lo;
  const bool hi_ok = s.hi_open ? v < s.hi : v <= s.hi;
  if (!std::isfinite(v) || !lo_ok || !hi_ok)
    throw ConfigError(fmt::format("{}={} is out of range {}{}, {}{}", s.key, raw, s.lo_open ? '(' : '[', s.lo, s.hi,
                                  s.hi_open ? ')' : ']'));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& s : schema()) values_.emplace(std::string(s.key), std::string(s.default_value));
}

bool RunConfig::is_key(std::string_view key) { return find_spec(key) != nullptr; }

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& s : schema()) out.emplace_back(s.key);
  return out;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const KeySpec* s = find_spec(key);
  if (s == nullptr) throw ConfigError(fmt::format("unknown config key '{}'", key));
  switch (s->kind) {
    case Kind::text:
      break;
    case Kind::integer: {
      std::int64_t v = 0;
      if (!parse_number(value, v)) throw ConfigError(fmt::format("{}: '{}' is not an integer", key, value));
      check_range(*s, static_cast<double>(v), value);
      break;
    }
    case Kind::real: {
      double v = 0;
      if (!parse_number(value, v)) throw ConfigError(fmt::format("{}: '{}' is not a number", key, value));
      check_range(*s, v, value);
      break;
    }
    case Kind::boolean:
      if (!parse_bool(value)) throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, value));
      break;
    case Kind::choice: {
      bool ok = false;
      for (auto c : s->choices) ok = ok || c == value;
      if (!ok) throw ConfigError(fmt::format("{}: '{}' is not one of the allowed values", key, value));
      break;
    }
    case Kind::seed_list:
      parse_seed_list(value);
      break;
  }
  values_.find(key)->second = std::string(value);
}

const std::string& RunConfig::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  return it->second;
}

std::int64_t RunConfig::get_int(std::string_view key) const {
  std::int64_t v = 0;
  if (!parse_number(get(key), v)) throw ConfigError(fmt::format("{} is not an integer", key));
  return v;
}

double RunConfig::get_real(std::string_view key) const {
  double v = 0;
  if (!parse_number(get(key), v)) throw ConfigError(fmt::format("{} is not a number", key));
  return v;
}

bool RunConfig::get_bool(std::string_view key) const { return parse_bool(get(key)).value(); }

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += fmt::format("{}={}\n", k, v);
  return out;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string RunConfig::fingerprint() const { return fnv1a_hex(canonical_text()); }

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.batch_size = static_cast<std::size_t>(get_int("batch_size"));
  t.stage1_lr = get_real("stage1_lr");
  t.stage2_lr = get_real("stage2_lr");
  t.weight_decay = get_real("weight_decay");
  t.warmup_fraction = get_real("warmup_fraction");
  t.stage1_epochs = static_cast<int>(get_int("stage1_epochs"));
  t.stage2_epochs = static_cast<int>(get_int("stage2_epochs"));
  t.selection_policy = parse_selection_policy(get("selection_policy"));
  t.mix_variant = parse_mix_variant(get("mix_variant"));
  t.mix_layer = static_cast<std::uint32_t>(get_int("mix_layer"));
  t.lambda = get("lambda_dist") == "beta" ? LambdaDist::beta(get_real("lambda_param"))
                                          : LambdaDist::fixed(get_real("lambda_param"));
  t.smoothing.mode = parse_smoothing_mode(get("smoothing"));
  t.smoothing.alpha = get_real("alpha");
  t.seed = static_cast<std::uint64_t>(get_int("seed"));
  t.rescore_every_epoch = get_bool("rescore_every_epoch");
  t.append_originals = get_bool("append_originals");
  if (t.mix_variant == MixVariant::hidden && t.mix_layer > static_cast<std::uint32_t>(get_int("num_blocks")))
    throw ConfigError("mix_layer exceeds num_blocks");
  t.validate();
  return t;
}

ModelConfig RunConfig::model_config(std::size_t vocab_size, std::size_t num_classes) const {
  ModelConfig m;
  m.vocab_size = static_cast<std::uint32_t>(vocab_size);
  m.embed_dim = static_cast<std::uint32_t>(get_int("embed_dim"));
  m.hidden_dim = m.embed_dim;
  m.num_blocks = static_cast<std::uint32_t>(get_int("num_blocks"));
  m.num_classes = static_cast<std::uint32_t>(num_classes);
  m.max_len = static_cast<std::uint32_t>(get_int("max_len"));
  m.validate();
  return m;
}

FewShotOptions RunConfig::few_shot_options() const {
  FewShotOptions o;
  o.shots_per_class = static_cast<int>(get_int("shots"));
  o.dev_fraction = get_real("dev_fraction");
  o.dev_max = static_cast<std::size_t>(get_int("dev_max"));
  o.seed = static_cast<std::uint64_t>(get_int("seed"));
  return o;
}

std::vector<std::uint64_t> RunConfig::seeds() const { return parse_seed_list(get("seeds")); }

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key=value", line_no));
    base.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void apply_overrides(RunConfig& config, const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [k, v] : overrides) config.set(k, v);
}

}  // namespace semix
