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

#include "semix/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "semix/rng.hpp"

namespace semix {
namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<RawRecord> parse_tsv_row(std::string_view line) {
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos) return std::nullopt;
  std::string_view label = trim(line.substr(0, tab));
  std::string_view text = trim(line.substr(tab + 1));
  if (label.empty() || text.empty()) return std::nullopt;
  return RawRecord{std::string(text), std::string(label)};
}

std::optional<RawRecord> parse_jsonl_row(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto label = j.find("label");
  auto text = j.find("text");
  if (label == j.end() || text == j.end() || !label->is_string() || !text->is_string()) return std::nullopt;
  std::string_view l = trim(label->get_ref<const std::string&>());
  std::string_view t = trim(text->get_ref<const std::string&>());
  if (l.empty() || t.empty()) return std::nullopt;
  return RawRecord{std::string(t), std::string(l)};
}

}  // namespace

DataFormat parse_data_format(std::string_view name) {
  if (name == "tsv") return DataFormat::tsv;
  if (name == "jsonl") return DataFormat::jsonl;
  throw ConfigError(fmt::format("unknown data format '{}' (expected tsv or jsonl)", name));
}

LoadedRecords load_dataset(const std::filesystem::path& path, DataFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read dataset '{}'", path.string()));

  LoadedRecords out;
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++rows;
    auto rec = format == DataFormat::tsv ? parse_tsv_row(line) : parse_jsonl_row(line);
    if (rec) {
      out.records.push_back(std::move(*rec));
    } else {
      ++out.malformed;
    }
  }
  if (out.records.empty()) throw DataError(fmt::format("no records in '{}'", path.string()));
  if (out.malformed * 10 > rows)
    throw DataError(fmt::format("'{}': {} of {} rows malformed (more than 10%)", path.string(), out.malformed, rows));
  if (out.malformed > 0)
    log_warning(fmt::format("'{}': skipped {} malformed row(s) of {}", path.string(), out.malformed, rows));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool ascii = c < 0x80;
    if (ascii && (std::isspace(c) || std::ispunct(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.push_back(ascii ? static_cast<char>(std::tolower(c)) : ch);
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// ---------------------------------------------------------------------------

Vocab::Vocab() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

TokenId Vocab::add(const std::string& token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

TokenId Vocab::lookup(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw std::out_of_range("vocab: id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write vocab '{}'", path.string()));
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read vocab '{}'", path.string()));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < 2 || lines[0] != kPadToken || lines[1] != kUnkToken)
    throw DataError(fmt::format("'{}' is not a vocab file (missing reserved tokens)", path.string()));
  Vocab v;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (v.contains(lines[i])) throw DataError(fmt::format("vocab '{}': duplicate token '{}'", path.string(), lines[i]));
    v.add(lines[i]);
  }
  return v;
}

Vocab build_vocab(std::span<const RawRecord> records, int min_freq) {
  if (min_freq < 1) throw ConfigError("build_vocab: min_freq must be >= 1");
  if (records.empty()) throw DataError("build_vocab: no records");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& r : records)
    for (auto& t : tokenize(r.text)) ++counts[std::move(t)];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts)
    if (n >= static_cast<std::size_t>(min_freq)) kept.emplace_back(tok, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  Vocab v;
  for (const auto& [tok, n] : kept) v.add(tok);
  return v;
}

LabelMap make_label_map(std::span<const RawRecord> records) {
  std::vector<std::string> names;
  for (const auto& r : records) names.push_back(r.label_name);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  LabelMap m;
  for (std::size_t i = 0; i < names.size(); ++i) m.emplace(names[i], static_cast<int>(i));
  return m;
}

std::vector<std::string> label_names(const LabelMap& labels) {
  std::vector<std::string> names(labels.size());
  for (const auto& [name, idx] : labels) names.at(static_cast<std::size_t>(idx)) = name;
  return names;
}

// ---------------------------------------------------------------------------

Index Example::length() const {
  Index n = 0;
  for (auto m : mask) n += m;
  return n;
}

VectorXd one_hot(int label, int num_classes) {
  VectorXd v = VectorXd::Zero(num_classes);
  v(label) = 1.0;
  return v;
}

Example encode(const RawRecord& record, const Vocab& vocab, const LabelMap& labels, int max_len, std::size_t id) {
  if (max_len < 1) throw ConfigError("encode: max_len must be >= 1");
  auto it = labels.find(record.label_name);
  if (it == labels.end()) throw DataError(fmt::format("unknown label '{}'", record.label_name));

  Example ex;
  ex.id = id;
  ex.label = it->second;
  ex.one_hot = one_hot(ex.label, static_cast<int>(labels.size()));
  ex.token_ids.assign(static_cast<std::size_t>(max_len), kPadId);
  ex.mask.assign(static_cast<std::size_t>(max_len), 0);
  auto tokens = tokenize(record.text);
  const std::size_t n = std::min(tokens.size(), static_cast<std::size_t>(max_len));
  for (std::size_t t = 0; t < n; ++t) {
    ex.token_ids[t] = vocab.lookup(tokens[t]);
    ex.mask[t] = 1;
  }
  return ex;
}

std::string decode(const Example& example, const Vocab& vocab) {
  std::string out;
  for (std::size_t t = 0; t < example.token_ids.size() && example.mask[t] != 0; ++t) {
    const TokenId id = example.token_ids[t];
    if (id == kUnkId) continue;
    if (!out.empty()) out.push_back(' ');
    out += vocab.token(id);
  }
  return out;
}

// ---------------------------------------------------------------------------

SplitManifest sample_few_shot(std::span<const RawRecord> records, const FewShotOptions& options,
                              std::optional<std::size_t> first_test_id) {
  if (options.shots_per_class < 1) throw ConfigError("shots_per_class must be >= 1");
  if (!(options.dev_fraction > 0.0 && options.dev_fraction < 1.0))
    throw ConfigError("dev_fraction must lie in (0, 1)");
  const std::size_t pool_end = first_test_id.value_or(records.size());
  if (pool_end > records.size()) throw DataError("first_test_id beyond record count");

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < pool_end; ++i) by_class[records[i].label_name].push_back(i);

  SplitManifest m;
  m.shots_per_class = options.shots_per_class;
  m.seed = options.seed;
  std::vector<char> used(pool_end, 0);
  std::uint64_t class_index = 0;
  for (auto& [label, ids] : by_class) {
    if (ids.size() < static_cast<std::size_t>(options.shots_per_class))
      throw DataError(fmt::format("class '{}' has {} record(s), fewer than shots_per_class={}", label, ids.size(),
                                  options.shots_per_class));
    Rng rng = make_rng(options.seed, {0x73686F74ULL, class_index++});
    shuffle_in_place(ids, rng);
    for (int s = 0; s < options.shots_per_class; ++s) {
      m.train.push_back(ids[static_cast<std::size_t>(s)]);
      used[ids[static_cast<std::size_t>(s)]] = 1;
    }
  }
  std::sort(m.train.begin(), m.train.end());

  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < pool_end; ++i)
    if (!used[i]) rest.push_back(i);
  Rng rng = make_rng(options.seed, {0x646576ULL});
  shuffle_in_place(rest, rng);
  const auto dev_size =
      std::min(options.dev_max, static_cast<std::size_t>(options.dev_fraction * static_cast<double>(rest.size())));
  m.dev.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(dev_size));
  std::sort(m.dev.begin(), m.dev.end());

  if (first_test_id) {
    for (std::size_t i = *first_test_id; i < records.size(); ++i) m.test.push_back(i);
  } else {
    m.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(dev_size), rest.end());
    std::sort(m.test.begin(), m.test.end());
  }
  return m;
}

FewShotSplit materialize(std::span<const RawRecord> records, const SplitManifest& manifest, const Vocab& vocab,
                         const LabelMap& labels, int max_len) {
  auto encode_all = [&](const std::vector<std::size_t>& ids) {
    std::vector<Example> out;
    out.reserve(ids.size());
    for (std::size_t id : ids) {
      if (id >= records.size()) throw DataError(fmt::format("manifest references record {} beyond the data", id));
      out.push_back(encode(records[id], vocab, labels, max_len, id));
    }
    return out;
  };
  FewShotSplit s;
  s.train = encode_all(manifest.train);
  s.dev = encode_all(manifest.dev);
  s.test = encode_all(manifest.test);
  s.shots_per_class = manifest.shots_per_class;
  s.seed = manifest.seed;
  return s;
}

void write_manifest(const SplitManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write manifest '{}'", path.string()));
  out << "# shots_per_class=" << manifest.shots_per_class << " seed=" << manifest.seed << '\n';
  out << "subset\trecord_id\n";
  for (auto id : manifest.train) out << "train\t" << id << '\n';
  for (auto id : manifest.dev) out << "dev\t" << id << '\n';
  for (auto id : manifest.test) out << "test\t" << id << '\n';
}

SplitManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read manifest '{}'", path.string()));
  SplitManifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      std::istringstream meta(line.substr(2));
      std::string kv;
      while (meta >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        if (kv.substr(0, eq) == "shots_per_class") m.shots_per_class = std::stoi(kv.substr(eq + 1));
        if (kv.substr(0, eq) == "seed") m.seed = std::stoull(kv.substr(eq + 1));
      }
      continue;
    }
    if (line == "subset\trecord_id") continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(fmt::format("manifest '{}': malformed row '{}'", path.string(), line));
    const std::string subset = line.substr(0, tab);
    const std::size_t id = std::stoull(line.substr(tab + 1));
    if (subset == "train") {
      m.train.push_back(id);
    } else if (subset == "dev") {
      m.dev.push_back(id);
    } else if (subset == "test") {
      m.test.push_back(id);
    } else {
      throw DataError(fmt::format("manifest '{}': unknown subset '{}'", path.string(), subset));
    }
  }
  return m;
}

void write_records(std::span<const RawRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write records '{}'", path.string()));
  for (std::size_t i = 0; i < records.size(); ++i) out << i << '\t' << records[i].label_name << '\t' << records[i].text << '\n';
}

std::vector<RawRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read records '{}'", path.string()));
  std::vector<RawRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto a = line.find('\t');
    auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) throw DataError(fmt::format("records '{}': malformed row", path.string()));
    if (std::stoull(line.substr(0, a)) != out.size())
      throw DataError(fmt::format("records '{}': ids are not dense", path.string()));
    out.push_back(RawRecord{line.substr(b + 1), line.substr(a + 1, b - a - 1)});
  }
  return out;
}

}  // namespace semix
