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

#include "semix/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ranges.h>

namespace semix {

Dataset make_dataset(std::vector<RawRecord> pool, std::optional<std::vector<RawRecord>> test, int min_freq) {
  if (pool.empty()) throw DataError("no records");
  Dataset d;
  d.vocab = build_vocab(pool, min_freq);
  d.labels = make_label_map(pool);
  d.records = std::move(pool);
  if (test) {
    d.first_test_id = d.records.size();
    for (auto& r : *test) {
      if (!d.labels.contains(r.label_name))
        throw DataError(fmt::format("test label '{}' does not occur in the training data", r.label_name));
      d.records.push_back(std::move(r));
    }
  }
  return d;
}

MeanSd mean_sd(std::vector<double> values) {
  if (values.empty()) return {std::nan(""), std::nan("")};
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double sum = 0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

EvalReport EvalReport::from_runs(std::vector<SeedRun> runs, std::string fingerprint) {
  std::sort(runs.begin(), runs.end(), [](const SeedRun& a, const SeedRun& b) { return a.seed < b.seed; });
  std::vector<double> test, dev;
  for (const auto& r : runs) {
    if (r.failed) continue;
    test.push_back(r.test_accuracy);
    dev.push_back(r.dev_accuracy);
  }
  EvalReport rep;
  const MeanSd t = mean_sd(test);
  const MeanSd d = mean_sd(dev);
  rep.mean = t.mean;
  rep.sd = t.sd;
  rep.dev_mean = d.mean;
  rep.dev_sd = d.sd;
  rep.n_seeds = test.size();
  rep.runs = std::move(runs);
  rep.fingerprint = std::move(fingerprint);
  return rep;
}

PipelineResult run_seed(const RunConfig& config, std::uint64_t seed, const Dataset& data,
                        const std::optional<std::filesystem::path>& run_dir) {
  RunConfig c = config;
  c.set("seed", std::to_string(seed));
  const TrainConfig tc = c.train_config();
  const SplitManifest manifest = sample_few_shot(data.records, c.few_shot_options(), data.first_test_id);
  const FewShotSplit split =
      materialize(data.records, manifest, data.vocab, data.labels, static_cast<int>(c.get_int("max_len")));
  const ModelConfig mc = c.model_config(data.vocab.size(), data.labels.size());
  if (!run_dir) return run_pipeline(tc, mc, split);
  RunDirectory dir(*run_dir);
  dir.write_config(c.canonical_text());
  return run_pipeline(tc, mc, split, &dir);
}

EvalReport multi_seed(const RunConfig& config, std::vector<std::uint64_t> seeds, const Dataset& data,
                      const std::optional<std::filesystem::path>& run_root) {
  if (seeds.empty()) throw ConfigError("multi_seed needs at least one seed");
  std::sort(seeds.begin(), seeds.end());
  RunConfig canonical = config;
  canonical.set("seeds", fmt::format("{}", fmt::join(seeds, ",")));

  std::vector<SeedRun> runs;
  for (std::uint64_t seed : seeds) {
    SeedRun r;
    r.seed = seed;
    try {
      std::optional<std::filesystem::path> dir;
      if (run_root) dir = *run_root / fmt::format("seed{}", seed);
      const PipelineResult p = run_seed(config, seed, data, dir);
      r.dev_accuracy = p.best_dev_accuracy;
      r.test_accuracy = p.test_accuracy;
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
      log_warning(fmt::format("seed {} failed: {}", seed, e.what()));
    }
    runs.push_back(std::move(r));
  }
  return EvalReport::from_runs(std::move(runs), canonical.fingerprint());
}

std::vector<AblationRow> ablation_matrix(const RunConfig& base, const std::vector<AblationAxis>& axes,
                                         const Dataset& data, const std::optional<std::filesystem::path>& run_root) {
  for (const auto& [key, values] : axes) {
    if (!RunConfig::is_key(key)) throw ConfigError(fmt::format("ablation axis: unknown config key '{}'", key));
    if (values.empty()) throw ConfigError(fmt::format("ablation axis '{}' has no values", key));
    RunConfig probe = base;
    for (const auto& v : values) probe.set(key, v);
  }

  std::vector<std::vector<std::pair<std::string, std::string>>> points{{}};
  for (const auto& [key, values] : axes) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& p : points)
      for (const auto& v : values) {
        auto q = p;
        q.emplace_back(key, v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  // Whole configurations are validated before any training starts.
  std::vector<RunConfig> configs;
  for (const auto& p : points) {
    RunConfig c = base;
    for (const auto& [k, v] : p) c.set(k, v);
    c.train_config();
    configs.push_back(std::move(c));
  }

  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::optional<std::filesystem::path> dir;
    if (run_root) {
      std::string tag = "base";
      if (!points[i].empty()) {
        tag.clear();
        for (const auto& [k, v] : points[i]) tag += fmt::format("{}{}={}", tag.empty() ? "" : ",", k, v);
      }
      dir = *run_root / tag;
    }
    rows.push_back({points[i], multi_seed(configs[i], configs[i].seeds(), data, dir)});
  }
  return rows;
}

std::vector<AblationAxis> parse_axes(std::string_view text) {
  std::vector<AblationAxis> axes;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("axes line '{}': expected key=v1,v2,...", line));
    AblationAxis axis{line.substr(first, eq - first), {}};
    std::istringstream vs(line.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) axis.second.push_back(v);
    axes.push_back(std::move(axis));
  }
  return axes;
}

void write_report_tsv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
  if (rows.empty()) throw DataError("report has no rows");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  std::vector<std::string> header;
  for (const auto& [k, v] : rows.front().point) header.push_back(k);
  for (auto col : {"mean", "sd", "dev_mean", "dev_sd", "n_seeds", "fingerprint", "per_seed"}) header.emplace_back(col);
  out << fmt::format("{}\n", fmt::join(header, "\t"));
  for (const auto& row : rows) {
    std::vector<std::string> cells;
    for (const auto& [k, v] : row.point) cells.push_back(v);
    const EvalReport& r = row.report;
    std::vector<std::string> per_seed;
    for (const auto& s : r.runs)
      per_seed.push_back(s.failed ? fmt::format("{}:failed", s.seed) : fmt::format("{}:{:.17g}", s.seed, s.test_accuracy));
    cells.push_back(fmt::format("{:.17g}", r.mean));
    cells.push_back(fmt::format("{:.17g}", r.sd));
    cells.push_back(fmt::format("{:.17g}", r.dev_mean));
    cells.push_back(fmt::format("{:.17g}", r.dev_sd));
    cells.push_back(std::to_string(r.n_seeds));
    cells.push_back(r.fingerprint);
    cells.push_back(fmt::format("{}", fmt::join(per_seed, ",")));
    out << fmt::format("{}\n", fmt::join(cells, "\t"));
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

bool close(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= 1e-12;
}

}  // namespace

ReportTable read_report_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read report '{}'", path.string()));
  ReportTable t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(fmt::format("report '{}' is empty", path.string()));
  t.header = split_tabs(line);
  auto column = [&](std::string_view name) -> std::size_t {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw FormatError(fmt::format("report '{}' lacks column '{}'", path.string(), name));
    return static_cast<std::size_t>(it - t.header.begin());
  };
  const std::size_t c_mean = column("mean"), c_sd = column("sd"), c_n = column("n_seeds"), c_per = column("per_seed");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (cells.size() != t.header.size()) throw FormatError(fmt::format("report '{}': ragged row", path.string()));
    std::vector<double> values;
    std::istringstream ps(cells[c_per]);
    std::string item;
    while (std::getline(ps, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw FormatError("report: malformed per_seed entry '" + item + "'");
      const std::string v = item.substr(colon + 1);
      if (v != "failed") values.push_back(std::stod(v));
    }
    const MeanSd m = mean_sd(values);
    if (!close(m.mean, std::stod(cells[c_mean])) || !close(m.sd, std::stod(cells[c_sd])) ||
        std::to_string(values.size()) != cells[c_n])
      throw FormatError(fmt::format("report '{}': aggregate does not match per-seed values", path.string()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::vector<OodResult> ood_eval(const ParamStore<float>& params, const Vocab& vocab, const LabelMap& source_labels,
                                const std::vector<OodTarget>& targets,
                                const std::map<std::string, std::string>& mapping) {
  if (source_labels.size() != params.config.num_classes)
    throw DataError("ood_eval: source label map does not match the checkpoint's class count");
  std::vector<OodResult> out;
  for (const auto& target : targets) {
    if (target.records.empty()) throw DataError(fmt::format("ood target '{}' has no records", target.name));
    std::vector<Example> examples;
    for (std::size_t i = 0; i < target.records.size(); ++i) {
      RawRecord r = target.records[i];
      if (!mapping.empty()) {
        auto it = mapping.find(r.label_name);
        if (it == mapping.end())
          throw DataError(fmt::format("ood target '{}': label '{}' has no mapping", target.name, r.label_name));
        r.label_name = it->second;
      }
      if (!source_labels.contains(r.label_name))
        throw DataError(fmt::format("ood target '{}': label '{}' is not in the source label space; supply a mapping",
                                    target.name, r.label_name));
      examples.push_back(encode(r, vocab, source_labels, static_cast<int>(params.config.max_len), i));
    }
    out.push_back({target.name, evaluate(params, std::span<const Example>(examples)), examples.size()});
  }
  return out;
}

}  // namespace semix
