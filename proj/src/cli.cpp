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

#include "semix/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ranges.h>

#include "semix/config.hpp"
#include "semix/corpus.hpp"
#include "semix/evalkit.hpp"
#include "semix/trainer.hpp"

namespace fs = std::filesystem;

namespace semix {

namespace {

struct Common {
  std::string config_path;
  std::string out;
  std::string seed;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "flat key=value config file");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--seed", c.seed, "shorthand for --seed=N override");
  sub->allow_extras();
}

/// Remaining `--key=value` (or `--key value`) arguments become overrides.
std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0) throw ConfigError(fmt::format("unexpected argument '{}'", a));
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
    } else if (i + 1 < extras.size() && extras[i + 1].rfind("--", 0) != 0) {
      out.emplace_back(a.substr(2), extras[i + 1]);
      ++i;
    } else {
      throw ConfigError(fmt::format("option '{}' needs a value (--key=value)", a));
    }
  }
  return out;
}

RunConfig resolve(const Common& c, const CLI::App* sub) {
  RunConfig config;
  if (!c.config_path.empty()) config = load_config(c.config_path);
  apply_overrides(config, parse_overrides(sub->remaining()));
  if (!c.seed.empty()) config.set("seed", c.seed);
  return config;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", path.string()));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_labels(const LabelMap& labels, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& name : label_names(labels)) out << name << '\n';
}

LabelMap read_labels(const fs::path& path) {
  LabelMap labels;
  for (const auto& line : read_lines(path))
    if (!line.empty()) labels.emplace(line, static_cast<int>(labels.size()));
  return labels;
}

struct Prepared {
  Dataset data;
  SplitManifest manifest;
};

Prepared load_prepared(const std::string& split_dir) {
  const fs::path dir = split_dir;
  if (split_dir.empty() || !fs::exists(dir / "manifest.tsv"))
    throw DataError(fmt::format("no prepared split at '{}'; run `semix prepare` first and set split_dir", split_dir));
  Prepared p;
  p.data.records = read_records(dir / "records.tsv");
  p.data.vocab = Vocab::load(dir / "vocab.txt");
  p.data.labels = read_labels(dir / "labels.txt");
  const std::string meta = read_text(dir / "meta.txt");
  const auto eq = meta.find('=');
  if (meta.rfind("first_test_id=", 0) != 0 || eq == std::string::npos)
    throw FormatError(fmt::format("'{}' is malformed", (dir / "meta.txt").string()));
  const std::string v = meta.substr(eq + 1, meta.find('\n') - eq - 1);
  if (v != "none") p.data.first_test_id = std::stoull(v);
  p.manifest = read_manifest(dir / "manifest.tsv");
  return p;
}

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      s += fmt::format("{:<{}}", cells[c], width[c]);
      if (c + 1 < cells.size()) s += "  ";
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + '\n';
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + '\n';
  for (const auto& r : rows) out += line(r);
  return out;
}

std::string fmt_acc(double v) { return fmt::format("{:.4f}", v); }

// ---------------------------------------------------------------------------

int cmd_prepare(const RunConfig& config, const Common& c, std::ostream& out) {
  if (config.get("data_train").empty()) throw ConfigError("prepare needs data_train=PATH");
  const DataFormat format = parse_data_format(config.get("data_format"));
  std::vector<RawRecord> pool = load_dataset(config.get("data_train"), format).records;
  std::optional<std::vector<RawRecord>> test;
  if (!config.get("data_test").empty()) test = load_dataset(config.get("data_test"), format).records;
  const Dataset data = make_dataset(std::move(pool), std::move(test), static_cast<int>(config.get_int("min_freq")));
  const SplitManifest manifest = sample_few_shot(data.records, config.few_shot_options(), data.first_test_id);

  const fs::path dir = !c.out.empty() ? fs::path(c.out) : !config.get("split_dir").empty() ? fs::path(config.get("split_dir")) : fs::path("split");
  fs::create_directories(dir);
  data.vocab.save(dir / "vocab.txt");
  write_labels(data.labels, dir / "labels.txt");
  write_manifest(manifest, dir / "manifest.tsv");
  write_records(data.records, dir / "records.tsv");
  {
    std::ofstream meta(dir / "meta.txt", std::ios::binary);
    meta << "first_test_id=" << (data.first_test_id ? std::to_string(*data.first_test_id) : "none") << '\n';
    std::ofstream test_out(dir / "test.tsv", std::ios::binary);
    for (std::size_t id : manifest.test) test_out << data.records[id].label_name << '\t' << data.records[id].text << '\n';
  }
  out << fmt::format("prepared {}: train={} dev={} test={} vocab={} classes={}\n", dir.string(), manifest.train.size(),
                     manifest.dev.size(), manifest.test.size(), data.vocab.size(), data.labels.size());
  return kExitOk;
}

int cmd_train(RunConfig config, const Common& c, std::ostream& out) {
  const Prepared p = load_prepared(config.get("split_dir"));
  const TrainConfig tc = config.train_config();
  const ModelConfig mc = config.model_config(p.data.vocab.size(), p.data.labels.size());
  const FewShotSplit split =
      materialize(p.data.records, p.manifest, p.data.vocab, p.data.labels, static_cast<int>(config.get_int("max_len")));

  const fs::path run_dir = fs::path(c.out.empty() ? "run" : c.out) / config.get("name");
  RunDirectory dir(run_dir);
  dir.write_config(config.canonical_text());
  p.data.vocab.save(run_dir / "vocab.txt");
  write_labels(p.data.labels, run_dir / "labels.txt");
  write_manifest(p.manifest, run_dir / "manifest.tsv");
  const PipelineResult r = run_pipeline(tc, mc, split, &dir);
  out << fmt::format("run {}: best dev {} (epoch {}), test {}\n", run_dir.string(), fmt_acc(r.best_dev_accuracy),
                     r.stage2.best_epoch, fmt_acc(r.test_accuracy));
  return kExitOk;
}

int cmd_ablate(const RunConfig& config, const Common& c, const std::string& axes_path, std::ostream& out) {
  const auto axes = parse_axes(read_text(axes_path));
  const Prepared p = load_prepared(config.get("split_dir"));
  const fs::path dir = c.out.empty() ? fs::path("ablate") : fs::path(c.out);
  if (fs::exists(dir / "report.tsv"))
    throw std::runtime_error(fmt::format("'{}' already holds a completed ablation", dir.string()));
  const auto rows = ablation_matrix(config, axes, p.data, dir / "runs");
  write_report_tsv(rows, dir / "report.tsv");
  const ReportTable t = read_report_tsv(dir / "report.tsv");
  out << render_table(t.header, t.rows);
  return kExitOk;
}

int cmd_ood(const RunConfig& config, const Common& c, const std::string& run, const std::vector<std::string>& targets,
            const std::string& mapping_text, std::ostream& out) {
  if (run.empty()) throw ConfigError("ood needs --run=DIR");
  if (targets.empty()) throw ConfigError("ood needs at least one --target=NAME=PATH");
  const fs::path run_dir = run;
  const ParamStore<float> params = load_checkpoint(run_dir / "ckpt_best.semx");
  const Vocab vocab = Vocab::load(run_dir / "vocab.txt");
  const LabelMap labels = read_labels(run_dir / "labels.txt");

  std::map<std::string, std::string> mapping;
  if (!mapping_text.empty()) {
    std::istringstream ms(mapping_text);
    std::string item;
    while (std::getline(ms, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError(fmt::format("label mapping entry '{}' is not target=source", item));
      mapping[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  const DataFormat format = parse_data_format(config.get("data_format"));
  std::vector<OodTarget> loaded;
  for (const auto& t : targets) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("--target '{}' is not NAME=PATH", t));
    loaded.push_back({t.substr(0, eq), load_dataset(t.substr(eq + 1), format).records});
  }
  const auto results = ood_eval(params, vocab, labels, loaded, mapping);

  std::vector<std::vector<std::string>> rows;
  std::string tsv = "target\taccuracy\texamples\n";
  for (const auto& r : results) {
    rows.push_back({r.name, fmt_acc(r.accuracy), std::to_string(r.examples)});
    tsv += fmt::format("{}\t{:.17g}\t{}\n", r.name, r.accuracy, r.examples);
  }
  out << render_table({"target", "accuracy", "examples"}, rows);
  if (!c.out.empty()) {
    const fs::path dir = c.out;
    if (fs::exists(dir / "metrics.tsv")) throw std::runtime_error("refusing to write into a completed run directory");
    fs::create_directories(dir);
    std::ofstream(dir / "ood.tsv", std::ios::binary) << tsv;
  }
  return kExitOk;
}

int cmd_report(const Common& c, const std::string& dir_opt, std::ostream& out) {
  const fs::path dir = !dir_opt.empty() ? fs::path(dir_opt) : !c.out.empty() ? fs::path(c.out) : fs::path("run");
  if (!fs::is_directory(dir)) throw DataError(fmt::format("no runs found: '{}' is not a directory", dir.string()));
  std::vector<fs::path> reports, runs;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (e.path().filename() == "report.tsv") reports.push_back(e.path());
    if (e.path().filename() == "metrics.tsv") runs.push_back(e.path().parent_path());
  }
  std::sort(reports.begin(), reports.end());
  std::sort(runs.begin(), runs.end());
  if (reports.empty() && runs.empty()) throw DataError(fmt::format("no runs found under '{}'", dir.string()));

  for (const auto& r : reports) {
    const ReportTable t = read_report_tsv(r);
    out << fmt::format("== {}\n", r.string()) << render_table(t.header, t.rows) << '\n';
  }
  if (!runs.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& run : runs) {
      std::string dev = "-", test = "-";
      const auto lines = read_lines(run / "metrics.tsv");
      for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f;
        std::istringstream ls(lines[i]);
        std::string cell;
        while (std::getline(ls, cell, '\t')) f.push_back(cell);
        if (f.size() != 4) continue;
        if (f[1] == "dev" && f[2] == "best_accuracy") dev = fmt_acc(std::stod(f[3]));
        if (f[1] == "test" && f[2] == "accuracy") test = fmt_acc(std::stod(f[3]));
      }
      rows.push_back({fs::relative(run, dir).string(), dev, test});
    }
    out << render_table({"run", "best_dev", "test"}, rows);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"semix: difficulty-ordered mixup training for few-shot text classification"};
  app.require_subcommand(1);
  Common common;

  auto* prepare = app.add_subcommand("prepare", "sample a few-shot split and build the vocabulary");
  add_common(prepare, common);
  auto* train = app.add_subcommand("train", "stage 1 then stage 2 on a prepared split");
  add_common(train, common);
  auto* ablate = app.add_subcommand("ablate", "Cartesian sweep of config axes, multi-seed each");
  add_common(ablate, common);
  std::string axes_path;
  ablate->add_option("--axes", axes_path, "file of key=v1,v2 lines")->required();
  auto* ood = app.add_subcommand("ood", "evaluate a trained run on other datasets");
  add_common(ood, common);
  std::string ood_run, mapping;
  std::vector<std::string> targets;
  ood->add_option("--run", ood_run, "run directory holding ckpt_best.semx");
  ood->add_option("--target", targets, "NAME=PATH, repeatable");
  ood->add_option("--label_mapping", mapping, "target=source,... label names");
  auto* report = app.add_subcommand("report", "render report and metrics TSVs as tables");
  add_common(report, common);
  std::string report_dir;
  report->add_option("--dir", report_dir, "directory to scan (default: --out, then ./run)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "semix: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*prepare) return cmd_prepare(resolve(common, prepare), common, out);
    if (*train) return cmd_train(resolve(common, train), common, out);
    if (*ablate) return cmd_ablate(resolve(common, ablate), common, axes_path, out);
    if (*ood) return cmd_ood(resolve(common, ood), common, ood_run, targets, mapping, out);
    if (*report) {
      resolve(common, report);
      return cmd_report(common, report_dir, out);
    }
  } catch (const ConfigError& e) {
    err << "semix: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "semix: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const FormatError& e) {
    err << "semix: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "semix: error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace semix
