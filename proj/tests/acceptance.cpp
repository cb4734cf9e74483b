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


// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "semix/difficulty.hpp"
#include "semix/evalkit.hpp"
#include "semix/mixup.hpp"
#include "semix/pairing.hpp"
#include "semix/smoothing.hpp"
#include "semix/synthetic.hpp"

using namespace semix;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd random_simplex(Rng& rng, Index c) {
  VectorXd p(c);
  for (Index i = 0; i < c; ++i) p(i) = -std::log(1.0 - uniform01(rng));
  return p / p.sum();
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const auto cfg = testutil::tiny_config(30, 8, 2, 3, 12);
  const auto params = init_params<double>(cfg, 2024);
  Rng rng = make_rng(1);
  std::vector<Example> batch;
  for (std::size_t i = 0; i < 10; ++i) batch.push_back(testutil::random_example(rng, cfg, i));
  tensor::GradCheckOptions opt;
  opt.samples = 64;
  opt.epsilon = 1e-4;
  const auto r = tensor::grad_check(testutil::batch_loss<double>(cfg, batch), params.tensors, opt);
  opt.fault = tensor::Op::Tanh;
  const auto bad = tensor::grad_check(testutil::batch_loss<double>(cfg, batch), params.tensors, opt);
  const double secs = seconds_since(t0);
  const bool pass = r.max_relative_error <= 1e-3 && r.coordinates >= 50 && secs < 30 && bad.max_relative_error > 1e-1;
  return {pass, fmt::format("max rel err {:.3g} over {} coords, 10 inputs, {:.2f}s; corrupted tanh rule gives {:.3g}",
                            r.max_relative_error, r.coordinates, secs, bad.max_relative_error)};
}

Outcome difficulty_oracle() {
  Rng rng = make_rng(2);
  std::size_t mismatches = 0;
  std::vector<DifficultyScore> scores;
  for (std::size_t i = 0; i < 1000; ++i) {
    const Index c = 2 + static_cast<Index>(uniform_index(rng, 9));
    VectorXd p = random_simplex(rng, c);
    // Every tenth vector has two equal entries.
    if (i % 10 == 0) p(0) = p(1) = 0.5 * (p(0) + p(1));
    const int y = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(c)));
    const double d = difficulty(p, y);
    if (d != oracle::difficulty(to_std(p), y)) ++mismatches;
    scores.push_back({i, d, p});
  }

  std::size_t partitions = 0, partition_mismatches = 0, tie_cases = 0;
  auto check_partition = [&](const std::vector<DifficultyScore>& s) {
    std::vector<std::pair<std::size_t, double>> pairs;
    for (const auto& x : s) pairs.emplace_back(x.example_id, x.d);
    const auto got = partition_by_median(s);
    const auto want = oracle::median_partition(pairs);
    ++partitions;
    for (const auto& x : s) tie_cases += x.d == got.threshold;
    if (got.threshold != want.threshold || got.easy != want.easy || got.hard != want.hard) ++partition_mismatches;
  };
  check_partition(scores);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 60);
    std::vector<DifficultyScore> s;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = trial % 2 == 0 ? (static_cast<double>(uniform_index(rng, 5)) - 2) / 2 : uniform01(rng) * 2 - 1;
      s.push_back({i, d, VectorXd()});
    }
    check_partition(s);
  }
  return {mismatches == 0 && partition_mismatches == 0 && tie_cases > 0,
          fmt::format("1000 vectors: {} score mismatches; {} partitions ({} median ties): {} mismatches", mismatches,
                      partitions, tie_cases, partition_mismatches)};
}

Outcome partner_oracle() {
  Rng rng = make_rng(3);
  std::size_t anchors = 0, disagreements = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 199);
    const Index dim = 1 + static_cast<Index>(uniform_index(rng, 8));
    const bool coarse = trial % 2 == 0;
    RepresentationCache reprs;
    std::map<std::size_t, std::vector<double>> plain;
    std::vector<std::size_t> ids;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t id = 5 * k + uniform_index(rng, 5);
      VectorXd v(dim);
      for (Index e = 0; e < dim; ++e)
        v(e) = coarse ? static_cast<double>(uniform_index(rng, 3)) - 1 : uniform01(rng) * 2 - 1;
      ids.push_back(id);
      reprs[id] = v;
      plain[id] = to_std(v);
    }
    shuffle_in_place(ids, rng);
    for (std::size_t id : ids) {
      ++anchors;
      if (nearest_partner(id, ids, reprs).partner_id != oracle::nearest(id, ids, plain)) ++disagreements;
    }
  }
  return {disagreements == 0,
          fmt::format("200 instances (n <= 200), {} anchors, {} disagreements", anchors, disagreements)};
}

Outcome label_algebra() {
  Rng rng = make_rng(4);
  double worst = 0, worst_sum = 0, worst_gap = 0;
  bool negative = false;
  for (int trial = 0; trial < 10000; ++trial) {
    const Index c = 2 + static_cast<Index>(uniform_index(rng, 9));
    const VectorXd yi = one_hot(static_cast<int>(uniform_index(rng, c)), static_cast<int>(c));
    const VectorXd yj = one_hot(static_cast<int>(uniform_index(rng, c)), static_cast<int>(c));
    const VectorXd ri = random_simplex(rng, c);
    const VectorXd rj = random_simplex(rng, c);
    const double lambda = uniform01(rng);
    const double alpha = uniform01(rng);
    const SoftLabel got = mix_labels(smooth_instance(yi, ri, alpha), smooth_instance(yj, rj, alpha), lambda);
    const auto want = oracle::mixed_smoothed(to_std(yi), to_std(ri), to_std(yj), to_std(rj), lambda, alpha);
    for (Index k = 0; k < c; ++k) worst = std::max(worst, std::abs(got.probs(k) - want[static_cast<std::size_t>(k)]));
    worst_sum = std::max(worst_sum, std::abs(got.probs.sum() - 1.0));
    negative = negative || got.probs.minCoeff() < 0;
    const VectorXd q = trial % 2 == 0 ? VectorXd::Constant(c, 1.0 / static_cast<double>(c)) : random_simplex(rng, c);
    worst_gap = std::max(worst_gap, ls_decomposition_check(yi, q, alpha, random_simplex(rng, c)).gap);
  }
  return {worst <= 1e-6 && worst_sum <= 1e-6 && !negative && worst_gap <= 1e-6,
          fmt::format("10000 draws: max label error {:.2g}, max |sum - 1| {:.2g}, negative entries {}, "
                      "max decomposition gap {:.2g}",
                      worst, worst_sum, negative ? "yes" : "no", worst_gap)};
}

Outcome endpoints() {
  const auto cfg = testutil::tiny_config(30, 8, 2, 3, 12);
  Rng rng = make_rng(5);
  std::size_t checks = 0, failures = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto params = init_params<float>(cfg, 100 + s);
    for (int trial = 0; trial < 20; ++trial) {
      const Example a = testutil::random_example(rng, cfg, 0);
      const Example b = testutil::random_example(rng, cfg, 1);
      const SoftLabel ya{a.one_hot}, yb{b.one_hot};
      const auto ref = forward(params, a).probs;
      auto expect = [&](bool ok) {
        ++checks;
        failures += !ok;
      };
      expect(forward_item(params, mix_embed(params, a, b, 1.0, ya, yb)).probs == ref);
      for (std::uint32_t m = 0; m <= cfg.num_blocks; ++m)
        expect(forward_item(params, mix_hidden(params, a, b, 1.0, m, ya, yb)).probs == ref);
      const auto span = mix_span(params, a, b, 1.0, ya, yb);
      expect(span.tokens == a && span.lambda == 1.0 && span.label == ya);
      expect(smooth_uniform(a.one_hot, 0.0).probs == a.one_hot);
      expect(smooth_instance(a.one_hot, random_simplex(rng, 3), 0.0).probs == a.one_hot);
    }
  }
  return {failures == 0, fmt::format("{} exact endpoint checks (embed, hidden m=0..2, span, both smoothers), {} failures",
                                     checks, failures)};
}

// ---------------------------------------------------------------------------
// Synthetic benchmark shared by criteria 6 to 8 and 10.

SyntheticSpec bench_spec() {
  SyntheticSpec s;
  s.records_per_class_per_cluster = 400;
  s.dims = 8;
  s.bins = 6;
  s.hard_margin = 0.7;
  return s;
}

/// Settings applied identically to every arm.
RunConfig bench_config() {
  RunConfig c;
  const std::vector<std::pair<std::string, std::string>> settings{
      {"shots", "10"},          {"seeds", "1,2,3,4,5,6,7,8,9,10"},
      {"embed_dim", "16"},      {"num_blocks", "1"},
      {"stage1_lr", "0.01"},    {"stage2_lr", "0.04"},
      {"batch_size", "2"},      {"stage2_epochs", "20"},
      {"mix_variant", "embed"}, {"lambda_param", "2.0"},
      {"alpha", "0.1"},
  };
  for (const auto& [k, v] : settings) c.set(k, v);
  return c;
}

struct Arm {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;
  EvalReport report;
};

struct Bench {
  std::vector<Arm> arms;
  double seconds = 0;
  fs::path e2h_runs;

  const EvalReport& at(const std::string& name) const {
    for (const auto& a : arms)
      if (a.name == name) return a.report;
    throw std::out_of_range(name);
  }
};

double pooled_se(const EvalReport& a, const EvalReport& b, bool dev) {
  const double sa = dev ? a.dev_sd : a.sd;
  const double sb = dev ? b.dev_sd : b.sd;
  return std::sqrt(sa * sa / static_cast<double>(a.n_seeds) + sb * sb / static_cast<double>(b.n_seeds));
}

Bench run_bench() {
  Bench b;
  const auto t0 = Clock::now();
  const auto corpus = make_synthetic(bench_spec());
  const Dataset data = make_dataset(corpus.records, std::nullopt, 1);
  b.arms = {
      {"se", {{"selection_policy", "easy_to_hard"}, {"smoothing", "ils"}}, {}},
      {"se_random", {{"selection_policy", "random"}, {"smoothing", "ils"}}, {}},
      {"se_uniform_ls", {{"selection_policy", "easy_to_hard"}, {"smoothing", "uniform_ls"}}, {}},
      {"se_no_smoothing", {{"selection_policy", "easy_to_hard"}, {"smoothing", "none"}}, {}},
  };
  b.e2h_runs = testutil::temp_dir("acceptance_bench");
  for (auto& arm : b.arms) {
    RunConfig c = bench_config();
    apply_overrides(c, arm.overrides);
    arm.report = multi_seed(c, c.seeds(), data, b.e2h_runs / arm.name);
    std::cout << fmt::format("  arm {:16} dev {:.4f} +- {:.4f}  test {:.4f} +- {:.4f}  ({} seeds)\n", arm.name,
                             arm.report.dev_mean, arm.report.dev_sd, arm.report.mean, arm.report.sd,
                             arm.report.n_seeds);
  }
  b.seconds = seconds_since(t0);
  return b;
}

Outcome curriculum_direction(const Bench& b) {
  const auto& se = b.at("se");
  const auto& rnd = b.at("se_random");
  // Runtime covers the two arms this criterion compares.
  const double se_runs = b.seconds / static_cast<double>(b.arms.size()) * 2;
  const double diff = se.dev_mean - rnd.dev_mean;
  const double se_pooled = pooled_se(se, rnd, true);
  const bool pass = se.n_seeds == 10 && rnd.n_seeds == 10 && diff >= 0 && diff >= se_pooled && se_runs < 600;
  return {pass, fmt::format("dev easy_to_hard {:.4f} vs random {:.4f}: diff {:+.4f}, pooled SE {:.4f} "
                            "(diff/SE {:+.2f}); ~{:.0f}s for both arms",
                            se.dev_mean, rnd.dev_mean, diff, se_pooled, diff / se_pooled, se_runs)};
}

Outcome smoothing_direction(const Bench& b) {
  const auto& ils = b.at("se");
  const auto& uls = b.at("se_uniform_ls");
  const auto& none = b.at("se_no_smoothing");
  auto ok_vs_none = [&](const EvalReport& r) { return r.mean >= none.mean || none.mean - r.mean <= pooled_se(r, none, false); };
  const bool pass = ils.mean >= uls.mean && ok_vs_none(ils) && ok_vs_none(uls);
  return {pass, fmt::format("test ILS {:.4f} >= uniform LS {:.4f}: {}; vs none {:.4f}: ILS {:+.4f} (SE {:.4f}), "
                            "uniform {:+.4f} (SE {:.4f})",
                            ils.mean, uls.mean, ils.mean >= uls.mean ? "yes" : "no", none.mean, ils.mean - none.mean,
                            pooled_se(ils, none, false), uls.mean - none.mean, pooled_se(uls, none, false))};
}

Outcome ablation_direction(const Bench& b) {
  const auto& full = b.at("se");
  const auto& no_cur = b.at("se_random");
  const auto& no_ils = b.at("se_no_smoothing");
  const bool pass = full.mean >= no_cur.mean && full.mean >= no_ils.mean;
  return {pass, fmt::format("test full SE {:.4f}, without curriculum {:.4f}, without ILS {:.4f}", full.mean,
                            no_cur.mean, no_ils.mean)};
}

Outcome curriculum_contract(const Bench& b) {
  std::size_t files = 0, epochs = 0, violations = 0;
  for (const auto& arm : b.arms) {
    if (arm.overrides.front().second != "easy_to_hard") continue;
    for (const auto& e : fs::recursive_directory_iterator(b.e2h_runs / arm.name)) {
      if (e.path().filename() != "batchlog.tsv") continue;
      ++files;
      std::ifstream in(e.path());
      std::string line;
      std::getline(in, line);
      std::map<int, bool> seen_hard;
      while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string epoch, batch, subset;
        std::getline(ls, epoch, '\t');
        std::getline(ls, batch, '\t');
        std::getline(ls, subset, '\t');
        const int ep = std::stoi(epoch);
        if (!seen_hard.contains(ep)) ++epochs;
        bool& hard = seen_hard[ep];
        if (subset == "hard") hard = true;
        if (subset == "easy" && hard) ++violations;
        if (subset != "easy" && subset != "hard") ++violations;
      }
    }
  }
  return {files > 0 && violations == 0,
          fmt::format("{} easy_to_hard batch logs, {} epochs, {} ordering violations", files, epochs, violations)};
}

Outcome determinism() {
  SyntheticSpec s = bench_spec();
  s.records_per_class_per_cluster = 100;
  const auto corpus = make_synthetic(s);
  const Dataset data = make_dataset(corpus.records, std::nullopt, 1);
  const auto root = testutil::temp_dir("acceptance_determinism");
  std::size_t compared = 0, differing = 0;
  const std::vector<std::vector<std::pair<std::string, std::string>>> variants{
      {{"mix_variant", "span"}, {"selection_policy", "easy_to_hard"}},
      {{"mix_variant", "embed"}, {"selection_policy", "random"}},
      {{"mix_variant", "hidden"}, {"selection_policy", "hard_to_easy"}, {"smoothing", "uniform_ls"}},
      {{"mix_variant", "span"}, {"lambda_dist", "fixed"}, {"lambda_param", "0.7"}, {"rescore_every_epoch", "true"}},
  };
  for (std::size_t v = 0; v < variants.size(); ++v) {
    RunConfig c = bench_config();
    apply_overrides(c, variants[v]);
    c.set("stage1_epochs", "10");
    c.set("stage2_epochs", "5");
    for (int rep = 0; rep < 2; ++rep) run_seed(c, 3, data, root / fmt::format("v{}_{}", v, rep));
    for (const char* f : {"metrics.tsv", "batchlog.tsv", "ckpt_stage1.semx", "ckpt_best.semx", "config.txt"}) {
      ++compared;
      const auto a = testutil::read_bytes(root / fmt::format("v{}_0", v) / f);
      const auto b = testutil::read_bytes(root / fmt::format("v{}_1", v) / f);
      if (a.empty() || a != b) ++differing;
    }
  }
  return {differing == 0, fmt::format("{} configs run twice, {} artifact pairs compared, {} differ", variants.size(),
                                      compared, differing)};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> early{
      {"gradient correctness", gradient_check},   {"difficulty and partition oracle", difficulty_oracle},
      {"nearest-partner oracle", partner_oracle}, {"label algebra", label_algebra},
      {"endpoint identities", endpoints},
  };
  int failed = 0;
  int index = 1;
  auto report = [&](const std::string& name, const Outcome& o) {
    std::cout << fmt::format("{} criterion {} ({}): {}\n", o.pass ? "PASS" : "FAIL", index++, name, o.detail)
              << std::flush;
    failed += !o.pass;
  };
  for (const auto& [name, fn] : early) report(name, fn());

  std::cout << "  synthetic benchmark, 4 arms x 10 seeds:\n" << std::flush;
  const Bench bench = run_bench();
  report("curriculum beats random partners", curriculum_direction(bench));
  report("instance smoothing beats uniform smoothing", smoothing_direction(bench));
  report("removing either part hurts", ablation_direction(bench));
  report("determinism", determinism());
  report("easy-before-hard batch order", curriculum_contract(bench));
  std::cout << fmt::format("{} of 10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
