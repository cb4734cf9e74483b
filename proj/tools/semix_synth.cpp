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

// Writes the planted-difficulty corpus as `label<TAB>text` lines.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "semix/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"semix_synth: planted-difficulty two-cluster corpus"};
  semix::SyntheticSpec spec;
  std::string out_path;
  app.add_option("--out", out_path, "output TSV")->required();
  app.add_option("--per_class", spec.records_per_class_per_cluster, "records per class per cluster");
  app.add_option("--dims", spec.dims);
  app.add_option("--bins", spec.bins);
  app.add_option("--hard_margin", spec.hard_margin);
  app.add_option("--easy_margin_ratio", spec.easy_margin_ratio);
  app.add_option("--cluster_separation", spec.cluster_separation);
  app.add_option("--noise", spec.noise);
  app.add_option("--seed", spec.seed);
  CLI11_PARSE(app, argc, argv);
  try {
    const auto corpus = semix::make_synthetic(spec);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    for (const auto& r : corpus.records) out << r.label_name << '\t' << r.text << '\n';
  } catch (const std::exception& e) {
    std::cerr << "semix_synth: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
