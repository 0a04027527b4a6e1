/* Copyright 2026 The HoiPrime Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// hoiprime: dataset generation, training, evaluation, ablation and gradient
// checks from the command line.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hoiprime/config.hpp"
#include "hoiprime/errors.hpp"
#include "hoiprime/io.hpp"
#include "hoiprime/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<std::string> split_file;
  std::optional<std::string> score;
  std::optional<std::string> model;
  std::optional<int> epochs;
  bool zero_shot = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "Global seed");
  cmd->add_option("--data", o.data, "Dataset directory");
  cmd->add_option("--out", o.out, "Output directory");
}

void add_model(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--variant", o.variant, "Architecture variant (standard, np, nc, nl, ...)");
  cmd->add_option("--model", o.model, "Model preset: desk, tiny or full");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_flag("--zero-shot", o.zero_shot, "Withhold unseen triplets; report Unseen/Seen/All");
  cmd->add_option("--split-file", o.split_file, "CSV triplet_id,split (seen|unseen)");
  cmd->add_option("--score", o.score, "Ranking logits: p2 (visual, default) or p1 (layout)");
}

hoiprime::RunConfig resolve(const Overrides& o) {
  hoiprime::RunConfig c = o.config.empty() ? hoiprime::RunConfig{} : hoiprime::RunConfig::load(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.variant) c.variant = *o.variant;
  if (o.out) c.out_dir = *o.out;
  if (o.data) c.data_dir = *o.data;
  if (o.split_file) c.split_file = *o.split_file;
  if (o.model) c.model = *o.model;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.score) {
    if (*o.score == "p1") {
      c.score = hoiprime::ScoreSource::kLayout;
    } else if (*o.score == "p2") {
      c.score = hoiprime::ScoreSource::kVisual;
    } else {
      throw hoiprime::ArgumentError("--score must be p1 or p2");
    }
  }
  if (o.zero_shot || o.split_file) c.zero_shot = true;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatially primed human-object interaction detection"};
  app.require_subcommand(1);

  Overrides gen_o, train_o, eval_o, ablate_o;
  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  add_common(gen, gen_o);
  CLI::App* train = app.add_subcommand("train", "Train a model; writes model.ckpt and loss.csv");
  add_common(train, train_o);
  add_model(train, train_o);
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a trained model; writes report.json");
  add_common(eval, eval_o);
  add_model(eval, eval_o);
  CLI::App* ablate = app.add_subcommand("ablate", "Train and evaluate several variants");
  add_common(ablate, ablate_o);
  add_model(ablate, ablate_o);
  std::string variants;
  ablate->add_option("--variants", variants, "Comma-separated variant list");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every operator");
  int seeds = 20;
  std::uint64_t gc_seed = 0;
  gradcheck->add_option("--seeds", seeds, "Random draws per operator");
  gradcheck->add_option("--seed", gc_seed, "Base seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto c = resolve(gen_o);
      hoiprime::cmd_gen(c);
      std::printf("wrote dataset to %s (config %s)\n", c.data_dir.c_str(), c.hash_hex().c_str());
    } else if (train->parsed()) {
      const auto c = resolve(train_o);
      std::cout << hoiprime::cmd_train(c);
    } else if (eval->parsed()) {
      const auto c = resolve(eval_o);
      hoiprime::cmd_eval(c);
      std::cout << hoiprime::read_text(std::filesystem::path(c.out_dir) / "report.txt");
    } else if (ablate->parsed()) {
      auto c = resolve(ablate_o);
      if (!variants.empty()) {
        c.ablate.clear();
        std::stringstream ss(variants);
        std::string v;
        while (std::getline(ss, v, ',')) c.ablate.push_back(v);
        c.validate();
      }
      std::cout << hoiprime::cmd_ablate(c);
    } else if (gradcheck->parsed()) {
      bool ok = false;
      std::cout << hoiprime::cmd_gradcheck(seeds, gc_seed, ok);
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hoiprime: %s\n", e.what());
    return 1;
  }
  return 0;
}
