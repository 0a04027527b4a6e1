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
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hoiprime/model.hpp"
#include "hoiprime/synthetic.hpp"
#include "hoiprime/training.hpp"

namespace hoiprime {

enum class ScoreSource { kVisual, kLayout };  // p2 or p1

struct RunConfig {
  std::string data_dir = "data";
  std::string out_dir = "out";
  std::uint64_t seed = 0;

  // Dataset generation. spec_file names a scene spec JSON (the format
  // gen writes to spec.json); empty selects the built-in desk spec.
  std::string spec_file;
  int train_scenes = 400;
  int test_scenes = 100;
  std::string noise = "moderate";  // none | moderate
  std::optional<double> background_ratio;
  bool appearance_predicate = false;
  std::vector<RareRule> rare;
  int embedding_dim = 32;
  int feature_dim = 32;

  // Model and training.
  std::string model = "desk";  // desk | tiny | full
  std::string variant = "standard";
  int epochs = 10;
  double lr0 = TrainConfig::desk().lr0;
  int decay_every = 3;
  double decay_factor = 0.1;
  int batch_size = 32;

  // Evaluation.
  ScoreSource score = ScoreSource::kVisual;
  bool zero_shot = false;
  std::optional<int> n_unseen;  // default: 20% of the training triplet classes
  std::string split_file;       // empty: sample the split from the seed
  int rare_threshold = 10;
  std::vector<std::string> ablate = {"standard", "np", "nl", "nc"};

  // Unknown keys and malformed values throw ArgumentError.
  static RunConfig from_json(std::string_view text);
  static RunConfig load(const std::string& path);
  // Canonical form: every key, fixed order.
  std::string to_json() const;
  // FNV-1a of the canonical form with the two directories blanked, so a
  // run reproduces its hash wherever it writes.
  std::uint64_t hash() const;
  std::string hash_hex() const;
  void validate() const;

  std::uint64_t dataset_seed() const;
  std::uint64_t init_seed() const;
  std::uint64_t shuffle_seed() const;
  std::uint64_t split_seed() const;

  DatasetOptions dataset_options() const;
  ModelConfig model_config(const SceneSpec& spec, int embedding_dim, int feature_dim) const;
  TrainConfig train_config() const;
};

ModelConfig model_preset(std::string_view name);

// Caps worker threads; reads HOIPRIME_THREADS, default 1.
int worker_threads();

}  // namespace hoiprime
