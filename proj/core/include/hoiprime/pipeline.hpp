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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hoiprime/config.hpp"
#include "hoiprime/evaluation.hpp"
#include "hoiprime/grad_check.hpp"
#include "hoiprime/model.hpp"
#include "hoiprime/synthetic.hpp"
#include "hoiprime/training.hpp"

namespace hoiprime {

struct PairRef {
  std::size_t scene = 0;
  int human = 0;
  int object = 0;
  std::vector<float> target;  // empty for test pairs
};

// Training pairs of a dataset, materialized per batch. Pairs carrying a
// positive label on a withheld triplet class are dropped entirely.
class DatasetPairSource : public PairSource {
 public:
  DatasetPairSource(const Dataset& dataset, int resolution, const std::vector<bool>& withheld = {});

  std::size_t size() const override { return refs_.size(); }
  PairBatch batch(std::span<const std::size_t> indices) const override;

  const std::vector<PairRef>& refs() const { return refs_; }
  // Positives per predicate over the kept pairs.
  std::vector<std::int64_t> predicate_counts() const;

 private:
  const Dataset* dataset_;
  int resolution_;
  std::vector<PairRef> refs_;
};

// Scores every test pair (both detections scoring above 0.9) and composes
// one triplet detection per predicate.
std::vector<TripletDetection> detect(Model& model, const Dataset& dataset, ScoreSource score,
                                     int batch_size = 64);

std::vector<GtInstance> test_gt(const Dataset& dataset);

// Permutes scores across detections: a ranking carrying no information.
std::vector<TripletDetection> shuffle_scores(std::vector<TripletDetection> dets, std::uint64_t seed);

// The withheld triplet classes of a zero-shot run: the split file when
// given, otherwise a sampled split over the classes with training
// instances.
ZeroShotSplit resolve_split(const RunConfig& config, const Dataset& dataset);
std::vector<bool> unseen_mask(const ZeroShotSplit& split, int num_classes);

struct TrainOutput {
  std::unique_ptr<Model> model;
  TrainResult result;
  std::optional<ZeroShotSplit> split;
  std::size_t pairs = 0;
};

TrainOutput train_run(const RunConfig& config, const Dataset& dataset);

EvalReport evaluate_run(const RunConfig& config, const Dataset& dataset,
                        const std::vector<TripletDetection>& detections,
                        const std::optional<ZeroShotSplit>& split);

std::vector<std::string> triplet_names(const SceneSpec& spec);

// Identifies the architecture in checkpoints.
std::uint64_t model_hash(const ModelConfig& model, const VariantSpec& variant);

// Commands. Each writes its outputs under the configured directories and
// returns the primary text it produced.
void cmd_gen(const RunConfig& config);
// Writes model.ckpt, loss.csv and config.json to out_dir.
std::string cmd_train(const RunConfig& config);
// Reads out_dir/model.ckpt; writes detections.jsonl, report.json and
// report.txt. Returns the report JSON.
std::string cmd_eval(const RunConfig& config);
// Train and evaluate each variant in config.ablate under out_dir/<name>;
// writes ablation.json and ablation.txt. Returns the table.
std::string cmd_ablate(const RunConfig& config);
// One row per operator plus the desk model; returns the table.
std::string cmd_gradcheck(int seeds, std::uint64_t seed, bool& all_passed);

}  // namespace hoiprime
