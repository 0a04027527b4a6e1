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
#include <span>
#include <string>
#include <vector>

#include "hoiprime/geometry.hpp"
#include "hoiprime/pairing.hpp"

namespace hoiprime {

// Triplet class ids are predicate * num_objects + object_class.
inline int triplet_id(int predicate, int object_class, int num_objects) {
  return predicate * num_objects + object_class;
}

struct TripletDetection {
  std::string scene_id;
  BoxF human;
  BoxF object;
  int triplet = 0;
  double score = 0.0;  // in [0, 1]
};

struct GtInstance {
  std::string scene_id;
  BoxF human;
  BoxF object;
  int triplet = 0;
};

struct MatchResult {
  std::vector<bool> tp;  // in score order
  int n_gt = 0;
};

// Greedy matching of one class in descending score order (stable for ties).
// A detection is a true positive when an unmatched GT in the same scene has
// human IoU and object IoU both above iou_min; among those it takes the GT
// with the largest min(human IoU, object IoU), first index on ties.
MatchResult match_class(std::span<const TripletDetection> dets, std::span<const GtInstance> gts,
                        double iou_min = 0.5);

// All-point interpolated AP: the mean over GT instances of the precision
// envelope at the rank where each is recalled. nullopt when n_gt == 0.
std::optional<double> average_precision(const std::vector<bool>& tp, int n_gt);

// AP per triplet class; classes without GT stay nullopt.
std::vector<std::optional<double>> per_class_ap(std::span<const TripletDetection> dets,
                                                std::span<const GtInstance> gts, int num_classes,
                                                double iou_min = 0.5);

enum class EvalMode { kDefault, kZeroShot };

struct EvalReport {
  EvalMode mode = EvalMode::kDefault;
  std::vector<std::optional<double>> ap;   // per triplet class
  std::vector<std::int64_t> gt_counts;     // test GT instances per class
  std::vector<std::int64_t> train_counts;  // training instances per class
  std::vector<bool> in_second_split;       // rare (default) or unseen (zero-shot)
  // Default mode: full / rare / non-rare. Zero-shot: all / unseen / seen.
  std::optional<double> map_full;
  std::optional<double> map_rare;
  std::optional<double> map_nonrare;
  std::string config_hash;  // hex, from the run configuration
  std::uint64_t seed = 0;

  std::optional<double> map_all() const { return map_full; }
  std::optional<double> map_unseen() const { return map_rare; }
  std::optional<double> map_seen() const { return map_nonrare; }
};

// Means over classes with GT: all, rare (train count < rare_threshold) and
// the rest. An empty split has no mean.
EvalReport aggregate(std::vector<std::optional<double>> ap, std::vector<std::int64_t> gt_counts,
                     std::vector<std::int64_t> train_counts, int rare_threshold = 10);
EvalReport aggregate_zero_shot(std::vector<std::optional<double>> ap,
                               std::vector<std::int64_t> gt_counts,
                               std::vector<std::int64_t> train_counts,
                               const std::vector<bool>& unseen);

std::string report_json(const EvalReport& report, const std::vector<std::string>& class_names = {});
// Table with Full / Rare / Non-rare (or Unseen / Seen / All) columns.
std::string report_table(const EvalReport& report);

struct ZeroShotSplit {
  std::vector<int> seen;
  std::vector<int> unseen;
};

// Samples n_unseen of the given triplet classes so every object class
// keeps at least one seen triplet. Throws ConstraintError if impossible.
ZeroShotSplit zero_shot_split(std::span<const int> triplet_classes, int num_objects, int n_unseen,
                              std::uint64_t seed);
// Throws ConstraintError unless every object class of the union keeps a
// seen triplet.
void check_split(const ZeroShotSplit& split, int num_objects);

// One detection per predicate: score s_h * s_o * sigmoid(logit).
std::vector<TripletDetection> compose_triplets(const std::string& scene_id, const Detection& human,
                                               const Detection& object,
                                               std::span<const float> logits, int num_objects);

std::vector<GtInstance> gt_instances(const std::string& scene_id, const SceneGt& gt,
                                     int num_objects);

}  // namespace hoiprime
