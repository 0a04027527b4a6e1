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

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hoiprime/geometry.hpp"
#include "hoiprime/tensor.hpp"

namespace hoiprime {

// Object vocabularies reserve class 0 for "person".
inline constexpr int kHumanClass = 0;

struct Detection {
  BoxF box;
  int class_id = 0;
  float score = 1.0f;
  std::vector<float> feature;  // RoI appearance feature
};

struct GtEntity {
  BoxF box;
  int class_id = 0;
};

struct GtTriplet {
  BoxF human;
  BoxF object;
  int object_class = 0;
  int predicate = 0;
};

struct SceneGt {
  std::vector<GtEntity> entities;
  std::vector<GtTriplet> triplets;
};

// Candidate (human, object) pair before any pixels are touched.
struct PairCandidate {
  Detection human;
  Detection object;
  BoxF union_box;
  std::vector<float> target;  // multi-hot over predicates; empty at test time
};

// Fully materialised network input for one pair.
struct HoiPair {
  Detection human;
  Detection object;
  BoxF union_box;
  InteractionPattern ip;
  Tensor union_crop;           // [3,R,R]
  std::vector<float> w_o;      // object-class embedding
  std::vector<float> target;   // empty at test time
};

// Class-indexed embedding vectors (frozen word-vector stand-ins).
struct EmbeddingTable {
  int dim = 0;
  std::vector<std::vector<float>> vectors;

  std::span<const float> at(int class_id) const;
};

struct TrainingPairOptions {
  float conf_min = 0.75f;
  float gt_iou_min = 0.7f;
  float match_iou = 0.5f;
};

// (human, object) index pairs kept by the training filter below.
std::vector<std::pair<int, int>> training_pair_indices(std::span<const Detection> dets,
                                                       const SceneGt& gt,
                                                       const TrainingPairOptions& options = {});
// (human, object) index pairs kept by the test filter below.
std::vector<std::pair<int, int>> test_pair_indices(std::span<const Detection> dets,
                                                   float conf_min = 0.9f);

// Detections scoring above conf_min whose best IoU with any GT box exceeds
// gt_iou_min, paired human x other (identical detection excluded) and
// labelled by label_pair.
std::vector<PairCandidate> make_training_pairs(std::span<const Detection> dets, const SceneGt& gt,
                                               int num_predicates,
                                               const TrainingPairOptions& options = {});

// All (human-class, any-class) pairs among detections scoring above conf_min.
std::vector<PairCandidate> make_test_pairs(std::span<const Detection> dets, float conf_min = 0.9f);

// Multi-hot predicate vector: p is set iff a GT triplet of the same object
// class overlaps the pair with human IoU and object IoU both above match_iou.
std::vector<float> label_pair(const Detection& human, const Detection& object,
                              std::span<const GtTriplet> triplets, int num_predicates,
                              float match_iou = 0.5f);

HoiPair materialize(const PairCandidate& candidate, const Tensor& image,
                    const EmbeddingTable& embeddings, int resolution);

}  // namespace hoiprime
