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
#include "hoiprime/pairing.hpp"

#include <algorithm>

#include "hoiprime/errors.hpp"

namespace hoiprime {

std::span<const float> EmbeddingTable::at(int class_id) const {
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= vectors.size()) {
    throw ArgumentError("no embedding for class " + std::to_string(class_id));
  }
  return vectors[class_id];
}

namespace {

std::vector<std::pair<int, int>> pair_indices(std::span<const Detection> dets,
                                              const std::vector<bool>& kept) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t h = 0; h < dets.size(); ++h) {
    if (!kept[h] || dets[h].class_id != kHumanClass) continue;
    for (std::size_t o = 0; o < dets.size(); ++o) {
      if (o == h || !kept[o]) continue;
      pairs.emplace_back(static_cast<int>(h), static_cast<int>(o));
    }
  }
  return pairs;
}

PairCandidate candidate(const Detection& human, const Detection& object) {
  PairCandidate pc;
  pc.human = human;
  pc.object = object;
  pc.union_box = union_box(human.box, object.box);
  return pc;
}

}  // namespace

std::vector<float> label_pair(const Detection& human, const Detection& object,
                              std::span<const GtTriplet> triplets, int num_predicates,
                              float match_iou) {
  std::vector<float> target(num_predicates, 0.0f);
  for (const GtTriplet& t : triplets) {
    if (t.object_class != object.class_id) continue;
    if (t.predicate < 0 || t.predicate >= num_predicates) {
      throw ArgumentError("label_pair: predicate " + std::to_string(t.predicate) + " out of range");
    }
    if (iou(human.box, t.human) > match_iou && iou(object.box, t.object) > match_iou) {
      target[t.predicate] = 1.0f;
    }
  }
  return target;
}

std::vector<std::pair<int, int>> training_pair_indices(std::span<const Detection> dets,
                                                       const SceneGt& gt,
                                                       const TrainingPairOptions& options) {
  std::vector<bool> kept(dets.size(), false);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const Detection& d = dets[i];
    if (!(d.score > options.conf_min)) continue;
    double best = 0.0;
    for (const GtEntity& e : gt.entities) best = std::max(best, iou(d.box, e.box));
    for (const GtTriplet& t : gt.triplets) {
      best = std::max({best, iou(d.box, t.human), iou(d.box, t.object)});
    }
    kept[i] = best > options.gt_iou_min;
  }
  return pair_indices(dets, kept);
}

std::vector<std::pair<int, int>> test_pair_indices(std::span<const Detection> dets,
                                                   float conf_min) {
  std::vector<bool> kept(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) kept[i] = dets[i].score > conf_min;
  return pair_indices(dets, kept);
}

std::vector<PairCandidate> make_training_pairs(std::span<const Detection> dets, const SceneGt& gt,
                                               int num_predicates,
                                               const TrainingPairOptions& options) {
  std::vector<PairCandidate> pairs;
  for (auto [h, o] : training_pair_indices(dets, gt, options)) {
    PairCandidate pc = candidate(dets[h], dets[o]);
    pc.target = label_pair(dets[h], dets[o], gt.triplets, num_predicates, options.match_iou);
    pairs.push_back(std::move(pc));
  }
  return pairs;
}

std::vector<PairCandidate> make_test_pairs(std::span<const Detection> dets, float conf_min) {
  std::vector<PairCandidate> pairs;
  for (auto [h, o] : test_pair_indices(dets, conf_min)) pairs.push_back(candidate(dets[h], dets[o]));
  return pairs;
}

HoiPair materialize(const PairCandidate& candidate, const Tensor& image,
                    const EmbeddingTable& embeddings, int resolution) {
  HoiPair pair;
  pair.human = candidate.human;
  pair.object = candidate.object;
  pair.union_box = candidate.union_box;
  pair.ip = rasterize_ip(candidate.human.box, candidate.object.box, resolution);
  pair.union_crop = crop_resize(image, candidate.union_box, resolution);
  const auto w = embeddings.at(candidate.object.class_id);
  pair.w_o.assign(w.begin(), w.end());
  pair.target = candidate.target;
  return pair;
}

}  // namespace hoiprime
