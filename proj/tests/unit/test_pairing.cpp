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
#include <gtest/gtest.h>

#include <algorithm>

#include "hoiprime/errors.hpp"
#include "hoiprime/pairing.hpp"
#include "hoiprime/rng.hpp"

namespace hoiprime {
namespace {

Detection det(BoxF box, int cls, float score) { return Detection{box, cls, score, {}}; }

SceneGt scene_with(std::vector<GtEntity> entities) { return SceneGt{std::move(entities), {}}; }

TEST(TrainingPairs, ConfidenceThresholdIsStrict) {
  const BoxF h{0, 0, 10, 20}, o{12, 5, 20, 15};
  const SceneGt gt = scene_with({{h, 0}, {o, 3}});
  std::vector<Detection> dets{det(h, 0, 0.9f), det(o, 3, 0.74f)};
  EXPECT_TRUE(make_training_pairs(dets, gt, 4).empty());
  dets[1].score = 0.75f;
  EXPECT_TRUE(make_training_pairs(dets, gt, 4).empty());
  dets[1].score = 0.76f;
  EXPECT_EQ(make_training_pairs(dets, gt, 4).size(), 1u);
}

TEST(TrainingPairs, GroundTruthOverlapThreshold) {
  const BoxF h{0, 0, 10, 20}, o{10, 0, 20, 10};
  const SceneGt gt = scene_with({{h, 0}, {o, 3}});
  // Half-shifted object: IoU 1/3 with its GT.
  std::vector<Detection> dets{det(h, 0, 0.95f), det({15, 0, 25, 10}, 3, 0.9f)};
  EXPECT_TRUE(make_training_pairs(dets, gt, 4).empty());
}

TEST(TrainingPairs, CartesianProductMinusSelfPairs) {
  std::vector<GtEntity> ents;
  std::vector<Detection> dets;
  for (int i = 0; i < 2; ++i) {
    const BoxF b{i * 30.0f, 0, i * 30.0f + 10, 20};
    ents.push_back({b, 0});
    dets.push_back(det(b, 0, 0.95f));
  }
  for (int i = 0; i < 3; ++i) {
    const BoxF b{i * 30.0f, 50, i * 30.0f + 10, 60};
    ents.push_back({b, 2});
    dets.push_back(det(b, 2, 0.95f));
  }
  // Each human pairs with the other human and the three objects.
  EXPECT_EQ(make_training_pairs(dets, scene_with(ents), 3).size(), 2u * 4u);
  const auto idx = training_pair_indices(dets, scene_with(ents));
  for (auto [h, o] : idx) {
    EXPECT_NE(h, o);
    EXPECT_EQ(dets[h].class_id, kHumanClass);
  }
}

// Property: every kept detection passes both filters when re-checked.
TEST(TrainingPairs, RefilteringKeepsEverything) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    SceneGt gt;
    std::vector<Detection> dets;
    for (int i = 0; i < 6; ++i) {
      const float x = static_cast<float>(rng.uniform(0, 80)), y = static_cast<float>(rng.uniform(0, 80));
      const BoxF b{x, y, x + 15, y + 15};
      const int cls = i < 2 ? 0 : 1 + i % 3;
      gt.entities.push_back({b, cls});
      const float j = static_cast<float>(rng.uniform(-4, 4));
      dets.push_back(det({b.x1 + j, b.y1, b.x2 + j, b.y2}, cls, static_cast<float>(rng.uniform())));
    }
    for (auto [h, o] : training_pair_indices(dets, gt)) {
      for (int k : {h, o}) {
        EXPECT_GT(dets[k].score, 0.75f);
        double best = 0.0;
        for (const GtEntity& e : gt.entities) best = std::max(best, iou(dets[k].box, e.box));
        EXPECT_GT(best, 0.7);
      }
    }
  }
}

TEST(TestPairs, ScoreFilterAndArity) {
  std::vector<Detection> dets{det({0, 0, 10, 10}, 0, 0.95f), det({20, 0, 30, 10}, 5, 0.89f)};
  EXPECT_TRUE(make_test_pairs(dets).empty());
  dets[1].score = 0.9f;
  EXPECT_TRUE(make_test_pairs(dets).empty());
  dets[1].score = 0.91f;
  const auto pairs = make_test_pairs(dets);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_TRUE(pairs[0].target.empty());
  EXPECT_TRUE(pairs[0].union_box.contains(pairs[0].human.box));
  EXPECT_TRUE(pairs[0].union_box.contains(pairs[0].object.box));
}

TEST(TestPairs, NoHumansMeansNoPairs) {
  std::vector<Detection> dets{det({0, 0, 10, 10}, 1, 0.99f), det({20, 0, 30, 10}, 2, 0.99f)};
  EXPECT_TRUE(make_test_pairs(dets).empty());
}

TEST(LabelPair, ExactMatchSetsOnlyThatPredicate) {
  const BoxF h{0, 0, 10, 20}, o{5, 10, 25, 30};
  const std::vector<GtTriplet> gt{{h, o, 4, 2}};
  const auto t = label_pair(det(h, 0, 1), det(o, 4, 1), gt, 5);
  EXPECT_EQ(t, (std::vector<float>{0, 0, 1, 0, 0}));
}

TEST(LabelPair, NoOverlapGivesZeros) {
  const std::vector<GtTriplet> gt{{{0, 0, 10, 10}, {10, 0, 20, 10}, 1, 0}};
  const auto t = label_pair(det({50, 50, 60, 60}, 0, 1), det({70, 50, 80, 60}, 1, 1), gt, 3);
  EXPECT_EQ(t, (std::vector<float>(3, 0.0f)));
}

TEST(LabelPair, SharedBoxesGiveTwoLabels) {
  const BoxF h{0, 0, 10, 20}, o{5, 10, 25, 30};
  const std::vector<GtTriplet> gt{{h, o, 4, 0}, {h, o, 4, 3}, {h, o, 2, 1}};
  const auto t = label_pair(det(h, 0, 1), det(o, 4, 1), gt, 4);
  EXPECT_EQ(t, (std::vector<float>{1, 0, 0, 1}));
}

TEST(LabelPair, OutOfRangePredicateIsRejected) {
  const BoxF h{0, 0, 10, 20};
  const std::vector<GtTriplet> gt{{h, h, 1, 7}};
  EXPECT_THROW(label_pair(det(h, 0, 1), det(h, 1, 1), gt, 3), ArgumentError);
}

TEST(Materialize, FillsEveryField) {
  EmbeddingTable emb{2, {{0, 0}, {0.5f, -0.5f}}};
  PairCandidate pc{det({2, 2, 8, 14}, 0, 1), det({6, 8, 16, 16}, 1, 1), {2, 2, 16, 16}, {1, 0}};
  const HoiPair p = materialize(pc, Tensor({3, 20, 20}, 0.5f), emb, 16);
  EXPECT_EQ(p.union_crop.shape(), (Shape{3, 16, 16}));
  EXPECT_EQ(p.ip.grid.shape(), (Shape{2, 16, 16}));
  EXPECT_EQ(p.w_o, (std::vector<float>{0.5f, -0.5f}));
  EXPECT_EQ(p.target, pc.target);
}

}  // namespace
}  // namespace hoiprime
