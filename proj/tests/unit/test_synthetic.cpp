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

#include <cmath>
#include <numeric>

#include "hoiprime/errors.hpp"
#include "hoiprime/synthetic.hpp"

namespace hoiprime {
namespace {

double cosine(std::span<const float> a, std::span<const float> b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return d / std::sqrt(na * nb);
}

int humans_in(const Scene& s) {
  int n = 0;
  for (const SceneObject& o : s.objects) n += o.class_id == kHumanClass;
  return n;
}

TEST(Spec, DeskShape) {
  const SceneSpec s = SceneSpec::desk();
  EXPECT_EQ(s.num_objects(), 4);
  EXPECT_EQ(s.num_predicates(), 6);
  EXPECT_NO_THROW(s.validate());
  SceneSpec a = s;
  a.appearance_predicate = true;
  EXPECT_EQ(a.num_predicates(), 7);
  EXPECT_EQ(predicate_names(a).size(), 7u);
}

TEST(Spec, NoAllowedPredicateIsRejected) {
  SceneSpec s = SceneSpec::desk();
  for (auto& row : s.allowed) row.assign(row.size(), false);
  EXPECT_THROW(s.validate(), ArgumentError);
}

TEST(Spec, RatesOutsideUnitIntervalAreRejected) {
  DetectorNoise n;
  n.miss_rate = 1.5;
  EXPECT_THROW(n.validate(), ArgumentError);
}

TEST(Scenes, FixedSeedIsBitIdentical) {
  const SceneSpec spec = SceneSpec::desk();
  Rng a(5), b(5);
  const Scene x = generate_scene(a, spec, "x"), y = generate_scene(b, spec, "x");
  EXPECT_EQ(x.image.values(), y.image.values());
  ASSERT_EQ(x.objects.size(), y.objects.size());
  for (std::size_t i = 0; i < x.objects.size(); ++i) EXPECT_EQ(x.objects[i].box, y.objects[i].box);
}

// Property: every GT triplet agrees with the layout rule, and the counts
// respect the configured ranges.
TEST(Scenes, LabelsAgreeWithRules) {
  SceneSpec spec = SceneSpec::desk();
  spec.appearance_predicate = true;
  Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    const Scene s = generate_scene(rng, spec, "s");
    const int h = humans_in(s), o = static_cast<int>(s.objects.size()) - h;
    EXPECT_GE(h, spec.min_humans);
    EXPECT_LE(h, spec.max_humans);
    EXPECT_GE(o, spec.min_objects);
    EXPECT_LE(o, spec.max_objects);
    for (const GtTriplet& t : s.gt.triplets) {
      if (t.predicate >= kLayoutPredicates) continue;
      const auto p = predicate_of(spec, t.human, t.object, t.object_class);
      ASSERT_TRUE(p.has_value());
      EXPECT_EQ(*p, t.predicate);
      EXPECT_TRUE(spec.allowed[t.predicate][t.object_class]);
    }
  }
}

TEST(Scenes, AboveRuleHoldsGeometrically) {
  const SceneSpec spec = SceneSpec::desk();
  Rng rng(12);
  int seen = 0;
  for (int i = 0; i < 300; ++i) {
    const Scene s = generate_scene(rng, spec, "s");
    for (const GtTriplet& t : s.gt.triplets) {
      if (t.predicate != kCarryAbove) continue;
      EXPECT_LT(t.object.cy(), t.human.cy());
      ++seen;
    }
  }
  EXPECT_GT(seen, 0);
}

TEST(Scenes, WithoutNegativesEveryObjectInteracts) {
  SceneSpec spec = SceneSpec::desk();
  spec.negative_rate = 0.0;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Scene s = generate_scene(rng, spec, "s");
    for (const SceneObject& o : s.objects) {
      if (o.class_id == kHumanClass) continue;
      bool linked = false;
      for (const GtTriplet& t : s.gt.triplets) linked = linked || t.object == o.box;
      EXPECT_TRUE(linked);
    }
  }
}

TEST(Scenes, ImageValuesAreBytes) {
  Rng rng(1);
  const Scene s = generate_scene(rng, SceneSpec::desk(), "s");
  EXPECT_EQ(s.image.shape(), (Shape{3, 64, 64}));
  for (float v : s.image.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
    EXPECT_NEAR(v * 255.0f, std::round(v * 255.0f), 1e-3);
  }
}

TEST(Detector, NoNoiseReproducesGroundTruth) {
  const auto feats = class_features(4, 8);
  Rng rng(4), det_rng(5);
  const Scene s = generate_scene(rng, SceneSpec::desk(), "s");
  const auto dets = simulate_detector(s, DetectorNoise::none(), feats, det_rng);
  ASSERT_EQ(dets.size(), s.objects.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    EXPECT_EQ(dets[i].box, s.objects[i].box);
    EXPECT_EQ(dets[i].score, 1.0f);
    EXPECT_EQ(dets[i].class_id, s.objects[i].class_id);
    EXPECT_EQ(dets[i].feature, feats[s.objects[i].class_id]);
  }
}

TEST(Detector, FullMissRateGivesNothing) {
  DetectorNoise n;
  n.miss_rate = 1.0;
  Rng rng(4), det_rng(5);
  const Scene s = generate_scene(rng, SceneSpec::desk(), "s");
  EXPECT_TRUE(simulate_detector(s, n, class_features(4, 8), det_rng).empty());
}

TEST(Detector, JitterKeepsMeanOverlapHigh) {
  DetectorNoise n;
  n.jitter = 0.05;
  const auto feats = class_features(4, 8);
  Rng rng(6);
  double total = 0.0;
  int count = 0;
  while (count < 1000) {
    const Scene s = generate_scene(rng, SceneSpec::desk(), "s");
    const auto dets = simulate_detector(s, n, feats, rng);
    for (std::size_t i = 0; i < dets.size() && count < 1000; ++i, ++count) total += iou(dets[i].box, s.objects[i].box);
  }
  const double mean = total / count;
  EXPECT_GT(mean, 0.8);
  // Independent Monte-Carlo of the same jitter model on an unclamped box.
  Rng mc(9);
  double ref = 0.0;
  const BoxF b{20, 20, 40, 44};
  for (int i = 0; i < 20000; ++i) {
    const BoxF j{b.x1 + static_cast<float>(mc.normal(0, 1.0)), b.y1 + static_cast<float>(mc.normal(0, 1.2)),
                 b.x2 + static_cast<float>(mc.normal(0, 1.0)), b.y2 + static_cast<float>(mc.normal(0, 1.2))};
    ref += iou(j, b);
  }
  EXPECT_NEAR(mean, ref / 20000, 0.03);
}

TEST(Detector, ModerateNoiseAddsFalsePositives) {
  const auto feats = class_features(4, 8);
  Rng rng(10);
  int extra = 0;
  for (int i = 0; i < 200; ++i) {
    const Scene s = generate_scene(rng, SceneSpec::desk(), "s");
    DetectorNoise n = DetectorNoise::moderate();
    n.miss_rate = 0.0;
    extra += static_cast<int>(simulate_detector(s, n, feats, rng).size() - s.objects.size());
  }
  EXPECT_NEAR(extra / 200.0, DetectorNoise::moderate().fp_rate, 0.15);
}

TEST(Embeddings, UnitNormDeterministicAndGrouped) {
  const std::vector<int> groups{0, 1, 2, 2};
  const EmbeddingTable t = make_embeddings(groups, 32);
  for (int c = 0; c < 4; ++c) {
    const auto v = t.at(c);
    EXPECT_NEAR(std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)), 1.0, 1e-6);
    const auto again = pseudo_embedding(c, 32, groups);
    EXPECT_TRUE(std::equal(v.begin(), v.end(), again.begin()));
  }
  EXPECT_GT(cosine(t.at(2), t.at(3)), 0.8);
  EXPECT_LT(std::abs(cosine(t.at(1), t.at(2))), 0.3);
  EXPECT_LT(std::abs(cosine(t.at(0), t.at(1))), 0.3);
}

TEST(Dataset, DeterministicForFixedSeed) {
  DatasetOptions o;
  o.train_scenes = 20;
  o.test_scenes = 10;
  o.noise = DetectorNoise::moderate();
  o.seed = 44;
  const Dataset a = generate_dataset(o), b = generate_dataset(o);
  ASSERT_EQ(a.train.size(), 20u);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_EQ(a.train[i].pixels.values(), b.train[i].pixels.values());
    EXPECT_EQ(*a.train[i].pairs, *b.train[i].pairs);
    ASSERT_EQ(a.train[i].detections.size(), b.train[i].detections.size());
    for (std::size_t d = 0; d < a.train[i].detections.size(); ++d)
      EXPECT_EQ(a.train[i].detections[d].box, b.train[i].detections[d].box);
  }
  EXPECT_EQ(triplet_counts(a), triplet_counts(b));
  EXPECT_FALSE(a.test[0].pairs.has_value());
}

TEST(Dataset, RareMultiplierStarvesClasses) {
  DatasetOptions o;
  o.train_scenes = 500;
  o.test_scenes = 1;
  o.seed = 2;
  o.spec.rare = {{kHold, 1, 0.02}, {kRide, 2, 0.02}, {kNextTo, 3, 0.02}};
  const Dataset ds = generate_dataset(o);
  const auto counts = triplet_counts(ds);
  const int n = ds.spec.num_objects();
  for (const RareRule& r : o.spec.rare) EXPECT_LT(counts[r.predicate * n + r.object_class], 10);
  // Unaffected classes stay well populated.
  EXPECT_GE(counts[kHold * n + 2], 10);
}

TEST(Dataset, BackgroundRatioCapsNegatives) {
  DatasetOptions o;
  o.train_scenes = 150;
  o.test_scenes = 1;
  o.seed = 9;
  o.spec.negative_rate = 0.6;
  o.background_ratio = 3.0;
  const Dataset ds = generate_dataset(o);
  const int p = ds.spec.num_predicates();
  std::int64_t pos = 0, neg = 0;
  for (const SceneRecord& r : ds.train) {
    for (auto [h, obj] : *r.pairs) {
      const auto t = label_pair(r.detections[h], r.detections[obj], r.gt.triplets, p);
      (std::any_of(t.begin(), t.end(), [](float v) { return v > 0.5f; }) ? pos : neg) += 1;
    }
  }
  EXPECT_GT(pos, 0);
  EXPECT_LE(neg, 3 * pos);
}

}  // namespace
}  // namespace hoiprime
