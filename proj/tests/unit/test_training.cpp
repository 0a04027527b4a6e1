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
#include <sstream>

#include "hoiprime/rng.hpp"
#include "hoiprime/training.hpp"

namespace hoiprime {
namespace {

// Pairs whose first predicate is on exactly when the object sits right of
// the human, so the layout alone determines the label.
std::vector<HoiPair> toy_pairs(const ModelConfig& c, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<HoiPair> pairs;
  for (int i = 0; i < n; ++i) {
    HoiPair p;
    const bool right = i % 2 == 0;
    p.human.box = {20, 10, 40, 60};
    const float x = right ? 45.0f : 0.0f;
    p.object.box = {x, 30, x + 15, 45};
    p.object.class_id = 1;
    p.human.feature.assign(c.det_feature_dim, 0.0f);
    p.object.feature.assign(c.det_feature_dim, 0.0f);
    for (float& v : p.human.feature) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    for (float& v : p.object.feature) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    p.union_box = union_box(p.human.box, p.object.box);
    p.ip = rasterize_ip(p.human.box, p.object.box, c.resolution);
    p.union_crop = Tensor({3, c.resolution, c.resolution});
    for (float& v : p.union_crop.data()) v = static_cast<float>(rng.uniform());
    p.w_o.assign(c.embedding_dim, 0.1f);
    p.target.assign(c.num_predicates, 0.0f);
    p.target[0] = right ? 1.0f : 0.0f;
    p.target[1] = right ? 0.0f : 1.0f;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

TEST(ClassWeights, InverseCountsNormalisedToMeanOne) {
  const std::vector<std::int64_t> counts{10, 40};
  const auto w = class_weights(counts);
  EXPECT_NEAR(w[0], 1.6f, 1e-6);
  EXPECT_NEAR(w[1], 0.4f, 1e-6);
}

TEST(ClassWeights, UniformCountsGiveOnes) {
  const std::vector<std::int64_t> counts(5, 7);
  for (float w : class_weights(counts)) EXPECT_NEAR(w, 1.0f, 1e-6);
}

TEST(ClassWeights, ZeroCountUsesFloorOfOne) {
  const std::vector<std::int64_t> counts{0, 10, 10};
  const auto w = class_weights(counts);
  // Inverses 1, 0.1, 0.1 with mean 0.4.
  EXPECT_NEAR(w[0], 2.5f, 1e-6);
  EXPECT_NEAR(w[1], 0.25f, 1e-6);
  EXPECT_GT(w[0], w[1]);
}

TEST(ClassWeights, AllZeroIsArgumentError) {
  const std::vector<std::int64_t> counts(3, 0);
  EXPECT_THROW(class_weights(counts), ArgumentError);
}

TEST(Schedule, StepDecayEveryThreeEpochs) {
  const TrainConfig tc = TrainConfig::full_scale();
  const double want[] = {0.1, 0.1, 0.1, 0.01, 0.01, 0.01, 0.001, 0.001, 0.001, 0.0001};
  for (int e = 0; e < 10; ++e) EXPECT_NEAR(tc.lr_at(e), want[e], 1e-15);
  EXPECT_EQ(tc.epochs, 10);
}

TEST(Schedule, NonPositiveSettingsAreRejected) {
  TrainConfig tc;
  tc.batch_size = 0;
  EXPECT_THROW(tc.validate(), ArgumentError);
  tc = TrainConfig{};
  tc.lr0 = -1;
  EXPECT_THROW(tc.validate(), ArgumentError);
}

TEST(JointLoss, ZeroLogitsGiveTwoPLnTwo) {
  Tape tape;
  const int p = 6;
  const std::vector<float> w(p, 1.0f);
  Tensor target({3, p});
  target[0] = target[7] = 1.0f;
  const JointLoss l = joint_loss<float>(tape.constant(Tensor({3, p})), tape.constant(Tensor({3, p})), target, w);
  EXPECT_NEAR(l.report.total, 2.0 * p * std::log(2.0), 1e-5);
  EXPECT_NEAR(*l.report.j1 + l.report.j2, l.report.total, 1e-12);
}

TEST(JointLoss, WithoutPriorOnlyVisualTerm) {
  Tape tape;
  const std::vector<float> w(2, 1.0f);
  const JointLoss l = joint_loss<float>(std::nullopt, tape.constant(Tensor({1, 2})), Tensor({1, 2}), w);
  EXPECT_FALSE(l.report.j1.has_value());
  EXPECT_EQ(l.report.total, l.report.j2);
}

TEST(JointLoss, SaturatedCorrectLogitsNearZero) {
  Tape tape;
  const std::vector<float> w(2, 1.0f);
  Tensor target({1, 2}, std::vector<float>{1, 0});
  Tensor z({1, 2}, std::vector<float>{30, -30});
  const JointLoss l = joint_loss<float>(tape.constant(z), tape.constant(z), target, w);
  EXPECT_LT(l.report.total, 1e-6);
}

TEST(Batches, EpochPermutationCoversEveryIndexOnce) {
  const auto batches = epoch_batches(37, 8, 5, 2);
  std::vector<int> seen(37, 0);
  for (const auto& b : batches) {
    EXPECT_GE(b.size(), 2u);
    for (std::size_t i : b) ++seen[i];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_EQ(epoch_batches(37, 8, 5, 2), batches);
  EXPECT_NE(epoch_batches(37, 8, 5, 3), batches);
}

TEST(Batches, TrailingSingletonIsMerged) {
  const auto batches = epoch_batches(9, 4, 0, 0);
  ASSERT_EQ(batches.size(), 2u);
  EXPECT_EQ(batches.back().size(), 5u);
}

TEST(Train, SmallSetLossDecreasesAndRepeats) {
  const ModelConfig c = ModelConfig::tiny();
  VectorPairSource data(toy_pairs(c, 32, 1));
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 8;
  tc.lr0 = 0.1;
  tc.seed = 3;
  const std::vector<float> w(c.num_predicates, 1.0f);
  auto run = [&] {
    Model m(c, VariantSpec{}, 7);
    std::vector<StepRecord> steps;
    TrainResult r = train(data, m, tc, w, [&](const StepRecord& s) { steps.push_back(s); });
    for (const StepRecord& s : steps) {
      EXPECT_TRUE(std::isfinite(s.loss.total));
      EXPECT_EQ(s.loss.total, *s.loss.j1 + s.loss.j2);
    }
    return r;
  };
  const TrainResult a = run();
  ASSERT_EQ(a.history.size(), 10u);
  EXPECT_LT(a.history.back().total, a.history.front().total);
  EXPECT_EQ(a.steps, 40);
  EXPECT_NEAR(a.history[3].lr, 0.01, 1e-12);
  const TrainResult b = run();
  for (std::size_t e = 0; e < a.history.size(); ++e) EXPECT_EQ(a.history[e].total, b.history[e].total);
}

TEST(Train, DivergenceReportsEpochBatchAndRate) {
  const ModelConfig c = ModelConfig::tiny();
  VectorPairSource data(toy_pairs(c, 8, 2));
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 4;
  tc.lr0 = 1e30;
  const std::vector<float> w(c.num_predicates, 1.0f);
  Model m(c, VariantSpec{}, 1);
  try {
    train(data, m, tc, w);
    FAIL() << "expected divergence";
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch"), std::string::npos);
    EXPECT_NE(msg.find("batch"), std::string::npos);
    EXPECT_NE(msg.find("lr"), std::string::npos);
  }
}

TEST(Train, EmptyDatasetIsRejected) {
  const ModelConfig c = ModelConfig::tiny();
  VectorPairSource data({});
  Model m(c, VariantSpec{}, 1);
  const std::vector<float> w(c.num_predicates, 1.0f);
  EXPECT_THROW(train(data, m, TrainConfig{}, w), ArgumentError);
}

TEST(LossCsv, HeaderAndEmptyPriorColumn) {
  std::ostringstream os;
  const std::vector<EpochRecord> h{{0, std::nullopt, 0.5, 0.5, 0.1}, {1, 0.25, 0.5, 0.75, 0.1}};
  write_loss_csv(os, h);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "epoch,j1,j2,total,lr");
  EXPECT_NE(s.find("\n0,,"), std::string::npos);
}

}  // namespace
}  // namespace hoiprime
