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

#include <cstdlib>
#include <filesystem>

#include "hoiprime/config.hpp"
#include "hoiprime/errors.hpp"
#include "hoiprime/io.hpp"

namespace hoiprime {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hoiprime_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

Dataset small_dataset(std::uint64_t seed) {
  DatasetOptions o;
  o.train_scenes = 6;
  o.test_scenes = 4;
  o.noise = DetectorNoise::moderate();
  o.embedding_dim = 8;
  o.feature_dim = 6;
  o.seed = seed;
  o.spec.appearance_predicate = true;
  return generate_dataset(o);
}

using Io = TempDir;

TEST_F(Io, PpmRoundTripsBytes) {
  Tensor img({3, 5, 7});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i % 256) / 255.0f;
  write_ppm(dir_ / "a.ppm", img);
  const Tensor back = read_ppm(dir_ / "a.ppm");
  EXPECT_EQ(back.shape(), img.shape());
  EXPECT_EQ(back.values(), img.values());
}

TEST_F(Io, PpmRejectsOtherFormats) {
  write_text(dir_ / "bad.ppm", "P3\n1 1\n255\n0 0 0\n");
  EXPECT_THROW(read_ppm(dir_ / "bad.ppm"), FormatError);
}

TEST_F(Io, SceneJsonRoundTrip) {
  const Dataset ds = small_dataset(1);
  for (const SceneRecord& r : ds.train) {
    const SceneRecord back = scene_from_json(scene_to_json(r));
    EXPECT_EQ(back.id, r.id);
    EXPECT_EQ(back.image, r.image);
    ASSERT_EQ(back.detections.size(), r.detections.size());
    for (std::size_t i = 0; i < r.detections.size(); ++i) {
      EXPECT_EQ(back.detections[i].box, r.detections[i].box);
      EXPECT_EQ(back.detections[i].score, r.detections[i].score);
      EXPECT_EQ(back.detections[i].feature, r.detections[i].feature);
    }
    EXPECT_EQ(back.gt.triplets.size(), r.gt.triplets.size());
    EXPECT_EQ(back.pairs, r.pairs);
  }
  EXPECT_FALSE(scene_from_json(scene_to_json(ds.test[0])).pairs.has_value());
}

TEST_F(Io, MalformedSceneIsFormatError) {
  EXPECT_THROW(scene_from_json("{\"scene_id\": \"x\"}"), FormatError);
  EXPECT_THROW(scene_from_json("not json"), FormatError);
  write_text(dir_ / "s.jsonl", "{\"scene_id\": 3}\n");
  EXPECT_THROW(read_scenes(dir_ / "s.jsonl"), FormatError);
}

TEST_F(Io, DetectionsGtCountsSplitRoundTrip) {
  const std::vector<TripletDetection> dets{{"a", {1, 2, 3, 4}, {5, 6, 7.5f, 8}, 3, 0.123456789},
                                           {"b", {0, 0, 1, 1}, {2, 2, 3, 3}, 0, 1.0}};
  write_detections(dir_ / "d.jsonl", dets);
  const auto d = read_detections(dir_ / "d.jsonl");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].score, dets[0].score);
  EXPECT_EQ(d[0].object, dets[0].object);

  const std::vector<GtInstance> gts{{"a", {1, 2, 3, 4}, {5, 6, 7, 8}, 2}};
  write_gt(dir_ / "g.jsonl", gts);
  EXPECT_EQ(read_gt(dir_ / "g.jsonl")[0].triplet, 2);

  const std::vector<std::int64_t> counts{0, 4, 12};
  write_counts(dir_ / "c.csv", counts);
  EXPECT_EQ(read_counts(dir_ / "c.csv"), counts);

  const ZeroShotSplit split{{0, 2, 3, 5}, {1, 4}};
  write_split(dir_ / "split.csv", split);
  const ZeroShotSplit back = read_split(dir_ / "split.csv");
  EXPECT_EQ(back.seen, split.seen);
  EXPECT_EQ(back.unseen, split.unseen);
  EXPECT_NO_THROW(check_split(back, 4));
}

TEST_F(Io, CsvHeaderIsChecked) {
  write_text(dir_ / "c.csv", "id,n\n0,1\n");
  EXPECT_THROW(read_counts(dir_ / "c.csv"), FormatError);
  write_text(dir_ / "s.csv", "triplet_id,split\n0,maybe\n");
  EXPECT_THROW(read_split(dir_ / "s.csv"), FormatError);
}

TEST_F(Io, SpecAndEmbeddingsRoundTrip) {
  SceneSpec spec = SceneSpec::desk();
  spec.rare = {{1, 2, 0.05}};
  spec.appearance_predicate = true;
  const SceneSpec back = spec_from_json(spec_to_json(spec));
  EXPECT_EQ(spec_to_json(back), spec_to_json(spec));
  EXPECT_EQ(back.num_predicates(), 7);

  const EmbeddingTable t = make_embeddings(spec.similarity_group, 8);
  write_embeddings(dir_ / "e.json", t);
  const EmbeddingTable e = read_embeddings(dir_ / "e.json");
  EXPECT_EQ(e.dim, 8);
  EXPECT_EQ(e.vectors, t.vectors);
}

TEST_F(Io, DatasetDirectoryRoundTrip) {
  const Dataset ds = small_dataset(3);
  write_dataset(dir_, ds);
  for (const char* f : {"spec.json", "embeddings.json", "counts.csv", "train.jsonl", "test.jsonl", "test_gt.jsonl"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  const Dataset back = load_dataset(dir_);
  ASSERT_EQ(back.train.size(), ds.train.size());
  ASSERT_EQ(back.test.size(), ds.test.size());
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    EXPECT_EQ(back.train[i].pixels.values(), ds.train[i].pixels.values());
    EXPECT_EQ(back.train[i].pairs, ds.train[i].pairs);
  }
  EXPECT_EQ(triplet_counts(back), triplet_counts(ds));
  EXPECT_EQ(read_counts(dir_ / "counts.csv"), triplet_counts(ds));
}

TEST_F(Io, MissingFileIsReported) {
  EXPECT_THROW(read_text(dir_ / "absent.txt"), Error);
  EXPECT_THROW(load_dataset(dir_ / "absent"), Error);
}

TEST(Config, DefaultsValidateAndRoundTrip) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  const RunConfig back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
}

TEST(Config, SectionsAndOverrides) {
  const RunConfig c = RunConfig::from_json(R"({
    "seed": 9,
    "dataset": {"train_scenes": 12, "noise": "none", "rare": [{"predicate": 0, "object_class": 1, "multiplier": 0.1}]},
    "train": {"model": "tiny", "variant": "nl", "epochs": 2, "batch_size": 8},
    "eval": {"score": "p1", "zero_shot": true, "n_unseen": 3}
  })");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.train_scenes, 12);
  EXPECT_EQ(c.test_scenes, 100);
  EXPECT_EQ(c.rare.size(), 1u);
  EXPECT_EQ(c.model, "tiny");
  EXPECT_EQ(c.score, ScoreSource::kLayout);
  EXPECT_EQ(*c.n_unseen, 3);
  EXPECT_EQ(c.train_config().batch_size, 8);
  EXPECT_EQ(c.train_config().seed, c.shuffle_seed());
}

TEST(Config, UnknownKeysAndBadValuesAreRejected) {
  EXPECT_THROW(RunConfig::from_json(R"({"sed": 1})"), ArgumentError);
  EXPECT_THROW(RunConfig::from_json(R"({"train": {"variant": "bogus"}})"), ArgumentError);
  EXPECT_THROW(RunConfig::from_json(R"({"train": {"epochs": "ten"}})"), ArgumentError);
  EXPECT_THROW(RunConfig::from_json(R"({"eval": {"score": "p3"}})"), ArgumentError);
  EXPECT_THROW(RunConfig::from_json(R"({"dataset": {"noise": "heavy"}})"), ArgumentError);
  EXPECT_THROW(RunConfig::from_json(R"({"dataset": {"background_ratio": 0}})"), ArgumentError);
  EXPECT_THROW(RunConfig::from_json("[1, 2"), ArgumentError);
}

TEST(Config, HashIgnoresDirectoriesButNotSettings) {
  RunConfig a, b;
  b.data_dir = "/elsewhere";
  b.out_dir = "/other";
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash_hex().size(), 16u);
  b.seed = 1;
  EXPECT_NE(a.hash(), b.hash());
  b = a;
  b.variant = "np";
  EXPECT_NE(a.hash(), b.hash());
}

TEST(Config, SeedFanOut) {
  RunConfig c;
  c.seed = 5;
  const std::vector<std::uint64_t> seeds{c.dataset_seed(), c.init_seed(), c.shuffle_seed(), c.split_seed()};
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t j = i + 1; j < seeds.size(); ++j) EXPECT_NE(seeds[i], seeds[j]);
  EXPECT_EQ(c.dataset_seed(), derive_seed(5, "dataset"));
}

TEST(Config, PresetsAndModelConfig) {
  EXPECT_EQ(model_preset("full").resolution, 224);
  EXPECT_EQ(model_preset("tiny").resolution, 32);
  EXPECT_THROW(model_preset("huge"), ArgumentError);
  RunConfig c;
  c.appearance_predicate = true;
  const DatasetOptions o = c.dataset_options();
  const ModelConfig m = c.model_config(o.spec, 16, 12);
  EXPECT_EQ(m.num_predicates, 7);
  EXPECT_EQ(m.num_objects, 4);
  EXPECT_EQ(m.embedding_dim, 16);
  EXPECT_EQ(m.det_feature_dim, 12);
}

TEST(Config, WorkerThreadsFromEnvironment) {
  ::unsetenv("HOIPRIME_THREADS");
  EXPECT_EQ(worker_threads(), 1);
  ::setenv("HOIPRIME_THREADS", "4", 1);
  EXPECT_EQ(worker_threads(), 4);
  ::setenv("HOIPRIME_THREADS", "1000", 1);
  EXPECT_EQ(worker_threads(), 64);
  ::setenv("HOIPRIME_THREADS", "zero", 1);
  EXPECT_THROW(worker_threads(), ArgumentError);
  ::unsetenv("HOIPRIME_THREADS");
}

}  // namespace
}  // namespace hoiprime
