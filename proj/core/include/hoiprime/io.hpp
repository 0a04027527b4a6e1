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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hoiprime/evaluation.hpp"
#include "hoiprime/synthetic.hpp"
#include "hoiprime/tensor.hpp"

namespace hoiprime {

// Binary P6 with maxval 255; pixel values are rounded from [0,1].
void write_ppm(const std::filesystem::path& path, const Tensor& image);
Tensor read_ppm(const std::filesystem::path& path);

// One scene per line:
//   {"scene_id", "image", "detections": [{"box", "class", "score", "feature"}],
//    "entities": [{"box", "class"}],
//    "triplets": [{"human", "object", "object_class", "predicate"}],
//    "pairs": [[h, o], ...]}      (pairs only for training scenes)
// Boxes are [x1, y1, x2, y2].
std::string scene_to_json(const SceneRecord& record);
SceneRecord scene_from_json(std::string_view line);

void write_scenes(const std::filesystem::path& path, const std::vector<SceneRecord>& records);
std::vector<SceneRecord> read_scenes(const std::filesystem::path& path);

// {"scene_id", "human", "object", "triplet", "score"} per line.
void write_detections(const std::filesystem::path& path, const std::vector<TripletDetection>& dets);
std::vector<TripletDetection> read_detections(const std::filesystem::path& path);

// {"scene_id", "human", "object", "triplet"} per line.
void write_gt(const std::filesystem::path& path, const std::vector<GtInstance>& gts);
std::vector<GtInstance> read_gt(const std::filesystem::path& path);

// CSV "triplet_id,count".
void write_counts(const std::filesystem::path& path, const std::vector<std::int64_t>& counts);
std::vector<std::int64_t> read_counts(const std::filesystem::path& path);

// CSV "triplet_id,split" with split one of seen / unseen.
void write_split(const std::filesystem::path& path, const ZeroShotSplit& split);
ZeroShotSplit read_split(const std::filesystem::path& path);

// {"dim": d, "vectors": [[...], ...]} indexed by class id.
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

std::string spec_to_json(const SceneSpec& spec);
SceneSpec spec_from_json(std::string_view text);

// Dataset directory layout:
//   spec.json  embeddings.json  counts.csv  train.jsonl  test.jsonl
//   test_gt.jsonl  images/<scene>.ppm
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
// Reads every file above and loads the images into SceneRecord::pixels.
Dataset load_dataset(const std::filesystem::path& dir);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace hoiprime
