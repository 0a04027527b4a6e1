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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hoiprime/geometry.hpp"
#include "hoiprime/pairing.hpp"
#include "hoiprime/rng.hpp"
#include "hoiprime/tensor.hpp"

namespace hoiprime {

enum class ShapeKind { kRect, kEllipse, kTriangle, kDiamond };

struct ClassStyle {
  std::string name;
  ShapeKind shape = ShapeKind::kRect;
  std::array<float, 3> color = {1.0f, 1.0f, 1.0f};
};

// Fixed layout predicates. Each is a region of (human box, object box)
// space; the class table decides which object classes may take it.
enum LayoutPredicate : int {
  kHold = 0,        // small object centred inside the human box
  kRide = 1,        // wide object under the human
  kSitOn = 2,       // narrow object under the human
  kCarryAbove = 3,  // object resting on top of the human
  kNextTo = 4,      // object beside the human, small gap
  kInside = 5,      // object encloses the human
};
inline constexpr int kLayoutPredicates = 6;

struct RareRule {
  int predicate = 0;
  int object_class = 0;
  double multiplier = 1.0;
};

struct SceneSpec {
  int image_size = 64;
  std::vector<ClassStyle> classes;              // index 0 is the person class
  std::vector<int> similarity_group;            // per class, for embeddings
  // allowed[p][c]: object class c may take layout predicate p.
  std::array<std::vector<bool>, kLayoutPredicates> allowed;
  // Adds predicate index 6, set for interacting pairs whose object is
  // rendered with the bright tint. Invisible to the layout alone.
  bool appearance_predicate = false;
  double bright_rate = 0.5;
  std::vector<RareRule> rare;
  double negative_rate = 0.25;  // chance an object is placed far from everyone
  int min_humans = 1;
  int max_humans = 3;
  int min_objects = 1;
  int max_objects = 4;

  // Four classes (person, disc, block, wedge), six layout predicates.
  static SceneSpec desk();

  int num_objects() const { return static_cast<int>(classes.size()); }
  int num_predicates() const { return kLayoutPredicates + (appearance_predicate ? 1 : 0); }
  double multiplier(int predicate, int object_class) const;
  void validate() const;
};

std::vector<std::string> predicate_names(const SceneSpec& spec);

// The layout rule: a total function of the two boxes and the object class.
// Returns the layout predicate or nullopt for no interaction.
std::optional<int> predicate_of(const SceneSpec& spec, const BoxF& human, const BoxF& object,
                                int object_class);

struct SceneObject {
  BoxF box;
  int class_id = 0;
  bool bright = false;
};

struct Scene {
  std::string id;
  Tensor image;                      // [3, S, S], values k/255
  std::vector<SceneObject> objects;  // humans first
  SceneGt gt;
};

// Humans, then objects placed by sampling a target predicate's region
// (rejecting samples within a pixel of another rule's boundary), or far
// from every human. GT triplets are predicate_of over every human-object
// pair, so labels agree with the rule by construction.
Scene generate_scene(Rng& rng, const SceneSpec& spec, std::string id);

struct DetectorNoise {
  double jitter = 0.0;        // coordinate stddev, fraction of box size
  double score_noise = 0.0;   // true-positive score = 1 - |N(0, score_noise)|
  double miss_rate = 0.0;
  double fp_rate = 0.0;       // expected false positives per scene
  double fp_score_min = 0.5;  // false-positive scores ~ U(fp_score_min, 1)
  double feature_noise = 0.0;

  static DetectorNoise none() { return {}; }
  static DetectorNoise moderate();
  void validate() const;
};

// Class-conditioned unit feature vectors of width dim (rows by class).
std::vector<std::vector<float>> class_features(int num_classes, int dim);

std::vector<Detection> simulate_detector(const Scene& scene, const DetectorNoise& noise,
                                         const std::vector<std::vector<float>>& features,
                                         Rng& rng);

// Unit vectors built from an orthonormal set: classes in the same group
// share a component giving cosine 0.9, other pairs are orthogonal.
EmbeddingTable make_embeddings(std::span<const int> groups, int dim);
std::vector<float> pseudo_embedding(int class_id, int dim, std::span<const int> groups);

struct DatasetOptions {
  SceneSpec spec = SceneSpec::desk();
  DetectorNoise noise;
  int train_scenes = 100;
  int test_scenes = 50;
  int embedding_dim = 32;
  int feature_dim = 32;
  std::optional<double> background_ratio;  // negatives <= ratio x positives
  std::uint64_t seed = 0;
};

struct SceneRecord {
  std::string id;
  std::string image;  // path relative to the dataset root
  Tensor pixels;      // loaded or generated image
  std::vector<Detection> detections;
  SceneGt gt;
  // Training pairs as (human, object) detection indices; absent for test.
  std::optional<std::vector<std::pair<int, int>>> pairs;
};

struct Dataset {
  SceneSpec spec;
  EmbeddingTable embeddings;
  std::vector<SceneRecord> train;
  std::vector<SceneRecord> test;
};

Dataset generate_dataset(const DatasetOptions& options);

// GT triplet counts in the training pairs, indexed predicate * O + object.
std::vector<std::int64_t> triplet_counts(const Dataset& dataset);
// Positive count per predicate over the training pairs.
std::vector<std::int64_t> predicate_counts(const Dataset& dataset);

}  // namespace hoiprime
