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
#include "hoiprime/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <tuple>

#include "hoiprime/errors.hpp"

namespace hoiprime {

// ---------------------------------------------------------------------------
// Spec

SceneSpec SceneSpec::desk() {
  SceneSpec s;
  s.classes = {{"person", ShapeKind::kRect, {0.95f, 0.78f, 0.62f}},
               {"disc", ShapeKind::kEllipse, {0.90f, 0.25f, 0.20f}},
               {"block", ShapeKind::kRect, {0.20f, 0.40f, 0.95f}},
               {"wedge", ShapeKind::kTriangle, {0.25f, 0.85f, 0.30f}}};
  s.similarity_group = {0, 1, 2, 2};
  //              person  disc   block  wedge
  s.allowed[kHold] = {false, true, true, false};
  s.allowed[kRide] = {false, false, true, true};
  s.allowed[kSitOn] = {false, true, false, true};
  s.allowed[kCarryAbove] = {false, true, true, true};
  s.allowed[kNextTo] = {false, true, true, true};
  s.allowed[kInside] = {false, false, true, true};
  return s;
}

double SceneSpec::multiplier(int predicate, int object_class) const {
  double m = 1.0;
  for (const RareRule& r : rare) {
    if (r.predicate == predicate && r.object_class == object_class) m *= r.multiplier;
  }
  return m;
}

void SceneSpec::validate() const {
  if (image_size < 32) throw ArgumentError("scene spec: image_size must be at least 32");
  const int o = num_objects();
  if (o < 2) throw ArgumentError("scene spec: need the person class and at least one object class");
  if (static_cast<int>(similarity_group.size()) != o) {
    throw ArgumentError("scene spec: similarity_group must list one group per class");
  }
  for (const auto& row : allowed) {
    if (static_cast<int>(row.size()) != o) {
      throw ArgumentError("scene spec: allowed table must have one entry per class");
    }
  }
  bool any_allowed = false;
  for (const auto& row : allowed) {
    for (int c = 1; c < o; ++c) any_allowed = any_allowed || row[c];
  }
  if (!any_allowed) throw ArgumentError("scene spec: no predicate is allowed for any object class");
  for (const RareRule& r : rare) {
    if (r.predicate < 0 || r.predicate >= kLayoutPredicates || r.object_class < 0 ||
        r.object_class >= o || !(r.multiplier >= 0.0)) {
      throw ArgumentError("scene spec: invalid rare rule");
    }
  }
  auto rate = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError(std::string("scene spec: ") + what + " must lie in [0,1]");
  };
  rate(bright_rate, "bright_rate");
  rate(negative_rate, "negative_rate");
  if (min_humans < 1 || max_humans < min_humans || min_objects < 0 || max_objects < min_objects) {
    throw ArgumentError("scene spec: invalid human/object count range");
  }
}

std::vector<std::string> predicate_names(const SceneSpec& spec) {
  std::vector<std::string> names = {"hold", "ride", "sit_on", "carry_above", "next_to", "inside"};
  if (spec.appearance_predicate) names.push_back("inspect");
  return names;
}

// ---------------------------------------------------------------------------
// Layout rule

namespace {

std::optional<int> layout_region(const BoxF& h, const BoxF& o) {
  const double hw = h.width(), hh = h.height();
  if (o.contains(h) && o.area() > h.area()) return kInside;
  if (o.cx() > h.x1 && o.cx() < h.x2 && o.cy() > h.y1 && o.cy() < h.y2 &&
      o.area() < 0.3 * h.area()) {
    return kHold;
  }
  const bool overlap_x = std::abs(o.cx() - h.cx()) < 0.5 * hw;
  if (overlap_x && o.cy() > h.y2 && o.y1 <= h.y2 + 0.1 * hh) {
    if (o.width() >= 1.5 * hw) return kRide;
    if (o.width() <= 1.2 * hw) return kSitOn;
    return std::nullopt;
  }
  if (overlap_x && o.cy() < h.y1 && o.y2 >= h.y1 - 0.1 * hh) return kCarryAbove;
  const double gap_x = std::max(o.x1 - h.x2, h.x1 - o.x2);
  if (gap_x >= 0.0 && gap_x <= 0.5 * hw && std::abs(o.cy() - h.cy()) < 0.35 * hh) return kNextTo;
  return std::nullopt;
}

}  // namespace

std::optional<int> predicate_of(const SceneSpec& spec, const BoxF& human, const BoxF& object,
                                int object_class) {
  if (object_class < 0 || object_class >= spec.num_objects()) {
    throw ArgumentError("predicate_of: object class " + std::to_string(object_class) + " out of range");
  }
  const auto region = layout_region(human, object);
  if (!region || !spec.allowed[*region][object_class]) return std::nullopt;
  return region;
}

// ---------------------------------------------------------------------------
// Scene generation

namespace {

constexpr int kAttempts = 60;
constexpr float kMargin = 1.0f;

BoxF shifted(const BoxF& b, float dx, float dy, float grow) {
  return BoxF{b.x1 + dx - grow, b.y1 + dy - grow, b.x2 + dx + grow, b.y2 + dy + grow};
}

bool in_image(const BoxF& b, int size) {
  return b.valid() && b.x1 >= 0.0f && b.y1 >= 0.0f && b.x2 <= size && b.y2 <= size;
}

// The rule gives `expected` for the box and for every one-pixel shift or
// resize of it.
bool robust(const SceneSpec& spec, const BoxF& human, const BoxF& object, int cls,
            std::optional<int> expected) {
  const std::array<std::array<float, 3>, 9> moves = {{{0, 0, 0},
                                                      {kMargin, 0, 0},
                                                      {-kMargin, 0, 0},
                                                      {0, kMargin, 0},
                                                      {0, -kMargin, 0},
                                                      {0, 0, kMargin},
                                                      {0, 0, -kMargin},
                                                      {kMargin, kMargin, 0},
                                                      {-kMargin, -kMargin, 0}}};
  for (const auto& m : moves) {
    const BoxF b = shifted(object, m[0], m[1], m[2]);
    if (!b.valid()) return false;
    if (predicate_of(spec, human, b, cls) != expected) return false;
  }
  return true;
}

// Clear of every rule region around this human, with room to spare.
bool far_from(const BoxF& human, const BoxF& b) {
  const float px = 0.6f * human.width(), py = 0.4f * human.height();
  const BoxF grown{b.x1 - px, b.y1 - py, b.x2 + px, b.y2 + py};
  return iou(grown, human) == 0.0;
}

BoxF sample_for(int predicate, const BoxF& h, Rng& rng) {
  const double hw = h.width(), hh = h.height();
  auto box_at = [](double cx, double cy, double w, double ht) {
    return BoxF{static_cast<float>(cx - w / 2), static_cast<float>(cy - ht / 2),
                static_cast<float>(cx + w / 2), static_cast<float>(cy + ht / 2)};
  };
  switch (predicate) {
    case kHold: {
      const double w = rng.uniform(3.0, 0.45 * hw), ht = rng.uniform(3.0, 0.45 * hw);
      return box_at(rng.uniform(h.x1 + 1.5, h.x2 - 1.5), rng.uniform(h.y1 + 2.0, h.y2 - 2.0), w, ht);
    }
    case kRide:
    case kSitOn: {
      const double w = predicate == kRide ? rng.uniform(1.7, 2.4) * hw : rng.uniform(0.6, 1.0) * hw;
      const double ht = rng.uniform(0.4, 0.7) * hh;
      const double top = h.y2 + rng.uniform(-0.35 * ht, 0.05 * hh);
      return box_at(h.cx() + rng.uniform(-0.3, 0.3) * hw, top + ht / 2, w, ht);
    }
    case kCarryAbove: {
      const double w = rng.uniform(0.6, 1.4) * hw, ht = rng.uniform(0.2, 0.4) * hh;
      const double bottom = h.y1 + rng.uniform(-0.05 * hh, 0.35 * ht);
      return box_at(h.cx() + rng.uniform(-0.3, 0.3) * hw, bottom - ht / 2, w, ht);
    }
    case kNextTo: {
      const double w = rng.uniform(0.5, 1.2) * hw, ht = rng.uniform(0.3, 0.7) * hh;
      const double gap = rng.uniform(0.1, 0.4) * hw;
      const double cx = rng.bernoulli(0.5) ? h.x2 + gap + w / 2 : h.x1 - gap - w / 2;
      return box_at(cx, h.cy() + rng.uniform(-0.25, 0.25) * hh, w, ht);
    }
    case kInside:
      return BoxF{h.x1 - static_cast<float>(rng.uniform(2, 6)), h.y1 - static_cast<float>(rng.uniform(2, 6)),
                  h.x2 + static_cast<float>(rng.uniform(2, 6)), h.y2 + static_cast<float>(rng.uniform(2, 6))};
    default:
      throw ArgumentError("sample_for: unknown predicate");
  }
}

bool inside_shape(ShapeKind shape, const BoxF& b, float px, float py) {
  if (px < b.x1 || px > b.x2 || py < b.y1 || py > b.y2) return false;
  const float hw = 0.5f * b.width(), hh = 0.5f * b.height();
  const float dx = (px - b.cx()) / hw, dy = (py - b.cy()) / hh;
  switch (shape) {
    case ShapeKind::kRect: return true;
    case ShapeKind::kEllipse: return dx * dx + dy * dy <= 1.0f;
    case ShapeKind::kDiamond: return std::abs(dx) + std::abs(dy) <= 1.0f;
    case ShapeKind::kTriangle: return std::abs(dx) <= (py - b.y1) / b.height();
  }
  return false;
}

Tensor render(const SceneSpec& spec, const std::vector<SceneObject>& objects) {
  const int s = spec.image_size;
  Tensor image({3, s, s}, 0.42f);
  std::vector<std::size_t> order(objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return objects[a].box.area() > objects[b].box.area();
  });
  for (std::size_t k : order) {
    const SceneObject& ob = objects[k];
    const ClassStyle& style = spec.classes[ob.class_id];
    const float tint = (ob.class_id == kHumanClass || ob.bright) ? 1.0f : 0.45f;
    const int x0 = std::max(0, static_cast<int>(std::floor(ob.box.x1)));
    const int x1 = std::min(s, static_cast<int>(std::ceil(ob.box.x2)));
    const int y0 = std::max(0, static_cast<int>(std::floor(ob.box.y1)));
    const int y1 = std::min(s, static_cast<int>(std::ceil(ob.box.y2)));
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        if (!inside_shape(style.shape, ob.box, x + 0.5f, y + 0.5f)) continue;
        for (int c = 0; c < 3; ++c) image[(static_cast<std::size_t>(c) * s + y) * s + x] = style.color[c] * tint;
      }
    }
  }
  for (float& v : image.data()) v = std::round(v * 255.0f) / 255.0f;
  return image;
}

int pick_predicate(const SceneSpec& spec, int cls, Rng& rng) {
  std::vector<double> w(kLayoutPredicates, 0.0);
  double total = 0.0;
  for (int p = 0; p < kLayoutPredicates; ++p) {
    if (spec.allowed[p][cls]) w[p] = spec.multiplier(p, cls);
    total += w[p];
  }
  if (total <= 0.0) return -1;
  double u = rng.uniform(0.0, total);
  for (int p = 0; p < kLayoutPredicates; ++p) {
    if (u < w[p]) return p;
    u -= w[p];
  }
  for (int p = kLayoutPredicates - 1; p >= 0; --p) {
    if (w[p] > 0.0) return p;
  }
  return -1;
}

}  // namespace

Scene generate_scene(Rng& rng, const SceneSpec& spec, std::string id) {
  spec.validate();
  Scene scene;
  scene.id = std::move(id);
  const int s = spec.image_size;
  const int num_humans = rng.uniform_int(spec.min_humans, spec.max_humans);
  std::vector<BoxF> humans;
  for (int i = 0; i < num_humans; ++i) {
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      const double hw = rng.uniform(8.0, 12.0), hh = rng.uniform(18.0, 26.0);
      const double x = rng.uniform(2.0, s - 2.0 - hw), y = rng.uniform(2.0, s - 2.0 - hh);
      const BoxF b{static_cast<float>(x), static_cast<float>(y), static_cast<float>(x + hw),
                   static_cast<float>(y + hh)};
      bool ok = true;
      for (const BoxF& other : humans) ok = ok && far_from(other, b) && far_from(b, other);
      if (ok) {
        humans.push_back(b);
        break;
      }
    }
  }
  for (const BoxF& h : humans) scene.objects.push_back({h, kHumanClass, true});

  const int num_objects = rng.uniform_int(spec.min_objects, spec.max_objects);
  auto place_object = [&] {
    const int cls = rng.uniform_int(1, spec.num_objects() - 1);
    const bool bright = rng.bernoulli(spec.bright_rate);
    const bool negative = rng.bernoulli(spec.negative_rate);
    const int target = rng.uniform_int(0, static_cast<int>(humans.size()) - 1);
    const int predicate = negative ? -1 : pick_predicate(spec, cls, rng);
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      BoxF b;
      if (predicate < 0) {
        const double w = rng.uniform(5.0, 16.0), ht = rng.uniform(5.0, 18.0);
        const double x = rng.uniform(0.0, s - w), y = rng.uniform(0.0, s - ht);
        b = BoxF{static_cast<float>(x), static_cast<float>(y), static_cast<float>(x + w),
                 static_cast<float>(y + ht)};
      } else {
        b = sample_for(predicate, humans[target], rng);
      }
      if (!in_image(b, s)) continue;
      bool ok = true;
      for (std::size_t h = 0; h < humans.size() && ok; ++h) {
        if (predicate >= 0 && static_cast<int>(h) == target) {
          ok = robust(spec, humans[h], b, cls, predicate);
        } else {
          ok = far_from(humans[h], b);
        }
      }
      if (ok) {
        scene.objects.push_back({b, cls, bright});
        return;
      }
    }
  };
  for (int i = 0; i < num_objects; ++i) place_object();
  // Crowded scenes can reject every sample; top up to the minimum.
  for (int extra = 0; extra < 100 && static_cast<int>(scene.objects.size() - humans.size()) < spec.min_objects;
       ++extra) {
    place_object();
  }
  if (static_cast<int>(scene.objects.size() - humans.size()) < spec.min_objects) {
    throw ConstraintError("scene " + scene.id + ": could not place " + std::to_string(spec.min_objects) +
                          " objects");
  }

  scene.image = render(spec, scene.objects);
  for (const SceneObject& ob : scene.objects) scene.gt.entities.push_back({ob.box, ob.class_id});
  for (std::size_t h = 0; h < humans.size(); ++h) {
    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
      if (o == h) continue;
      const SceneObject& ob = scene.objects[o];
      const auto p = predicate_of(spec, humans[h], ob.box, ob.class_id);
      if (!p) continue;
      scene.gt.triplets.push_back({humans[h], ob.box, ob.class_id, *p});
      if (spec.appearance_predicate && ob.bright) {
        scene.gt.triplets.push_back({humans[h], ob.box, ob.class_id, kLayoutPredicates});
      }
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Detector

DetectorNoise DetectorNoise::moderate() {
  DetectorNoise n;
  n.jitter = 0.03;
  n.score_noise = 0.03;
  n.miss_rate = 0.03;
  n.fp_rate = 0.3;
  n.fp_score_min = 0.5;
  n.feature_noise = 0.3;
  return n;
}

void DetectorNoise::validate() const {
  if (!(miss_rate >= 0.0 && miss_rate <= 1.0) || !(fp_score_min >= 0.0 && fp_score_min <= 1.0)) {
    throw ArgumentError("detector noise: rates must lie in [0,1]");
  }
  if (!(jitter >= 0.0) || !(score_noise >= 0.0) || !(fp_rate >= 0.0) || !(feature_noise >= 0.0)) {
    throw ArgumentError("detector noise: parameters must be non-negative");
  }
}

std::vector<std::vector<float>> class_features(int num_classes, int dim) {
  if (num_classes <= 0 || dim <= 0) throw ArgumentError("class_features: sizes must be positive");
  std::vector<std::vector<float>> rows(num_classes, std::vector<float>(dim));
  for (int c = 0; c < num_classes; ++c) {
    Rng rng(derive_seed(fnv1a64("detector-feature"), static_cast<std::uint64_t>(c)));
    double norm = 0.0;
    std::vector<double> v(dim);
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (int i = 0; i < dim; ++i) rows[c][i] = static_cast<float>(v[i] / norm);
  }
  return rows;
}

std::vector<Detection> simulate_detector(const Scene& scene, const DetectorNoise& noise,
                                         const std::vector<std::vector<float>>& features,
                                         Rng& rng) {
  noise.validate();
  const float s = static_cast<float>(scene.image.dim(1));
  auto feature_for = [&](int cls) {
    std::vector<float> f = features.at(cls);
    if (noise.feature_noise > 0.0) {
      for (float& v : f) v += static_cast<float>(rng.normal(0.0, noise.feature_noise));
    }
    return f;
  };
  auto clamp_box = [&](BoxF b) {
    b.x1 = std::clamp(b.x1, 0.0f, s - 1.0f);
    b.y1 = std::clamp(b.y1, 0.0f, s - 1.0f);
    b.x2 = std::clamp(b.x2, b.x1 + 1.0f, s);
    b.y2 = std::clamp(b.y2, b.y1 + 1.0f, s);
    return b;
  };
  std::vector<Detection> dets;
  for (const SceneObject& ob : scene.objects) {
    if (noise.miss_rate > 0.0 && rng.bernoulli(noise.miss_rate)) continue;
    Detection d;
    d.class_id = ob.class_id;
    d.box = ob.box;
    if (noise.jitter > 0.0) {
      const double sw = noise.jitter * ob.box.width(), sh = noise.jitter * ob.box.height();
      d.box.x1 += static_cast<float>(rng.normal(0.0, sw));
      d.box.x2 += static_cast<float>(rng.normal(0.0, sw));
      d.box.y1 += static_cast<float>(rng.normal(0.0, sh));
      d.box.y2 += static_cast<float>(rng.normal(0.0, sh));
      d.box = clamp_box(d.box);
    }
    d.score = noise.score_noise > 0.0
                  ? static_cast<float>(std::clamp(1.0 - std::abs(rng.normal(0.0, noise.score_noise)), 0.0, 1.0))
                  : 1.0f;
    d.feature = feature_for(ob.class_id);
    dets.push_back(std::move(d));
  }
  if (noise.fp_rate > 0.0) {
    const int fps = std::poisson_distribution<int>(noise.fp_rate)(rng.engine());
    for (int i = 0; i < fps; ++i) {
      Detection d;
      d.class_id = rng.uniform_int(0, static_cast<int>(features.size()) - 1);
      const double w = rng.uniform(4.0, 20.0), h = rng.uniform(4.0, 24.0);
      const double x = rng.uniform(0.0, s - w), y = rng.uniform(0.0, s - h);
      d.box = clamp_box(BoxF{static_cast<float>(x), static_cast<float>(y), static_cast<float>(x + w),
                             static_cast<float>(y + h)});
      d.score = static_cast<float>(rng.uniform(noise.fp_score_min, 1.0));
      d.feature = feature_for(d.class_id);
      dets.push_back(std::move(d));
    }
  }
  return dets;
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingTable make_embeddings(std::span<const int> groups, int dim) {
  const int classes = static_cast<int>(groups.size());
  if (classes == 0) throw ArgumentError("make_embeddings: no classes");
  int num_groups = 0;
  for (int g : groups) {
    if (g < 0) throw ArgumentError("make_embeddings: negative group id");
    num_groups = std::max(num_groups, g + 1);
  }
  if (dim < num_groups + classes) {
    throw ArgumentError("make_embeddings: dim " + std::to_string(dim) + " cannot hold " +
                        std::to_string(num_groups + classes) + " orthogonal directions");
  }
  // Gram-Schmidt over seeded Gaussian draws: group bases, then one private
  // direction per class.
  std::vector<std::vector<double>> basis;
  for (int k = 0; k < num_groups + classes; ++k) {
    Rng rng(derive_seed(fnv1a64("embedding"), static_cast<std::uint64_t>(k)));
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    for (const auto& b : basis) {
      const double d = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (int i = 0; i < dim; ++i) v[i] -= d * b[i];
    }
    const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& x : v) x /= n;
    basis.push_back(std::move(v));
  }
  const double shared = std::sqrt(0.9), own = std::sqrt(0.1);
  EmbeddingTable table;
  table.dim = dim;
  for (int c = 0; c < classes; ++c) {
    std::vector<float> e(dim);
    for (int i = 0; i < dim; ++i) {
      e[i] = static_cast<float>(shared * basis[groups[c]][i] + own * basis[num_groups + c][i]);
    }
    table.vectors.push_back(std::move(e));
  }
  return table;
}

std::vector<float> pseudo_embedding(int class_id, int dim, std::span<const int> groups) {
  const EmbeddingTable t = make_embeddings(groups, dim);
  const auto v = t.at(class_id);
  return {v.begin(), v.end()};
}

// ---------------------------------------------------------------------------
// Dataset

Dataset generate_dataset(const DatasetOptions& options) {
  options.spec.validate();
  options.noise.validate();
  if (options.train_scenes < 0 || options.test_scenes < 0) {
    throw ArgumentError("dataset: scene counts must be non-negative");
  }
  if (options.background_ratio && !(*options.background_ratio > 0.0)) {
    throw ArgumentError("dataset: background_ratio must be positive");
  }
  Dataset ds;
  ds.spec = options.spec;
  ds.embeddings = make_embeddings(options.spec.similarity_group, options.embedding_dim);
  const auto features = class_features(options.spec.num_objects(), options.feature_dim);
  auto make_split = [&](const char* split, int count, std::vector<SceneRecord>& out) {
    const std::uint64_t split_seed = derive_seed(options.seed, split);
    for (int i = 0; i < count; ++i) {
      const std::uint64_t scene_seed = derive_seed(split_seed, static_cast<std::uint64_t>(i));
      char id[64];
      std::snprintf(id, sizeof id, "%s_%06d", split, i);
      Rng scene_rng(scene_seed);
      Scene scene = generate_scene(scene_rng, options.spec, id);
      Rng det_rng(derive_seed(scene_seed, "detector"));
      SceneRecord rec;
      rec.id = scene.id;
      rec.image = std::string("images/") + id + ".ppm";
      rec.detections = simulate_detector(scene, options.noise, features, det_rng);
      rec.pixels = std::move(scene.image);
      rec.gt = std::move(scene.gt);
      out.push_back(std::move(rec));
    }
  };
  make_split("train", options.train_scenes, ds.train);
  make_split("test", options.test_scenes, ds.test);

  const int p = options.spec.num_predicates();
  struct Ref {
    std::size_t scene;
    std::pair<int, int> pair;
  };
  std::vector<Ref> positives, negatives;
  for (std::size_t s = 0; s < ds.train.size(); ++s) {
    const SceneRecord& r = ds.train[s];
    for (auto pr : training_pair_indices(r.detections, r.gt)) {
      const auto t = label_pair(r.detections[pr.first], r.detections[pr.second], r.gt.triplets, p);
      const bool pos = std::any_of(t.begin(), t.end(), [](float v) { return v > 0.5f; });
      (pos ? positives : negatives).push_back({s, pr});
    }
  }
  if (options.background_ratio) {
    const auto cap = static_cast<std::size_t>(std::floor(*options.background_ratio * positives.size()));
    if (negatives.size() > cap) {
      Rng rng(derive_seed(options.seed, "background"));
      std::shuffle(negatives.begin(), negatives.end(), rng.engine());
      negatives.resize(cap);
    }
  }
  for (SceneRecord& r : ds.train) r.pairs.emplace();
  std::vector<Ref> kept = positives;
  kept.insert(kept.end(), negatives.begin(), negatives.end());
  std::stable_sort(kept.begin(), kept.end(), [](const Ref& a, const Ref& b) {
    return std::tie(a.scene, a.pair) < std::tie(b.scene, b.pair);
  });
  for (const Ref& k : kept) ds.train[k.scene].pairs->push_back(k.pair);
  return ds;
}

namespace {

template <typename Fn>
void for_each_training_target(const Dataset& ds, Fn&& fn) {
  const int p = ds.spec.num_predicates();
  for (const SceneRecord& r : ds.train) {
    const auto pairs = r.pairs ? *r.pairs : training_pair_indices(r.detections, r.gt);
    for (auto [h, o] : pairs) {
      fn(r.detections[o].class_id, label_pair(r.detections[h], r.detections[o], r.gt.triplets, p));
    }
  }
}

}  // namespace

std::vector<std::int64_t> triplet_counts(const Dataset& dataset) {
  const int o = dataset.spec.num_objects();
  std::vector<std::int64_t> counts(static_cast<std::size_t>(dataset.spec.num_predicates()) * o, 0);
  for_each_training_target(dataset, [&](int cls, const std::vector<float>& t) {
    for (std::size_t p = 0; p < t.size(); ++p) {
      if (t[p] > 0.5f) ++counts[p * o + cls];
    }
  });
  return counts;
}

std::vector<std::int64_t> predicate_counts(const Dataset& dataset) {
  std::vector<std::int64_t> counts(dataset.spec.num_predicates(), 0);
  for_each_training_target(dataset, [&](int, const std::vector<float>& t) {
    for (std::size_t p = 0; p < t.size(); ++p) {
      if (t[p] > 0.5f) ++counts[p];
    }
  });
  return counts;
}

}  // namespace hoiprime
