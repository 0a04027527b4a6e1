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
#include "hoiprime/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hoiprime/errors.hpp"
#include "hoiprime/rng.hpp"

namespace hoiprime {

MatchResult match_class(std::span<const TripletDetection> dets, std::span<const GtInstance> gts,
                        double iou_min) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::map<std::string, std::vector<std::size_t>> by_scene;
  for (std::size_t g = 0; g < gts.size(); ++g) by_scene[gts[g].scene_id].push_back(g);
  std::vector<bool> used(gts.size(), false);
  MatchResult out;
  out.n_gt = static_cast<int>(gts.size());
  out.tp.reserve(dets.size());
  for (std::size_t i : order) {
    const TripletDetection& d = dets[i];
    std::ptrdiff_t best = -1;
    double best_quality = -1.0;
    auto it = by_scene.find(d.scene_id);
    if (it != by_scene.end()) {
      for (std::size_t g : it->second) {
        if (used[g]) continue;
        const double ih = iou(d.human, gts[g].human);
        const double io = iou(d.object, gts[g].object);
        if (!(ih > iou_min && io > iou_min)) continue;
        const double quality = std::min(ih, io);
        if (quality > best_quality) {
          best_quality = quality;
          best = static_cast<std::ptrdiff_t>(g);
        }
      }
    }
    if (best >= 0) used[best] = true;
    out.tp.push_back(best >= 0);
  }
  return out;
}

std::optional<double> average_precision(const std::vector<bool>& tp, int n_gt) {
  if (n_gt < 0) throw ArgumentError("average_precision: negative GT count");
  if (n_gt == 0) return std::nullopt;
  const std::size_t n = tp.size();
  std::vector<double> precision(n);
  int hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    hits += tp[i] ? 1 : 0;
    precision[i] = static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (tp[i]) ap += precision[i];
  }
  return ap / n_gt;
}

std::vector<std::optional<double>> per_class_ap(std::span<const TripletDetection> dets,
                                                std::span<const GtInstance> gts, int num_classes,
                                                double iou_min) {
  std::vector<std::vector<TripletDetection>> d(num_classes);
  std::vector<std::vector<GtInstance>> g(num_classes);
  for (const TripletDetection& t : dets) {
    if (t.triplet < 0 || t.triplet >= num_classes) {
      throw ArgumentError("per_class_ap: detection triplet " + std::to_string(t.triplet) + " out of range");
    }
    d[t.triplet].push_back(t);
  }
  for (const GtInstance& t : gts) {
    if (t.triplet < 0 || t.triplet >= num_classes) {
      throw ArgumentError("per_class_ap: GT triplet " + std::to_string(t.triplet) + " out of range");
    }
    g[t.triplet].push_back(t);
  }
  std::vector<std::optional<double>> ap(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    if (g[c].empty()) continue;
    const MatchResult m = match_class(d[c], g[c], iou_min);
    ap[c] = average_precision(m.tp, m.n_gt);
  }
  return ap;
}

namespace {

std::optional<double> mean_of(const std::vector<std::optional<double>>& ap,
                              const std::vector<bool>& member) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t c = 0; c < ap.size(); ++c) {
    if (!ap[c] || !member[c]) continue;
    sum += *ap[c];
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

EvalReport finish(EvalMode mode, std::vector<std::optional<double>> ap,
                  std::vector<std::int64_t> gt_counts, std::vector<std::int64_t> train_counts,
                  std::vector<bool> second) {
  if (gt_counts.size() != ap.size() || train_counts.size() != ap.size() ||
      second.size() != ap.size()) {
    throw ArgumentError("aggregate: per-class vectors differ in length");
  }
  EvalReport r;
  r.mode = mode;
  std::vector<bool> all(ap.size(), true), first(ap.size());
  for (std::size_t c = 0; c < ap.size(); ++c) first[c] = !second[c];
  r.map_full = mean_of(ap, all);
  r.map_rare = mean_of(ap, second);
  r.map_nonrare = mean_of(ap, first);
  r.ap = std::move(ap);
  r.gt_counts = std::move(gt_counts);
  r.train_counts = std::move(train_counts);
  r.in_second_split = std::move(second);
  return r;
}

std::string fmt(std::optional<double> v, int digits = 2) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, 100.0 * *v);
  return buf;
}

}  // namespace

EvalReport aggregate(std::vector<std::optional<double>> ap, std::vector<std::int64_t> gt_counts,
                     std::vector<std::int64_t> train_counts, int rare_threshold) {
  std::vector<bool> rare(ap.size());
  for (std::size_t c = 0; c < ap.size() && c < train_counts.size(); ++c) {
    rare[c] = train_counts[c] < rare_threshold;
  }
  return finish(EvalMode::kDefault, std::move(ap), std::move(gt_counts), std::move(train_counts),
                std::move(rare));
}

EvalReport aggregate_zero_shot(std::vector<std::optional<double>> ap,
                               std::vector<std::int64_t> gt_counts,
                               std::vector<std::int64_t> train_counts,
                               const std::vector<bool>& unseen) {
  return finish(EvalMode::kZeroShot, std::move(ap), std::move(gt_counts), std::move(train_counts),
                unseen);
}

std::string report_json(const EvalReport& r, const std::vector<std::string>& class_names) {
  using nlohmann::ordered_json;
  auto opt = [](std::optional<double> v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json j;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["mode"] = r.mode == EvalMode::kZeroShot ? "zero-shot" : "default";
  j["interpolation"] = "all-point";
  if (r.mode == EvalMode::kZeroShot) {
    j["map_unseen"] = opt(r.map_unseen());
    j["map_seen"] = opt(r.map_seen());
    j["map_all"] = opt(r.map_all());
  } else {
    j["map_full"] = opt(r.map_full);
    j["map_rare"] = opt(r.map_rare);
    j["map_nonrare"] = opt(r.map_nonrare);
  }
  ordered_json classes = ordered_json::array();
  for (std::size_t c = 0; c < r.ap.size(); ++c) {
    ordered_json e;
    e["triplet"] = c;
    if (c < class_names.size()) e["name"] = class_names[c];
    e["ap"] = opt(r.ap[c]);
    e["gt"] = r.gt_counts[c];
    e["train"] = r.train_counts[c];
    e[r.mode == EvalMode::kZeroShot ? "unseen" : "rare"] = static_cast<bool>(r.in_second_split[c]);
    classes.push_back(std::move(e));
  }
  j["classes"] = std::move(classes);
  return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& r) {
  std::ostringstream os;
  char buf[128];
  if (r.mode == EvalMode::kZeroShot) {
    std::snprintf(buf, sizeof buf, "%-10s %-10s %-10s\n", "Unseen", "Seen", "All");
    os << buf;
    std::snprintf(buf, sizeof buf, "%-10s %-10s %-10s\n", fmt(r.map_unseen()).c_str(),
                  fmt(r.map_seen()).c_str(), fmt(r.map_all()).c_str());
  } else {
    std::snprintf(buf, sizeof buf, "%-10s %-10s %-10s\n", "Full", "Rare", "Non-rare");
    os << buf;
    std::snprintf(buf, sizeof buf, "%-10s %-10s %-10s\n", fmt(r.map_full).c_str(),
                  fmt(r.map_rare).c_str(), fmt(r.map_nonrare).c_str());
  }
  os << buf;
  return os.str();
}

void check_split(const ZeroShotSplit& split, int num_objects) {
  std::set<int> objects, covered;
  std::set<int> seen(split.seen.begin(), split.seen.end());
  for (int t : split.unseen) {
    if (seen.count(t)) throw ConstraintError("zero-shot split: triplet " + std::to_string(t) + " is both seen and unseen");
    objects.insert(t % num_objects);
  }
  for (int t : split.seen) {
    objects.insert(t % num_objects);
    covered.insert(t % num_objects);
  }
  for (int o : objects) {
    if (!covered.count(o)) {
      throw ConstraintError("zero-shot split: object class " + std::to_string(o) +
                            " has no seen triplet");
    }
  }
}

ZeroShotSplit zero_shot_split(std::span<const int> triplet_classes, int num_objects, int n_unseen,
                              std::uint64_t seed) {
  if (num_objects <= 0 || n_unseen < 0) throw ArgumentError("zero_shot_split: invalid sizes");
  std::vector<int> classes(triplet_classes.begin(), triplet_classes.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::map<int, int> per_object;
  for (int t : classes) ++per_object[t % num_objects];
  const int capacity = static_cast<int>(classes.size() - per_object.size());
  if (n_unseen > capacity) {
    throw ConstraintError("zero-shot split: " + std::to_string(n_unseen) + " unseen classes requested but only " +
                          std::to_string(capacity) + " can be withheld while every object keeps a seen triplet");
  }
  std::vector<int> order = classes;
  Rng rng(derive_seed(seed, "zero-shot"));
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::set<int> unseen;
  for (int t : order) {
    if (static_cast<int>(unseen.size()) == n_unseen) break;
    int& left = per_object[t % num_objects];
    if (left <= 1) continue;
    --left;
    unseen.insert(t);
  }
  ZeroShotSplit split;
  for (int t : classes) (unseen.count(t) ? split.unseen : split.seen).push_back(t);
  check_split(split, num_objects);
  return split;
}

std::vector<TripletDetection> compose_triplets(const std::string& scene_id, const Detection& human,
                                               const Detection& object,
                                               std::span<const float> logits, int num_objects) {
  std::vector<TripletDetection> out;
  out.reserve(logits.size());
  const double pair_score = static_cast<double>(human.score) * object.score;
  for (std::size_t p = 0; p < logits.size(); ++p) {
    const double z = logits[p];
    const double sig = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    out.push_back({scene_id, human.box, object.box,
                   triplet_id(static_cast<int>(p), object.class_id, num_objects), pair_score * sig});
  }
  return out;
}

std::vector<GtInstance> gt_instances(const std::string& scene_id, const SceneGt& gt,
                                     int num_objects) {
  std::vector<GtInstance> out;
  for (const GtTriplet& t : gt.triplets) {
    out.push_back({scene_id, t.human, t.object, triplet_id(t.predicate, t.object_class, num_objects)});
  }
  return out;
}

}  // namespace hoiprime
