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

// Exhaustive reference for per-class AP on tiny cases. Independent of the
// library matcher: for every rank prefix it enumerates all one-to-one
// assignments of detections to ground truth and keeps the largest number
// of true positives, then integrates the precision envelope directly over
// the recall steps.

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "hoiprime/evaluation.hpp"
#include "hoiprime/geometry.hpp"

namespace hoiprime::oracle {

inline bool eligible(const TripletDetection& d, const GtInstance& g, double iou_min) {
  return d.scene_id == g.scene_id && d.triplet == g.triplet && iou(d.human, g.human) > iou_min &&
         iou(d.object, g.object) > iou_min;
}

// Largest matching between dets[0..k) and gts by full enumeration.
inline int max_matching(const std::vector<TripletDetection>& dets, int k,
                        const std::vector<GtInstance>& gts, double iou_min, std::vector<bool>& used,
                        int i = 0) {
  if (i == k) return 0;
  int best = max_matching(dets, k, gts, iou_min, used, i + 1);  // leave det i unmatched
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (used[g] || !eligible(dets[i], gts[g], iou_min)) continue;
    used[g] = true;
    best = std::max(best, 1 + max_matching(dets, k, gts, iou_min, used, i + 1));
    used[g] = false;
  }
  return best;
}

// AP of one class, or -1 when the class has no ground truth.
inline double brute_force_ap(std::vector<TripletDetection> dets, const std::vector<GtInstance>& gts,
                             double iou_min = 0.5) {
  if (gts.empty()) return -1.0;
  std::stable_sort(dets.begin(), dets.end(),
                   [](const TripletDetection& a, const TripletDetection& b) { return a.score > b.score; });
  const int n = static_cast<int>(dets.size());
  std::vector<double> precision(n), recall(n);
  for (int k = 1; k <= n; ++k) {
    std::vector<bool> used(gts.size(), false);
    const int tp = max_matching(dets, k, gts, iou_min, used);
    precision[k - 1] = static_cast<double>(tp) / k;
    recall[k - 1] = static_cast<double>(tp) / gts.size();
  }
  double ap = 0.0, prev_recall = 0.0;
  for (int k = 0; k < n; ++k) {
    const double envelope = *std::max_element(precision.begin() + k, precision.end());
    ap += (recall[k] - prev_recall) * envelope;
    prev_recall = recall[k];
  }
  return ap;
}

}  // namespace hoiprime::oracle
