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

#include "hoiprime/tensor.hpp"

namespace hoiprime {

// Axis-aligned box in continuous pixel coordinates, x2 > x1 and y2 > y1.
struct BoxF {
  float x1 = 0.0f;
  float y1 = 0.0f;
  float x2 = 0.0f;
  float y2 = 0.0f;

  float width() const { return x2 - x1; }
  float height() const { return y2 - y1; }
  float area() const { return width() * height(); }
  float cx() const { return 0.5f * (x1 + x2); }
  float cy() const { return 0.5f * (y1 + y2); }
  bool valid() const { return x2 > x1 && y2 > y1; }
  bool contains(const BoxF& other) const {
    return x1 <= other.x1 && y1 <= other.y1 && x2 >= other.x2 && y2 >= other.y2;
  }

  friend bool operator==(const BoxF&, const BoxF&) = default;
};

double iou(const BoxF& a, const BoxF& b);
BoxF union_box(const BoxF& a, const BoxF& b);

// Two-channel binary map of the human (channel 0) and object (channel 1)
// inside their union box, sampled on a resolution x resolution grid.
struct InteractionPattern {
  Tensor grid;  // [2, R, R], values in {0, 1}

  int resolution() const { return grid.dim(1); }
  int count(int channel) const;
};

// A cell is set iff its centre lies inside the mapped box. Boxes thinner
// than a cell still set the single nearest cell.
InteractionPattern rasterize_ip(const BoxF& human, const BoxF& object, int resolution);

// Bilinear resize of box (clamped to the image) from a [3,H,W] image to
// [3,R,R]. Sample points use align-corners mapping so that a full-image
// box at the native resolution is the identity.
Tensor crop_resize(const Tensor& image, const BoxF& box, int resolution);

}  // namespace hoiprime
