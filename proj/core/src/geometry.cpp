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
#include "hoiprime/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "hoiprime/errors.hpp"

namespace hoiprime {

double iou(const BoxF& a, const BoxF& b) {
  const double iw = std::min<double>(a.x2, b.x2) - std::max<double>(a.x1, b.x1);
  const double ih = std::min<double>(a.y2, b.y2) - std::max<double>(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double area_a = static_cast<double>(a.x2 - a.x1) * (a.y2 - a.y1);
  const double area_b = static_cast<double>(b.x2 - b.x1) * (b.y2 - b.y1);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BoxF union_box(const BoxF& a, const BoxF& b) {
  return BoxF{std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
              std::max(a.y2, b.y2)};
}

int InteractionPattern::count(int channel) const {
  const int r = resolution();
  int n = 0;
  for (int i = 0; i < r * r; ++i) n += grid[static_cast<std::size_t>(channel) * r * r + i] > 0.5f;
  return n;
}

namespace {

// Cells [lo, hi) whose centres (i + 0.5) fall inside [a, b] on a unit grid.
void cell_range(double a, double b, int resolution, int& lo, int& hi) {
  lo = static_cast<int>(std::ceil(a - 0.5));
  hi = static_cast<int>(std::floor(b - 0.5)) + 1;
  lo = std::clamp(lo, 0, resolution);
  hi = std::clamp(hi, 0, resolution);
  if (hi <= lo) {
    const int nearest = std::clamp(static_cast<int>(std::floor(0.5 * (a + b))), 0, resolution - 1);
    lo = nearest;
    hi = nearest + 1;
  }
}

void paint(Tensor& grid, int channel, const BoxF& box, const BoxF& frame, int resolution) {
  const double sx = resolution / static_cast<double>(frame.width());
  const double sy = resolution / static_cast<double>(frame.height());
  int x0, x1, y0, y1;
  cell_range((box.x1 - frame.x1) * sx, (box.x2 - frame.x1) * sx, resolution, x0, x1);
  cell_range((box.y1 - frame.y1) * sy, (box.y2 - frame.y1) * sy, resolution, y0, y1);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      grid[(static_cast<std::size_t>(channel) * resolution + y) * resolution + x] = 1.0f;
    }
  }
}

}  // namespace

InteractionPattern rasterize_ip(const BoxF& human, const BoxF& object, int resolution) {
  if (resolution <= 0) throw ArgumentError("rasterize_ip: resolution must be positive");
  if (!human.valid() || !object.valid()) throw ArgumentError("rasterize_ip: invalid box");
  const BoxF frame = union_box(human, object);
  InteractionPattern ip{Tensor({2, resolution, resolution})};
  paint(ip.grid, 0, human, frame, resolution);
  paint(ip.grid, 1, object, frame, resolution);
  return ip;
}

Tensor crop_resize(const Tensor& image, const BoxF& box, int resolution) {
  if (image.rank() != 3) throw ShapeError("crop_resize: image must be [C,H,W]");
  if (resolution <= 0) throw ArgumentError("crop_resize: resolution must be positive");
  const int channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  // Pixel i covers [i, i+1); its sample sits at i + 0.5.
  const double bx1 = std::clamp<double>(box.x1, 0.0, w), bx2 = std::clamp<double>(box.x2, 0.0, w);
  const double by1 = std::clamp<double>(box.y1, 0.0, h), by2 = std::clamp<double>(box.y2, 0.0, h);
  const double sx0 = bx1 + 0.5, sx1 = std::max(bx2 - 0.5, sx0);
  const double sy0 = by1 + 0.5, sy1 = std::max(by2 - 0.5, sy0);
  Tensor out({channels, resolution, resolution});
  const double step_x = resolution > 1 ? (sx1 - sx0) / (resolution - 1) : 0.0;
  const double step_y = resolution > 1 ? (sy1 - sy0) / (resolution - 1) : 0.0;
  for (int oy = 0; oy < resolution; ++oy) {
    const double py = (resolution > 1 ? sy0 + oy * step_y : 0.5 * (sy0 + sy1)) - 0.5;
    const double fy = std::clamp(py, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < resolution; ++ox) {
      const double px = (resolution > 1 ? sx0 + ox * step_x : 0.5 * (sx0 + sx1)) - 0.5;
      const double fx = std::clamp(px, 0.0, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - x0;
      for (int c = 0; c < channels; ++c) {
        const float* plane = image.data().data() + static_cast<std::size_t>(c) * h * w;
        const double top = plane[y0 * w + x0] * (1.0 - wx) + plane[y0 * w + x1] * wx;
        const double bot = plane[y1 * w + x0] * (1.0 - wx) + plane[y1 * w + x1] * wx;
        out[(static_cast<std::size_t>(c) * resolution + oy) * resolution + ox] =
            static_cast<float>(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

}  // namespace hoiprime
