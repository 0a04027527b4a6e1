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
#include <span>
#include <string>
#include <string_view>

namespace hoiprime {

enum class LateralMode { kAdd, kConcat, kNone };
enum class LateralDirection { kVisualToLayout, kLayoutToVisual };

// Architecture switches covering every ablation row. The default value is
// the standard model: priming, additive 1x1 laterals from the visual
// branch into the layout branch at all three stages, w_o, f_h and f_o.
struct VariantSpec {
  std::string name = "standard";
  bool priming = true;
  LateralMode laterals = LateralMode::kAdd;
  int lateral_kernel = 1;
  LateralDirection direction = LateralDirection::kVisualToLayout;
  std::array<bool, 3> active_connections = {true, true, true};
  bool use_w_o = true;
  bool use_fh_fo = true;
  bool enlarged_head = false;

  bool has_connection(int index) const {
    return laterals != LateralMode::kNone && active_connections.at(index);
  }
  int connection_count() const;
};

// standard, np, nc, nl, concat, 3x3add, conn1, conn2, conn3, ltov, no-wo,
// no-fhfo, standard-larger, concat-larger.
std::span<const std::string_view> variant_names();

// Throws ArgumentError listing the valid names for an unknown name.
VariantSpec variant_from_name(std::string_view name);

}  // namespace hoiprime
