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
#include "hoiprime/variant.hpp"

#include <array>

#include "hoiprime/errors.hpp"

namespace hoiprime {

namespace {

constexpr std::array<std::string_view, 14> kNames = {
    "standard", "np",     "nc",     "nl",    "concat",  "3x3add",          "conn1",
    "conn2",    "conn3",  "ltov",   "no-wo", "no-fhfo", "standard-larger", "concat-larger"};

}  // namespace

int VariantSpec::connection_count() const {
  int n = 0;
  for (int i = 0; i < 3; ++i) n += has_connection(i);
  return n;
}

std::span<const std::string_view> variant_names() { return kNames; }

VariantSpec variant_from_name(std::string_view name) {
  VariantSpec v;
  v.name = std::string(name);
  if (name == "standard") return v;
  if (name == "np") {
    v.priming = false;
    return v;
  }
  if (name == "nc") {
    v.priming = false;
    v.laterals = LateralMode::kNone;
    return v;
  }
  if (name == "nl") {
    v.laterals = LateralMode::kNone;
    return v;
  }
  if (name == "concat") {
    v.laterals = LateralMode::kConcat;
    return v;
  }
  if (name == "3x3add") {
    v.lateral_kernel = 3;
    return v;
  }
  if (name == "conn1" || name == "conn2" || name == "conn3") {
    v.active_connections = {false, false, false};
    v.active_connections[name.back() - '1'] = true;
    return v;
  }
  if (name == "ltov") {
    v.direction = LateralDirection::kLayoutToVisual;
    return v;
  }
  if (name == "no-wo") {
    v.use_w_o = false;
    return v;
  }
  if (name == "no-fhfo") {
    v.use_fh_fo = false;
    return v;
  }
  if (name == "standard-larger") {
    v.use_fh_fo = false;
    v.enlarged_head = true;
    return v;
  }
  if (name == "concat-larger") {
    v.laterals = LateralMode::kConcat;
    v.use_fh_fo = false;
    v.enlarged_head = true;
    return v;
  }
  std::string valid;
  for (auto n : kNames) {
    if (!valid.empty()) valid += ", ";
    valid += n;
  }
  throw ArgumentError("unknown variant '" + std::string(name) + "'; valid variants: " + valid);
}

}  // namespace hoiprime
