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
#include <vector>

#include "hoiprime/model.hpp"
#include "hoiprime/tensor.hpp"

namespace hoiprime {

// Binary layout, all integers little-endian:
//   magic "HOIPCKPT" (8 bytes) | u32 version | u64 config hash | u32 count
//   count x { u32 name length | name bytes | u32 rank | rank x u32 extent |
//             numel x f32 }
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::vector<NamedTensor> records;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Parameters plus batch-norm running statistics, in model order.
Checkpoint snapshot(Model& model, std::uint64_t config_hash);
// Copies every record into the model. Throws FormatError on a hash, name
// or shape mismatch.
void restore(Model& model, const Checkpoint& checkpoint, std::uint64_t expected_hash);

}  // namespace hoiprime
