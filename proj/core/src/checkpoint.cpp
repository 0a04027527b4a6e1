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
#include "hoiprime/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "hoiprime/errors.hpp"

namespace hoiprime {

namespace {

constexpr std::array<char, 8> kMagic = {'H', 'O', 'I', 'P', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void u32(std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os_.write(b, 4);
  }
  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v));
    u32(static_cast<std::uint32_t>(v >> 32));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const char* data, std::size_t n) { os_.write(data, static_cast<std::streamsize>(n)); }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  std::uint32_t u32() {
    unsigned char b[4];
    read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    return lo | (static_cast<std::uint64_t>(u32()) << 32);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void read(char* data, std::size_t n) {
    is_.read(data, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) throw FormatError("checkpoint: truncated file");
  }

 private:
  std::istream& is_;
};

std::string running_name(const BatchNormParams& bn, const char* stat) {
  std::string base = bn.gamma.name;
  const std::string suffix = ".gamma";
  if (base.size() >= suffix.size() && base.ends_with(suffix)) base.resize(base.size() - suffix.size());
  return base + "." + stat;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("checkpoint: cannot open " + path.string() + " for writing");
  Writer w(os);
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(checkpoint.version);
  w.u64(checkpoint.config_hash);
  w.u32(static_cast<std::uint32_t>(checkpoint.records.size()));
  for (const NamedTensor& r : checkpoint.records) {
    w.u32(static_cast<std::uint32_t>(r.name.size()));
    w.bytes(r.name.data(), r.name.size());
    w.u32(static_cast<std::uint32_t>(r.value.rank()));
    for (int d : r.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : r.value.data()) w.f32(v);
  }
  if (!os) throw FormatError("checkpoint: write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("checkpoint: cannot open " + path.string());
  Reader r(is);
  std::array<char, 8> magic{};
  r.read(magic.data(), magic.size());
  if (magic != kMagic) throw FormatError("checkpoint: bad magic in " + path.string());
  Checkpoint ck;
  ck.version = r.u32();
  if (ck.version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(ck.version));
  }
  ck.config_hash = r.u64();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor rec;
    rec.name.resize(r.u32());
    r.read(rec.name.data(), rec.name.size());
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw FormatError("checkpoint: bad rank for " + rec.name);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(r.u32());
    std::vector<float> values(shape_numel(shape));
    for (float& v : values) v = r.f32();
    rec.value = Tensor(std::move(shape), std::move(values));
    ck.records.push_back(std::move(rec));
  }
  return ck;
}

Checkpoint snapshot(Model& model, std::uint64_t config_hash) {
  Checkpoint ck;
  ck.config_hash = config_hash;
  for (Parameter* p : model.parameters()) ck.records.push_back({p->name, p->value});
  for (BatchNormParams* bn : model.norms()) {
    ck.records.push_back({running_name(*bn, "running_mean"), bn->running_mean});
    ck.records.push_back({running_name(*bn, "running_var"), bn->running_var});
  }
  return ck;
}

void restore(Model& model, const Checkpoint& checkpoint, std::uint64_t expected_hash) {
  if (checkpoint.config_hash != expected_hash) {
    throw FormatError("checkpoint: config hash mismatch");
  }
  std::map<std::string, Tensor*> slots;
  for (Parameter* p : model.parameters()) slots[p->name] = &p->value;
  for (BatchNormParams* bn : model.norms()) {
    slots[running_name(*bn, "running_mean")] = &bn->running_mean;
    slots[running_name(*bn, "running_var")] = &bn->running_var;
  }
  if (slots.size() != checkpoint.records.size()) {
    throw FormatError("checkpoint: holds " + std::to_string(checkpoint.records.size()) +
                      " records, model expects " + std::to_string(slots.size()));
  }
  for (const NamedTensor& r : checkpoint.records) {
    auto it = slots.find(r.name);
    if (it == slots.end()) throw FormatError("checkpoint: unexpected record " + r.name);
    if (!it->second->same_shape(r.value)) {
      throw FormatError("checkpoint: shape mismatch for " + r.name + ": " +
                        shape_to_string(r.value.shape()) + " vs " +
                        shape_to_string(it->second->shape()));
    }
    *it->second = r.value;
  }
}

}  // namespace hoiprime
