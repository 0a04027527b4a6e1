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
#include "hoiprime/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hoiprime/errors.hpp"

namespace hoiprime {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json box_json(const BoxF& b) { return ordered_json::array({b.x1, b.y1, b.x2, b.y2}); }

BoxF box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw FormatError("box must be [x1, y1, x2, y2]");
  return BoxF{j[0].get<float>(), j[1].get<float>(), j[2].get<float>(), j[3].get<float>()};
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, mode | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(path, mode);
  if (!is) throw Error("cannot open " + path.string());
  return is;
}

// Calls fn(line, line_number) for each non-empty line, wrapping JSON
// errors with the file position.
template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  std::ifstream is = open_in(path);
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      fn(line);
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

template <typename Fn>
void for_each_csv_row(const fs::path& path, const std::string& header, Fn&& fn) {
  std::ifstream is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || line != header) {
    throw FormatError(path.string() + ": expected header \"" + header + "\"");
  }
  int n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    const auto fields = csv_fields(line);
    if (fields.size() != 2) throw FormatError(path.string() + ":" + std::to_string(n) + ": expected two fields");
    try {
      fn(std::stoi(fields[0]), fields[1]);
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": malformed row");
    }
  }
}

const char* shape_name(ShapeKind s) {
  switch (s) {
    case ShapeKind::kRect: return "rect";
    case ShapeKind::kEllipse: return "ellipse";
    case ShapeKind::kTriangle: return "triangle";
    case ShapeKind::kDiamond: return "diamond";
  }
  return "rect";
}

ShapeKind shape_from(const std::string& s) {
  if (s == "rect") return ShapeKind::kRect;
  if (s == "ellipse") return ShapeKind::kEllipse;
  if (s == "triangle") return ShapeKind::kTriangle;
  if (s == "diamond") return ShapeKind::kDiamond;
  throw FormatError("unknown shape \"" + s + "\"");
}

}  // namespace

void write_ppm(const fs::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("write_ppm: expected [3,H,W]");
  const int h = image.dim(1), w = image.dim(2);
  std::ofstream os = open_out(path, std::ios::binary);
  os << "P6\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = image[c * plane + static_cast<std::size_t>(y) * w + x];
        row[x * 3 + c] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
      }
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

Tensor read_ppm(const fs::path& path) {
  std::ifstream is = open_in(path, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw FormatError(path.string() + ": expected a binary PPM with maxval 255");
  }
  is.get();
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * 3);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (is.gcount() != static_cast<std::streamsize>(bytes.size())) throw FormatError(path.string() + ": truncated");
  Tensor image({3, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) image[c * plane + i] = bytes[i * 3 + c] / 255.0f;
  }
  return image;
}

std::string scene_to_json(const SceneRecord& r) {
  ordered_json j;
  j["scene_id"] = r.id;
  j["image"] = r.image;
  ordered_json dets = ordered_json::array();
  for (const Detection& d : r.detections) {
    dets.push_back({{"box", box_json(d.box)}, {"class", d.class_id}, {"score", d.score}, {"feature", d.feature}});
  }
  j["detections"] = std::move(dets);
  ordered_json ents = ordered_json::array();
  for (const GtEntity& e : r.gt.entities) ents.push_back({{"box", box_json(e.box)}, {"class", e.class_id}});
  j["entities"] = std::move(ents);
  ordered_json trips = ordered_json::array();
  for (const GtTriplet& t : r.gt.triplets) {
    trips.push_back({{"human", box_json(t.human)},
                     {"object", box_json(t.object)},
                     {"object_class", t.object_class},
                     {"predicate", t.predicate}});
  }
  j["triplets"] = std::move(trips);
  if (r.pairs) {
    ordered_json pairs = ordered_json::array();
    for (const auto& [h, o] : *r.pairs) pairs.push_back({h, o});
    j["pairs"] = std::move(pairs);
  }
  return j.dump();
}

namespace {

SceneRecord parse_scene(std::string_view line) {
  const json j = json::parse(line);
  SceneRecord r;
  r.id = j.at("scene_id").get<std::string>();
  r.image = j.at("image").get<std::string>();
  for (const json& d : j.at("detections")) {
    Detection det;
    det.box = box_from(d.at("box"));
    det.class_id = d.at("class").get<int>();
    det.score = d.at("score").get<float>();
    det.feature = d.at("feature").get<std::vector<float>>();
    r.detections.push_back(std::move(det));
  }
  for (const json& e : j.at("entities")) r.gt.entities.push_back({box_from(e.at("box")), e.at("class").get<int>()});
  for (const json& t : j.at("triplets")) {
    r.gt.triplets.push_back({box_from(t.at("human")), box_from(t.at("object")), t.at("object_class").get<int>(),
                             t.at("predicate").get<int>()});
  }
  if (j.contains("pairs")) {
    std::vector<std::pair<int, int>> pairs;
    const int n = static_cast<int>(r.detections.size());
    for (const json& p : j.at("pairs")) {
      const int h = p.at(0).get<int>(), o = p.at(1).get<int>();
      if (h < 0 || h >= n || o < 0 || o >= n) throw FormatError("pair index out of range");
      pairs.emplace_back(h, o);
    }
    r.pairs = std::move(pairs);
  }
  return r;
}

}  // namespace

SceneRecord scene_from_json(std::string_view line) {
  try {
    return parse_scene(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("scene: ") + e.what());
  }
}

void write_scenes(const fs::path& path, const std::vector<SceneRecord>& records) {
  std::ofstream os = open_out(path);
  for (const SceneRecord& r : records) os << scene_to_json(r) << '\n';
}

std::vector<SceneRecord> read_scenes(const fs::path& path) {
  std::vector<SceneRecord> out;
  for_each_line(path, [&](const std::string& line) { out.push_back(scene_from_json(line)); });
  return out;
}

void write_detections(const fs::path& path, const std::vector<TripletDetection>& dets) {
  std::ofstream os = open_out(path);
  for (const TripletDetection& d : dets) {
    ordered_json j;
    j["scene_id"] = d.scene_id;
    j["human"] = box_json(d.human);
    j["object"] = box_json(d.object);
    j["triplet"] = d.triplet;
    j["score"] = d.score;
    os << j.dump() << '\n';
  }
}

std::vector<TripletDetection> read_detections(const fs::path& path) {
  std::vector<TripletDetection> out;
  for_each_line(path, [&](const std::string& line) {
    const json j = json::parse(line);
    out.push_back({j.at("scene_id").get<std::string>(), box_from(j.at("human")), box_from(j.at("object")),
                   j.at("triplet").get<int>(), j.at("score").get<double>()});
  });
  return out;
}

void write_gt(const fs::path& path, const std::vector<GtInstance>& gts) {
  std::ofstream os = open_out(path);
  for (const GtInstance& g : gts) {
    ordered_json j;
    j["scene_id"] = g.scene_id;
    j["human"] = box_json(g.human);
    j["object"] = box_json(g.object);
    j["triplet"] = g.triplet;
    os << j.dump() << '\n';
  }
}

std::vector<GtInstance> read_gt(const fs::path& path) {
  std::vector<GtInstance> out;
  for_each_line(path, [&](const std::string& line) {
    const json j = json::parse(line);
    out.push_back({j.at("scene_id").get<std::string>(), box_from(j.at("human")), box_from(j.at("object")),
                   j.at("triplet").get<int>()});
  });
  return out;
}

void write_counts(const fs::path& path, const std::vector<std::int64_t>& counts) {
  std::ofstream os = open_out(path);
  os << "triplet_id,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) os << i << ',' << counts[i] << '\n';
}

std::vector<std::int64_t> read_counts(const fs::path& path) {
  std::vector<std::int64_t> counts;
  for_each_csv_row(path, "triplet_id,count", [&](int id, const std::string& value) {
    if (id < 0) throw FormatError("negative triplet id");
    if (static_cast<std::size_t>(id) >= counts.size()) counts.resize(id + 1, 0);
    counts[id] = std::stoll(value);
  });
  return counts;
}

void write_split(const fs::path& path, const ZeroShotSplit& split) {
  std::vector<std::pair<int, bool>> rows;
  for (int t : split.seen) rows.emplace_back(t, false);
  for (int t : split.unseen) rows.emplace_back(t, true);
  std::sort(rows.begin(), rows.end());
  std::ofstream os = open_out(path);
  os << "triplet_id,split\n";
  for (const auto& [t, unseen] : rows) os << t << ',' << (unseen ? "unseen" : "seen") << '\n';
}

ZeroShotSplit read_split(const fs::path& path) {
  ZeroShotSplit split;
  for_each_csv_row(path, "triplet_id,split", [&](int id, const std::string& value) {
    if (value == "seen") {
      split.seen.push_back(id);
    } else if (value == "unseen") {
      split.unseen.push_back(id);
    } else {
      throw FormatError("split must be seen or unseen");
    }
  });
  std::sort(split.seen.begin(), split.seen.end());
  std::sort(split.unseen.begin(), split.unseen.end());
  return split;
}

void write_embeddings(const fs::path& path, const EmbeddingTable& table) {
  ordered_json j;
  j["dim"] = table.dim;
  j["vectors"] = table.vectors;
  write_text(path, j.dump() + "\n");
}

EmbeddingTable read_embeddings(const fs::path& path) {
  try {
    const json j = json::parse(read_text(path));
    EmbeddingTable t;
    t.dim = j.at("dim").get<int>();
    t.vectors = j.at("vectors").get<std::vector<std::vector<float>>>();
    for (const auto& v : t.vectors) {
      if (static_cast<int>(v.size()) != t.dim) throw FormatError("embedding width differs from dim");
    }
    return t;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string spec_to_json(const SceneSpec& s) {
  ordered_json j;
  j["image_size"] = s.image_size;
  ordered_json classes = ordered_json::array();
  for (const ClassStyle& c : s.classes) {
    classes.push_back({{"name", c.name}, {"shape", shape_name(c.shape)}, {"color", c.color}});
  }
  j["classes"] = std::move(classes);
  j["similarity_group"] = s.similarity_group;
  ordered_json allowed = ordered_json::array();
  for (const auto& row : s.allowed) allowed.push_back(row);
  j["allowed"] = std::move(allowed);
  j["appearance_predicate"] = s.appearance_predicate;
  j["bright_rate"] = s.bright_rate;
  ordered_json rare = ordered_json::array();
  for (const RareRule& r : s.rare) {
    rare.push_back({{"predicate", r.predicate}, {"object_class", r.object_class}, {"multiplier", r.multiplier}});
  }
  j["rare"] = std::move(rare);
  j["negative_rate"] = s.negative_rate;
  j["humans"] = {s.min_humans, s.max_humans};
  j["objects"] = {s.min_objects, s.max_objects};
  return j.dump(2) + "\n";
}

SceneSpec spec_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    SceneSpec s;
    s.image_size = j.at("image_size").get<int>();
    for (const json& c : j.at("classes")) {
      s.classes.push_back({c.at("name").get<std::string>(), shape_from(c.at("shape").get<std::string>()),
                           c.at("color").get<std::array<float, 3>>()});
    }
    s.similarity_group = j.at("similarity_group").get<std::vector<int>>();
    const json& allowed = j.at("allowed");
    if (!allowed.is_array() || allowed.size() != kLayoutPredicates) {
      throw FormatError("allowed must list " + std::to_string(kLayoutPredicates) + " predicates");
    }
    for (int p = 0; p < kLayoutPredicates; ++p) s.allowed[p] = allowed[p].get<std::vector<bool>>();
    s.appearance_predicate = j.at("appearance_predicate").get<bool>();
    s.bright_rate = j.at("bright_rate").get<double>();
    for (const json& r : j.at("rare")) {
      s.rare.push_back({r.at("predicate").get<int>(), r.at("object_class").get<int>(), r.at("multiplier").get<double>()});
    }
    s.negative_rate = j.at("negative_rate").get<double>();
    s.min_humans = j.at("humans").at(0).get<int>();
    s.max_humans = j.at("humans").at(1).get<int>();
    s.min_objects = j.at("objects").at(0).get<int>();
    s.max_objects = j.at("objects").at(1).get<int>();
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("scene spec: ") + e.what());
  }
}

void write_dataset(const fs::path& dir, const Dataset& ds) {
  ds.spec.validate();
  fs::create_directories(dir / "images");
  write_text(dir / "spec.json", spec_to_json(ds.spec));
  write_embeddings(dir / "embeddings.json", ds.embeddings);
  write_counts(dir / "counts.csv", triplet_counts(ds));
  write_scenes(dir / "train.jsonl", ds.train);
  write_scenes(dir / "test.jsonl", ds.test);
  std::vector<GtInstance> gts;
  for (const SceneRecord& r : ds.test) {
    auto g = gt_instances(r.id, r.gt, ds.spec.num_objects());
    gts.insert(gts.end(), g.begin(), g.end());
  }
  write_gt(dir / "test_gt.jsonl", gts);
  for (const auto* split : {&ds.train, &ds.test}) {
    for (const SceneRecord& r : *split) write_ppm(dir / r.image, r.pixels);
  }
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("dataset directory " + dir.string() + " does not exist");
  Dataset ds;
  ds.spec = spec_from_json(read_text(dir / "spec.json"));
  ds.embeddings = read_embeddings(dir / "embeddings.json");
  if (static_cast<int>(ds.embeddings.vectors.size()) != ds.spec.num_objects()) {
    throw FormatError("embeddings.json: expected one vector per object class");
  }
  ds.train = read_scenes(dir / "train.jsonl");
  ds.test = read_scenes(dir / "test.jsonl");
  for (auto* split : {&ds.train, &ds.test}) {
    for (SceneRecord& r : *split) r.pixels = read_ppm(dir / r.image);
  }
  return ds;
}

std::string read_text(const fs::path& path) {
  std::ifstream is = open_in(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream os = open_out(path, std::ios::binary);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace hoiprime
