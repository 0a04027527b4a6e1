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
#include "hoiprime/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <set>

#include <json.hpp>

#include "hoiprime/errors.hpp"
#include "hoiprime/io.hpp"
#include "hoiprime/rng.hpp"
#include "hoiprime/variant.hpp"

namespace hoiprime {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const char* score_name(ScoreSource s) { return s == ScoreSource::kLayout ? "p1" : "p2"; }

ordered_json to_ordered(const RunConfig& c) {
  ordered_json j;
  j["data_dir"] = c.data_dir;
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  ordered_json d;
  d["spec_file"] = c.spec_file;
  d["train_scenes"] = c.train_scenes;
  d["test_scenes"] = c.test_scenes;
  d["noise"] = c.noise;
  d["background_ratio"] = c.background_ratio ? ordered_json(*c.background_ratio) : ordered_json(nullptr);
  d["appearance_predicate"] = c.appearance_predicate;
  ordered_json rare = ordered_json::array();
  for (const RareRule& r : c.rare) {
    rare.push_back({{"predicate", r.predicate}, {"object_class", r.object_class}, {"multiplier", r.multiplier}});
  }
  d["rare"] = std::move(rare);
  d["embedding_dim"] = c.embedding_dim;
  d["feature_dim"] = c.feature_dim;
  j["dataset"] = std::move(d);
  ordered_json t;
  t["model"] = c.model;
  t["variant"] = c.variant;
  t["epochs"] = c.epochs;
  t["lr0"] = c.lr0;
  t["decay_every"] = c.decay_every;
  t["decay_factor"] = c.decay_factor;
  t["batch_size"] = c.batch_size;
  j["train"] = std::move(t);
  ordered_json e;
  e["score"] = score_name(c.score);
  e["zero_shot"] = c.zero_shot;
  e["n_unseen"] = c.n_unseen ? ordered_json(*c.n_unseen) : ordered_json(nullptr);
  e["split_file"] = c.split_file;
  e["rare_threshold"] = c.rare_threshold;
  e["ablate"] = c.ablate;
  j["eval"] = std::move(e);
  return j;
}

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ArgumentError(std::string("config: ") + where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ArgumentError(std::string("config: unknown key \"") + key + "\" in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
  } else {
    out = j.at(key).get<T>();
  }
}

}  // namespace

RunConfig RunConfig::from_json(std::string_view text) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j, "config", {"data_dir", "out_dir", "seed", "dataset", "train", "eval"});
    read(j, "data_dir", c.data_dir);
    read(j, "out_dir", c.out_dir);
    read(j, "seed", c.seed);
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      check_keys(d, "dataset", {"spec_file", "train_scenes", "test_scenes", "noise", "background_ratio", "appearance_predicate",
                                "rare", "embedding_dim", "feature_dim"});
      read(d, "spec_file", c.spec_file);
      read(d, "train_scenes", c.train_scenes);
      read(d, "test_scenes", c.test_scenes);
      read(d, "noise", c.noise);
      read(d, "background_ratio", c.background_ratio);
      read(d, "appearance_predicate", c.appearance_predicate);
      if (d.contains("rare")) {
        c.rare.clear();
        for (const json& r : d.at("rare")) {
          check_keys(r, "dataset.rare", {"predicate", "object_class", "multiplier"});
          c.rare.push_back({r.at("predicate").get<int>(), r.at("object_class").get<int>(),
                            r.at("multiplier").get<double>()});
        }
      }
      read(d, "embedding_dim", c.embedding_dim);
      read(d, "feature_dim", c.feature_dim);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      check_keys(t, "train", {"model", "variant", "epochs", "lr0", "decay_every", "decay_factor", "batch_size"});
      read(t, "model", c.model);
      read(t, "variant", c.variant);
      read(t, "epochs", c.epochs);
      read(t, "lr0", c.lr0);
      read(t, "decay_every", c.decay_every);
      read(t, "decay_factor", c.decay_factor);
      read(t, "batch_size", c.batch_size);
    }
    if (j.contains("eval")) {
      const json& e = j.at("eval");
      check_keys(e, "eval", {"score", "zero_shot", "n_unseen", "split_file", "rare_threshold", "ablate"});
      if (e.contains("score")) {
        const std::string s = e.at("score").get<std::string>();
        if (s == "p1") {
          c.score = ScoreSource::kLayout;
        } else if (s == "p2") {
          c.score = ScoreSource::kVisual;
        } else {
          throw ArgumentError("config: eval.score must be p1 or p2");
        }
      }
      read(e, "zero_shot", c.zero_shot);
      read(e, "n_unseen", c.n_unseen);
      read(e, "split_file", c.split_file);
      read(e, "rare_threshold", c.rare_threshold);
      read(e, "ablate", c.ablate);
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) { return from_json(read_text(path)); }

std::string RunConfig::to_json() const { return to_ordered(*this).dump(2) + "\n"; }

std::uint64_t RunConfig::hash() const {
  RunConfig c = *this;
  c.data_dir.clear();
  c.out_dir.clear();
  return fnv1a64(to_ordered(c).dump());
}

std::string RunConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

void RunConfig::validate() const {
  if (train_scenes < 1 || test_scenes < 1) throw ArgumentError("config: scene counts must be positive");
  if (noise != "none" && noise != "moderate") throw ArgumentError("config: dataset.noise must be none or moderate");
  if (background_ratio && !(*background_ratio > 0.0)) {
    throw ArgumentError("config: background_ratio must be positive");
  }
  if (embedding_dim < 1 || feature_dim < 1) throw ArgumentError("config: dimensions must be positive");
  model_preset(model);
  variant_from_name(variant);
  for (const std::string& v : ablate) variant_from_name(v);
  train_config().validate();
  if (n_unseen && *n_unseen < 0) throw ArgumentError("config: n_unseen must be non-negative");
  if (rare_threshold < 0) throw ArgumentError("config: rare_threshold must be non-negative");
}

std::uint64_t RunConfig::dataset_seed() const { return derive_seed(seed, "dataset"); }
std::uint64_t RunConfig::init_seed() const { return derive_seed(seed, "init"); }
std::uint64_t RunConfig::shuffle_seed() const { return derive_seed(seed, "shuffle"); }
std::uint64_t RunConfig::split_seed() const { return derive_seed(seed, "split"); }

DatasetOptions RunConfig::dataset_options() const {
  DatasetOptions o;
  o.spec = spec_file.empty() ? SceneSpec::desk() : spec_from_json(read_text(spec_file));
  if (appearance_predicate) o.spec.appearance_predicate = true;
  if (!rare.empty()) o.spec.rare = rare;
  o.noise = noise == "moderate" ? DetectorNoise::moderate() : DetectorNoise::none();
  o.train_scenes = train_scenes;
  o.test_scenes = test_scenes;
  o.embedding_dim = embedding_dim;
  o.feature_dim = feature_dim;
  o.background_ratio = background_ratio;
  o.seed = dataset_seed();
  return o;
}

ModelConfig RunConfig::model_config(const SceneSpec& spec, int embedding, int feature) const {
  ModelConfig m = model_preset(model);
  m.num_predicates = spec.num_predicates();
  m.num_objects = spec.num_objects();
  m.embedding_dim = embedding;
  m.det_feature_dim = feature;
  m.validate();
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.lr0 = lr0;
  t.decay_every = decay_every;
  t.decay_factor = decay_factor;
  t.batch_size = batch_size;
  t.seed = shuffle_seed();
  return t;
}

ModelConfig model_preset(std::string_view name) {
  if (name == "desk") return ModelConfig::desk();
  if (name == "tiny") return ModelConfig::tiny();
  if (name == "full") return ModelConfig::full();
  throw ArgumentError("unknown model preset \"" + std::string(name) + "\" (valid: desk, tiny, full)");
}

int worker_threads() {
  const char* env = std::getenv("HOIPRIME_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ArgumentError("HOIPRIME_THREADS must be a positive integer");
  return static_cast<int>(std::min<long>(n, 64));
}

}  // namespace hoiprime
