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
#include "hoiprime/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hoiprime/checkpoint.hpp"
#include "hoiprime/errors.hpp"
#include "hoiprime/io.hpp"
#include "hoiprime/rng.hpp"
#include "hoiprime/variant.hpp"

namespace hoiprime {

namespace fs = std::filesystem;

namespace {

// Runs fn(i) for i in [0, n) on up to worker_threads() threads. Each call
// writes only its own slot, so results do not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_threads()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

HoiPair materialize_test(const Dataset& ds, const PairRef& ref, int resolution) {
  const SceneRecord& r = ds.test[ref.scene];
  const Detection& h = r.detections[ref.human];
  const Detection& o = r.detections[ref.object];
  PairCandidate c{h, o, union_box(h.box, o.box), ref.target};
  return materialize(c, r.pixels, ds.embeddings, resolution);
}

std::string format_map(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *v);
  return buf;
}

}  // namespace

DatasetPairSource::DatasetPairSource(const Dataset& dataset, int resolution, const std::vector<bool>& withheld)
    : dataset_(&dataset), resolution_(resolution) {
  const int p = dataset.spec.num_predicates();
  const int o = dataset.spec.num_objects();
  for (std::size_t s = 0; s < dataset.train.size(); ++s) {
    const SceneRecord& r = dataset.train[s];
    const auto pairs = r.pairs ? *r.pairs : training_pair_indices(r.detections, r.gt);
    for (auto [h, obj] : pairs) {
      std::vector<float> target = label_pair(r.detections[h], r.detections[obj], r.gt.triplets, p);
      bool drop = false;
      for (int k = 0; k < p && !withheld.empty(); ++k) {
        if (target[k] > 0.5f && withheld.at(triplet_id(k, r.detections[obj].class_id, o))) drop = true;
      }
      if (!drop) refs_.push_back({s, h, obj, std::move(target)});
    }
  }
}

PairBatch DatasetPairSource::batch(std::span<const std::size_t> indices) const {
  std::vector<HoiPair> pairs(indices.size());
  parallel_for(indices.size(), [&](std::size_t i) {
    const PairRef& ref = refs_.at(indices[i]);
    const SceneRecord& r = dataset_->train[ref.scene];
    const Detection& h = r.detections[ref.human];
    const Detection& o = r.detections[ref.object];
    pairs[i] = materialize(PairCandidate{h, o, union_box(h.box, o.box), ref.target}, r.pixels,
                           dataset_->embeddings, resolution_);
  });
  return make_batch(pairs);
}

std::vector<std::int64_t> DatasetPairSource::predicate_counts() const {
  std::vector<std::int64_t> counts(dataset_->spec.num_predicates(), 0);
  for (const PairRef& ref : refs_) {
    for (std::size_t k = 0; k < ref.target.size(); ++k) counts[k] += ref.target[k] > 0.5f ? 1 : 0;
  }
  return counts;
}

std::vector<TripletDetection> detect(Model& model, const Dataset& dataset, ScoreSource score, int batch_size) {
  if (score == ScoreSource::kLayout && !model.variant().priming) {
    throw ArgumentError("score source p1 needs a variant with the layout prior (not " + model.variant().name + ")");
  }
  std::vector<PairRef> refs;
  for (std::size_t s = 0; s < dataset.test.size(); ++s) {
    for (auto [h, o] : test_pair_indices(dataset.test[s].detections)) refs.push_back({s, h, o, {}});
  }
  const int r = model.config().resolution;
  const int o = dataset.spec.num_objects();
  std::vector<TripletDetection> out;
  for (std::size_t start = 0; start < refs.size(); start += batch_size) {
    const std::size_t n = std::min<std::size_t>(batch_size, refs.size() - start);
    std::vector<HoiPair> pairs(n);
    parallel_for(n, [&](std::size_t i) { pairs[i] = materialize_test(dataset, refs[start + i], r); });
    const PairBatch batch = make_batch(pairs);
    Tape tape;
    const ForwardResult fr = model.forward(tape, batch, Mode::kEval);
    const Tensor& logits = score == ScoreSource::kLayout ? fr.p1->value() : fr.p2.value();
    const int p = logits.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      const PairRef& ref = refs[start + i];
      const SceneRecord& rec = dataset.test[ref.scene];
      const std::span<const float> row(logits.data().data() + i * p, p);
      auto t = compose_triplets(rec.id, rec.detections[ref.human], rec.detections[ref.object], row, o);
      out.insert(out.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
    }
  }
  return out;
}

std::vector<GtInstance> test_gt(const Dataset& dataset) {
  std::vector<GtInstance> out;
  for (const SceneRecord& r : dataset.test) {
    auto g = gt_instances(r.id, r.gt, dataset.spec.num_objects());
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

std::vector<TripletDetection> shuffle_scores(std::vector<TripletDetection> dets, std::uint64_t seed) {
  std::vector<double> scores;
  scores.reserve(dets.size());
  for (const TripletDetection& d : dets) scores.push_back(d.score);
  Rng rng(seed);
  std::shuffle(scores.begin(), scores.end(), rng.engine());
  for (std::size_t i = 0; i < dets.size(); ++i) dets[i].score = scores[i];
  return dets;
}

ZeroShotSplit resolve_split(const RunConfig& config, const Dataset& dataset) {
  const int o = dataset.spec.num_objects();
  if (!config.split_file.empty()) {
    ZeroShotSplit split = read_split(config.split_file);
    check_split(split, o);
    return split;
  }
  const auto counts = triplet_counts(dataset);
  std::vector<int> classes;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] > 0) classes.push_back(static_cast<int>(t));
  }
  const int n_unseen = config.n_unseen ? *config.n_unseen
                                       : static_cast<int>(std::lround(0.2 * static_cast<double>(classes.size())));
  return zero_shot_split(classes, o, n_unseen, config.split_seed());
}

std::vector<bool> unseen_mask(const ZeroShotSplit& split, int num_classes) {
  std::vector<bool> mask(num_classes, false);
  for (int t : split.unseen) {
    if (t < 0 || t >= num_classes) throw ArgumentError("split: triplet id " + std::to_string(t) + " out of range");
    mask[t] = true;
  }
  return mask;
}

TrainOutput train_run(const RunConfig& config, const Dataset& dataset) {
  config.validate();
  const int feature_dim =
      dataset.train.empty() || dataset.train.front().detections.empty()
          ? config.feature_dim
          : static_cast<int>(dataset.train.front().detections.front().feature.size());
  const ModelConfig mc = config.model_config(dataset.spec, dataset.embeddings.dim, feature_dim);
  TrainOutput out;
  std::vector<bool> withheld;
  if (config.zero_shot) {
    out.split = resolve_split(config, dataset);
    withheld = unseen_mask(*out.split, dataset.spec.num_predicates() * dataset.spec.num_objects());
  }
  DatasetPairSource source(dataset, mc.resolution, withheld);
  out.pairs = source.size();
  const auto counts = source.predicate_counts();
  const auto weights = class_weights(counts);
  out.model = build_model(mc, variant_from_name(config.variant), config.init_seed());
  out.result = train(source, *out.model, config.train_config(), weights);
  return out;
}

EvalReport evaluate_run(const RunConfig& config, const Dataset& dataset,
                        const std::vector<TripletDetection>& detections,
                        const std::optional<ZeroShotSplit>& split) {
  const int num_classes = dataset.spec.num_predicates() * dataset.spec.num_objects();
  const auto gts = test_gt(dataset);
  const auto ap = per_class_ap(detections, gts, num_classes);
  std::vector<std::int64_t> gt_counts(num_classes, 0);
  for (const GtInstance& g : gts) ++gt_counts[g.triplet];
  EvalReport report = split ? aggregate_zero_shot(ap, gt_counts, triplet_counts(dataset), unseen_mask(*split, num_classes))
                            : aggregate(ap, gt_counts, triplet_counts(dataset), config.rare_threshold);
  report.config_hash = config.hash_hex();
  report.seed = config.seed;
  return report;
}

std::vector<std::string> triplet_names(const SceneSpec& spec) {
  const auto preds = predicate_names(spec);
  std::vector<std::string> names;
  for (const std::string& p : preds) {
    for (const ClassStyle& c : spec.classes) names.push_back(p + " " + c.name);
  }
  return names;
}

std::uint64_t model_hash(const ModelConfig& m, const VariantSpec& v) {
  std::ostringstream os;
  os << v.name << '|' << m.resolution << '|' << m.num_predicates << '|' << m.num_objects << '|' << m.embedding_dim
     << '|' << m.det_feature_dim << '|' << m.fc1 << '|' << m.fc2 << '|' << m.stem_channels << '|' << m.expansion;
  for (int c : m.layout_channels) os << ',' << c;
  for (int c : m.stage_mid) os << ';' << c;
  for (int c : m.stage_blocks) os << ':' << c;
  return fnv1a64(os.str());
}

void cmd_gen(const RunConfig& config) {
  config.validate();
  const Dataset ds = generate_dataset(config.dataset_options());
  write_dataset(config.data_dir, ds);
}

namespace {

void write_train_outputs(const RunConfig& config, const fs::path& out, TrainOutput& trained) {
  fs::create_directories(out);
  write_checkpoint(out / "model.ckpt",
                   snapshot(*trained.model, model_hash(trained.model->config(), trained.model->variant())));
  std::ostringstream csv;
  write_loss_csv(csv, trained.result.history);
  write_text(out / "loss.csv", csv.str());
  write_text(out / "config.json", config.to_json());
  if (trained.split) write_split(out / "split.csv", *trained.split);
}

std::string write_eval_outputs(const fs::path& out, const Dataset& ds,
                               const std::vector<TripletDetection>& dets, const EvalReport& report) {
  fs::create_directories(out);
  write_detections(out / "detections.jsonl", dets);
  const std::string json = report_json(report, triplet_names(ds.spec));
  write_text(out / "report.json", json);
  write_text(out / "report.txt", report_table(report));
  return json;
}

}  // namespace

std::string cmd_train(const RunConfig& config) {
  const Dataset ds = load_dataset(config.data_dir);
  TrainOutput trained = train_run(config, ds);
  write_train_outputs(config, config.out_dir, trained);
  std::ostringstream csv;
  write_loss_csv(csv, trained.result.history);
  return csv.str();
}

std::string cmd_eval(const RunConfig& config) {
  config.validate();
  const Dataset ds = load_dataset(config.data_dir);
  const fs::path out(config.out_dir);
  const Checkpoint ck = read_checkpoint(out / "model.ckpt");
  const int feature_dim = ds.test.empty() || ds.test.front().detections.empty()
                              ? config.feature_dim
                              : static_cast<int>(ds.test.front().detections.front().feature.size());
  const ModelConfig mc = config.model_config(ds.spec, ds.embeddings.dim, feature_dim);
  const VariantSpec variant = variant_from_name(config.variant);
  auto model = build_model(mc, variant, config.init_seed());
  restore(*model, ck, model_hash(mc, variant));
  std::optional<ZeroShotSplit> split;
  if (config.zero_shot) split = resolve_split(config, ds);
  const auto dets = detect(*model, ds, config.score);
  const EvalReport report = evaluate_run(config, ds, dets, split);
  return write_eval_outputs(out, ds, dets, report);
}

std::string cmd_ablate(const RunConfig& config) {
  config.validate();
  const Dataset ds = load_dataset(config.data_dir);
  const fs::path out(config.out_dir);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  std::ostringstream table;
  char buf[160];
  const bool zs = config.zero_shot;
  std::snprintf(buf, sizeof buf, "%-16s %-10s %-10s %-10s\n", "Variant", zs ? "Unseen" : "Full",
                zs ? "Seen" : "Rare", zs ? "All" : "Non-rare");
  table << buf;
  for (const std::string& name : config.ablate) {
    RunConfig run = config;
    run.variant = name;
    if (run.score == ScoreSource::kLayout && !variant_from_name(name).priming) run.score = ScoreSource::kVisual;
    TrainOutput trained = train_run(run, ds);
    const fs::path dir = out / name;
    write_train_outputs(run, dir, trained);
    const auto dets = detect(*trained.model, ds, run.score);
    const EvalReport report = evaluate_run(run, ds, dets, trained.split);
    write_eval_outputs(dir, ds, dets, report);
    const auto first = zs ? report.map_unseen() : report.map_full;
    const auto second = zs ? report.map_seen() : report.map_rare;
    const auto third = zs ? report.map_all() : report.map_nonrare;
    std::snprintf(buf, sizeof buf, "%-16s %-10s %-10s %-10s\n", name.c_str(), format_map(first).c_str(),
                  format_map(second).c_str(), format_map(third).c_str());
    table << buf;
    auto opt = [](std::optional<double> v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
    nlohmann::ordered_json row;
    row["variant"] = name;
    row[zs ? "map_unseen" : "map_full"] = opt(first);
    row[zs ? "map_seen" : "map_rare"] = opt(second);
    row[zs ? "map_all" : "map_nonrare"] = opt(third);
    rows.push_back(std::move(row));
  }
  nlohmann::ordered_json j;
  j["config_hash"] = config.hash_hex();
  j["seed"] = config.seed;
  j["rows"] = std::move(rows);
  write_text(out / "ablation.json", j.dump(2) + "\n");
  write_text(out / "ablation.txt", table.str());
  return table.str();
}

std::string cmd_gradcheck(int seeds, std::uint64_t seed, bool& all_passed) {
  std::vector<GradCheckRow> rows = gradcheck_suite(seeds, seed);
  GradCheckRow model = gradcheck_model(ModelConfig::desk(), VariantSpec{}, derive_seed(seed, "model"));
  model.op = "model (desk standard)";
  rows.push_back(model);
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-24s %-6s %-12s %-10s %s\n", "op", "seeds", "max error", "threshold", "result");
  os << buf;
  all_passed = true;
  for (const GradCheckRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-24s %-6d %-12.3e %-10.0e %s\n", r.op.c_str(), r.seeds, r.max_error,
                  r.threshold, r.passed() ? "pass" : "FAIL");
    os << buf;
    all_passed = all_passed && r.passed();
  }
  return os.str();
}

}  // namespace hoiprime
