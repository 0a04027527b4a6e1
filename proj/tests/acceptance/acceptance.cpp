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
// Acceptance run: one PASS/FAIL line per criterion.
//
//   hoiprime_acceptance --work DIR [--only 1,3,9]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "../common/ap_oracle.hpp"
#include "hoiprime/errors.hpp"
#include "hoiprime/evaluation.hpp"
#include "hoiprime/geometry.hpp"
#include "hoiprime/grad_check.hpp"
#include "hoiprime/io.hpp"
#include "hoiprime/model.hpp"
#include "hoiprime/pipeline.hpp"
#include "hoiprime/rng.hpp"
#include "hoiprime/training.hpp"
#include "hoiprime/variant.hpp"

namespace fs = std::filesystem;
using namespace hoiprime;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;  // printed indented under the verdict
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

PairBatch random_batch(const ModelConfig& c, int n, std::uint64_t seed) {
  Rng rng(seed);
  const int r = c.resolution;
  PairBatch b;
  b.ip = Tensor({n, 2, r, r});
  b.crop = Tensor({n, 3, r, r});
  b.w_o = Tensor({n, c.embedding_dim});
  b.f_h = Tensor({n, c.det_feature_dim});
  b.f_o = Tensor({n, c.det_feature_dim});
  for (float& v : b.ip.data()) v = rng.bernoulli(0.3) ? 1.0f : 0.0f;
  for (Tensor* t : {&b.crop, &b.w_o, &b.f_h, &b.f_o})
    for (float& v : t->data()) v = static_cast<float>(rng.uniform(-1, 1));
  return b;
}

// 1. Finite-difference gradient checks.
Outcome gradients() {
  const auto t0 = Clock::now();
  Outcome out{true, {}, {}};
  int rows = 0;
  for (const GradCheckRow& r : gradcheck_suite(20, 0)) {
    ++rows;
    out.pass = out.pass && r.passed() && r.seeds >= 20;
    if (!r.passed()) out.notes.push_back(fmt("%s: %.3g >= %.0e", r.op.c_str(), r.max_error, r.threshold));
  }
  const GradCheckRow m = gradcheck_model(ModelConfig::desk(), variant_from_name("standard"), 1);
  out.pass = out.pass && m.max_error < 1e-3;
  const double t = seconds_since(t0);
  out.pass = out.pass && t < 120.0;
  out.detail = fmt("%d ops x 20 seeds, desk standard model rel err %.2e (< 1e-3), %.0fs (< 120s)", rows,
                   m.max_error, t);
  return out;
}

// 2. Layout stage extents at full width, every variant at desk width.
Outcome shapes() {
  const auto t0 = Clock::now();
  Outcome out{true, {}, {}};
  const ModelConfig full = ModelConfig::full();
  LayoutNet net(full, variant_from_name("nl"), 1);
  Tape tape;
  const LayoutOutput lo = net.forward(tape.constant(Tensor({1, 2, full.resolution, full.resolution})),
                                      tape.constant(Tensor({1, full.embedding_dim})), StageTaps{}, nullptr,
                                      Mode::kEval);
  const Shape want[] = {{256, 56, 56}, {512, 28, 28}, {1024, 14, 14}, {2048, 7, 7}};
  std::ostringstream got;
  for (int i = 0; i < 3; ++i) {
    const Shape& s = lo.ports[i]->shape();
    const Shape chw{s[1], s[2], s[3]};
    out.pass = out.pass && chw == want[i];
    got << s[2] << 'x' << s[3] << 'x' << s[1] << ' ';
  }
  const Shape last = LayoutNet::stage_shapes(full)[3];
  out.pass = out.pass && last == want[3] && lo.f1.shape() == Shape{1, 2048};
  got << last[1] << 'x' << last[2] << 'x' << last[0] << " GAP " << lo.f1.shape()[1];

  const ModelConfig desk = ModelConfig::desk();
  const PairBatch b = random_batch(desk, 2, 5);
  int ran = 0;
  for (std::string_view name : variant_names()) {
    const VariantSpec v = variant_from_name(name);
    Model m(desk, v, 2);
    Tape t;
    const ForwardResult r = m.forward(t, b, Mode::kTrain);
    const bool ok = r.p2.shape() == Shape{2, desk.num_predicates} && r.p2.value().all_finite() &&
                    r.p1.has_value() == v.priming && r.lateral_calls == v.connection_count();
    if (!ok) out.notes.push_back("variant " + std::string(name) + " failed");
    out.pass = out.pass && ok;
    ran += ok;
  }
  const double t = seconds_since(t0);
  out.pass = out.pass && ran == 14 && t < 60.0;
  out.detail = fmt("stages %s, %d/14 variants at desk width, %.0fs (< 60s)", got.str().c_str(), ran, t);
  return out;
}

// 3. Greedy matcher and all-point AP against exhaustive enumeration.
Outcome evaluator() {
  Rng rng(2024);
  int mismatches = 0, contested = 0;
  double worst = 0.0;
  for (int c = 0; c < 500; ++c) {
    const int ngt = rng.uniform_int(1, 3), nd = rng.uniform_int(1, 5);
    auto box = [&] {
      const float x = static_cast<float>(rng.uniform(0, 20)), y = static_cast<float>(rng.uniform(0, 20));
      return BoxF{x, y, x + static_cast<float>(rng.uniform(5, 15)), y + static_cast<float>(rng.uniform(5, 15))};
    };
    auto jitter = [&](BoxF bx) {
      const float e = static_cast<float>(rng.normal(0, 1.5));
      return BoxF{bx.x1 + e, bx.y1 + e, bx.x2 + e, bx.y2 + e};
    };
    std::vector<GtInstance> gts;
    std::vector<TripletDetection> dets;
    for (int i = 0; i < ngt; ++i) gts.push_back({"s", box(), box(), 0});
    for (int i = 0; i < nd; ++i) {
      TripletDetection d{"s", box(), box(), 0, rng.uniform()};
      if (rng.bernoulli(0.7)) {
        const GtInstance& g = gts[rng.uniform_int(0, ngt - 1)];
        d.human = jitter(g.human);
        d.object = jitter(g.object);
      }
      dets.push_back(d);
    }
    bool multi = false;
    for (const TripletDetection& d : dets) {
      int n = 0;
      for (const GtInstance& g : gts) n += oracle::eligible(d, g, 0.5);
      multi = multi || n > 1;
    }
    contested += multi;
    const MatchResult m = match_class(dets, gts);
    const double err = std::abs(*average_precision(m.tp, m.n_gt) - oracle::brute_force_ap(dets, gts));
    worst = std::max(worst, err);
    mismatches += err > 1e-12;
  }
  const double flagged = *average_precision({true, false, true}, 2);
  const bool flag_ok = std::abs(flagged - 0.8333333333333334) < 1e-9;

  // Perfect detector over several scenes and classes.
  std::vector<GtInstance> gts;
  std::vector<TripletDetection> dets;
  for (int i = 0; i < 60; ++i) {
    const float x = static_cast<float>(rng.uniform(0, 50));
    const GtInstance g{"scene" + std::to_string(i % 9), {x, 0, x + 10, 20}, {x + 5, 5, x + 25, 15}, i % 6};
    gts.push_back(g);
    dets.push_back({g.scene_id, g.human, g.object, g.triplet, rng.uniform()});
  }
  std::vector<std::int64_t> gt_counts(6, 10), train_counts(6, 20);
  const EvalReport perfect = aggregate(per_class_ap(dets, gts, 6), gt_counts, train_counts);
  const bool perfect_ok = perfect.map_full && *perfect.map_full == 1.0;

  Outcome out;
  out.pass = mismatches == 0 && flag_ok && perfect_ok;
  out.detail = fmt("%d/500 cases differ from brute force (worst %.3g, %d contested), [TP,FP,TP] AP %.10f, "
                   "perfect mAP %.17g",
                   mismatches, worst, contested, flagged, perfect.map_full.value_or(-1.0));
  return out;
}

// Cells of pitch 1/n along one axis whose centre lies in [a, b].
std::int64_t centres_in(double a, double b, int n, int extent) {
  std::int64_t c = 0;
  for (int k = 0; k < extent * n; ++k) {
    const double x = (k + 0.5) / n;
    c += x >= a && x <= b;
  }
  return c;
}

// 4. IoU against a pixel-count oracle, IP coverage against area fractions.
Outcome geometry() {
  Rng rng(404);
  const int n = 256, extent = 64;
  double worst_iou = 0.0;
  auto box = [&] {
    const double w = rng.uniform(2, 30), h = rng.uniform(2, 30);
    const double x = rng.uniform(0, extent - w), y = rng.uniform(0, extent - h);
    return BoxF{static_cast<float>(x), static_cast<float>(y), static_cast<float>(x + w), static_cast<float>(y + h)};
  };
  for (int i = 0; i < 1000; ++i) {
    const BoxF a = box();
    BoxF b = box();
    if (i % 2 == 0) {
      // Overlapping pairs: b is a perturbed copy of a.
      const float dx = static_cast<float>(rng.uniform(-4, 4)), dy = static_cast<float>(rng.uniform(-4, 4));
      b = {std::max(0.0f, a.x1 + dx), std::max(0.0f, a.y1 + dy), std::min(64.0f, a.x2 + dx + 1),
           std::min(64.0f, a.y2 + dy + 1)};
    }
    const std::int64_t ca = centres_in(a.x1, a.x2, n, extent) * centres_in(a.y1, a.y2, n, extent);
    const std::int64_t cb = centres_in(b.x1, b.x2, n, extent) * centres_in(b.y1, b.y2, n, extent);
    const std::int64_t ci = centres_in(std::max(a.x1, b.x1), std::min(a.x2, b.x2), n, extent) *
                            centres_in(std::max(a.y1, b.y1), std::min(a.y2, b.y2), n, extent);
    const double grid = ci == 0 ? 0.0 : static_cast<double>(ci) / static_cast<double>(ca + cb - ci);
    worst_iou = std::max(worst_iou, std::abs(iou(a, b) - grid));
  }

  const int r = 64;
  double worst_cov = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BoxF h = box(), o = box();
    const InteractionPattern ip = rasterize_ip(h, o, r);
    const double ua = union_box(h, o).area();
    worst_cov = std::max(worst_cov, std::abs(ip.count(0) - h.area() / ua * r * r));
    worst_cov = std::max(worst_cov, std::abs(ip.count(1) - o.area() / ua * r * r));
  }
  Outcome out;
  out.pass = worst_iou < 1e-3 && worst_cov <= r;
  out.detail = fmt("IoU worst |err| %.2e over 1000 pairs (< 1e-3, grid pitch 1/%d), IP coverage worst %.1f "
                   "cells over 1000 pairs (<= R = %d)",
                   worst_iou, n, worst_cov, r);
  return out;
}

// 5. The standard desk model memorises 32 synthetic pairs.
Outcome overfit() {
  const auto t0 = Clock::now();
  DatasetOptions o;
  o.train_scenes = 20;
  o.test_scenes = 1;
  o.seed = 55;
  const Dataset ds = generate_dataset(o);
  const ModelConfig c = RunConfig{}.model_config(ds.spec, ds.embeddings.dim,
                                                 static_cast<int>(ds.train[0].detections[0].feature.size()));
  DatasetPairSource src(ds, c.resolution);
  if (src.size() < 32) return {false, fmt("only %zu pairs generated", src.size()), {}};
  std::vector<std::size_t> idx(32);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const PairBatch b = src.batch(idx);
  const double lr = TrainConfig::desk().lr0;
  Model m(c, variant_from_name("standard"), 5);
  auto params = m.parameters();
  const std::vector<float> w(c.num_predicates, 1.0f);
  double first = 0.0, last = 0.0;
  int reached = -1;
  for (int step = 0; step < 200; ++step) {
    Tape tape;
    const ForwardResult fr = m.forward(tape, b, Mode::kTrain);
    const JointLoss l = joint_loss<float>(fr.p1, fr.p2, b.target, w);
    if (step == 0) first = l.report.total;
    last = l.report.total;
    if (l.report.total < 0.05) {
      reached = step;
      break;
    }
    tape.backward(l.total);
    sgd_step(params, static_cast<float>(lr));
  }
  const double t = seconds_since(t0);
  Outcome out;
  out.pass = reached >= 0 && t < 180.0;
  out.detail = reached >= 0 ? fmt("loss %.3f -> %.4f after %d steps at lr %g (< 0.05 within 200), %.0fs (< 180s)",
                                  first, last, reached, lr, t)
                            : fmt("loss %.3f -> %.4f, not below 0.05 in 200 steps at lr %g, %.0fs", first, last,
                                  lr, t);
  return out;
}

// 6. The layout branch alone on a noiseless layout-separable benchmark.
Outcome layout_signal(const fs::path& work) {
  const auto t0 = Clock::now();
  RunConfig c;
  c.data_dir = (work / "c6" / "data").string();
  c.out_dir = (work / "c6" / "out").string();
  c.seed = 6;
  c.train_scenes = 285;
  c.test_scenes = 67;
  c.noise = "none";
  c.variant = "nl";
  c.model = "desk";
  c.epochs = 10;
  c.score = ScoreSource::kLayout;
  cmd_gen(c);
  const Dataset ds = load_dataset(c.data_dir);
  std::size_t train_pairs = 0, test_pairs = 0;
  for (const SceneRecord& r : ds.train) train_pairs += r.pairs->size();
  for (const SceneRecord& r : ds.test) test_pairs += test_pair_indices(r.detections).size();
  cmd_train(c);
  cmd_eval(c);
  const auto report = nlohmann::json::parse(read_text(fs::path(c.out_dir) / "report.json"));
  const double map = report.at("map_full").is_number() ? report.at("map_full").get<double>() : -1.0;
  const double t = seconds_since(t0);
  Outcome out;
  out.pass = map >= 0.90 && t < 600.0;
  out.detail = fmt("NL layout-branch mAP %.4f (>= 0.90), P=%d O=%d, %zu train / %zu test pairs, %d epochs, %.0fs "
                   "(< 600s)",
                   map, ds.spec.num_predicates(), ds.spec.num_objects(), train_pairs, test_pairs, c.epochs, t);
  return out;
}

// 7. Median ablation ordering over five seeds.
Outcome ablation_ordering() {
  const std::vector<std::string> variants{"standard", "np", "nl", "nc"};
  std::vector<std::vector<double>> maps(variants.size());
  Outcome out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig c;
    c.seed = seed;
    c.model = "tiny";
    c.train_scenes = 150;
    c.test_scenes = 200;
    c.noise = "moderate";
    c.appearance_predicate = true;
    c.epochs = 10;
    c.lr0 = 0.1;
    c.batch_size = 8;
    const Dataset ds = generate_dataset(c.dataset_options());
    std::string line = fmt("seed %d:", static_cast<int>(seed));
    for (std::size_t v = 0; v < variants.size(); ++v) {
      c.variant = variants[v];
      TrainOutput tr = train_run(c, ds);
      const auto dets = detect(*tr.model, ds, ScoreSource::kVisual);
      const double map = evaluate_run(c, ds, dets, std::nullopt).map_full.value_or(0.0);
      maps[v].push_back(map);
      line += fmt(" %s %.4f", variants[v].c_str(), map);
    }
    out.notes.push_back(line);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double s = median(maps[0]), np = median(maps[1]), nl = median(maps[2]), nc = median(maps[3]);
  struct Check {
    const char* name;
    double margin;
  };
  const Check checks[] = {{"Standard>=NP", s - np}, {"Standard>=NL", s - nl}, {"Standard>=NC", s - nc},
                          {"NP>=NC", np - nc}};
  out.pass = true;
  std::string verdicts;
  for (const Check& k : checks) {
    out.pass = out.pass && k.margin >= 0.0;
    verdicts += fmt(" %s %+.4f%s", k.name, k.margin, k.margin >= 0.0 ? "" : " (violated)");
  }
  out.detail = fmt("medians standard %.4f np %.4f nl %.4f nc %.4f;", s, np, nl, nc) + verdicts;
  return out;
}

// 8. Zero-shot composition against a score-shuffled baseline.
Outcome zero_shot() {
  RunConfig c;
  c.seed = 8;
  c.model = "tiny";
  c.train_scenes = 150;
  c.test_scenes = 200;
  c.noise = "moderate";
  c.epochs = 10;
  c.lr0 = 0.1;
  c.batch_size = 8;
  c.zero_shot = true;
  const Dataset ds = generate_dataset(c.dataset_options());
  TrainOutput tr = train_run(c, ds);
  const ZeroShotSplit& split = *tr.split;
  check_split(split, ds.spec.num_objects());
  const auto dets = detect(*tr.model, ds, ScoreSource::kVisual);
  std::set<int> scored;
  for (const TripletDetection& d : dets) scored.insert(d.triplet);
  int unseen_scored = 0;
  for (int t : split.unseen) unseen_scored += scored.count(t) > 0;
  const EvalReport report = evaluate_run(c, ds, dets, split);
  const EvalReport chance = evaluate_run(c, ds, shuffle_scores(dets, derive_seed(c.seed, "shuffled")), split);
  const double u = report.map_unseen().value_or(0.0), b = chance.map_unseen().value_or(0.0);
  const int classes = static_cast<int>(split.seen.size() + split.unseen.size());
  Outcome out;
  out.pass = unseen_scored == static_cast<int>(split.unseen.size()) && b > 0.0 && u > 3.0 * b;
  out.detail = fmt("withheld %zu of %d triplet classes (%zu of %zu training pairs kept), unseen mAP %.4f vs "
                   "shuffled %.4f (ratio %.2f, > 3), %d/%zu withheld classes scored",
                   split.unseen.size(), classes, tr.pairs, DatasetPairSource(ds, 32).size(), u, b,
                   b > 0 ? u / b : 0.0, unseen_scored, split.unseen.size());
  return out;
}

// 9. Byte-identical reports from a rerun of gen, train and eval.
Outcome determinism(const fs::path& work) {
  std::string reports[2], ckpts[2];
  for (int i = 0; i < 2; ++i) {
    RunConfig c;
    const fs::path root = work / "c9" / (i == 0 ? "a" : "b");
    fs::remove_all(root);
    c.data_dir = (root / "data").string();
    c.out_dir = (root / "out").string();
    c.seed = 9;
    c.model = "tiny";
    c.train_scenes = 30;
    c.test_scenes = 20;
    c.epochs = 3;
    c.lr0 = 0.1;
    c.batch_size = 8;
    c.zero_shot = true;
    cmd_gen(c);
    cmd_train(c);
    cmd_eval(c);
    reports[i] = read_text(root / "out" / "report.json");
    ckpts[i] = read_text(root / "out" / "model.ckpt");
  }
  Outcome out;
  out.pass = reports[0] == reports[1] && ckpts[0] == ckpts[1];
  out.detail = fmt("report.json %zu bytes %s, checkpoint %s", reports[0].size(),
                   reports[0] == reports[1] ? "identical" : "differs", ckpts[0] == ckpts[1] ? "identical" : "differs");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hoiprime acceptance checks"};
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--only", only, "Criteria to run")->delimiter(',')->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, gradients},
      {2, shapes},
      {3, evaluator},
      {4, geometry},
      {5, overfit},
      {6, [&] { return layout_signal(work); }},
      {7, ablation_ordering},
      {8, zero_shot},
      {9, [&] { return determinism(work); }},
  };
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what(), {}};
    }
    failed += !o.pass;
    std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    for (const std::string& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
