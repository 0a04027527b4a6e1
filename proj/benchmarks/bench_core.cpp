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
#include <benchmark/benchmark.h>

#include "hoiprime/evaluation.hpp"
#include "hoiprime/geometry.hpp"
#include "hoiprime/model.hpp"
#include "hoiprime/rng.hpp"
#include "hoiprime/variant.hpp"

namespace hoiprime {
namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

BoxF random_box(Rng& rng) {
  const float x = static_cast<float>(rng.uniform(0, 48)), y = static_cast<float>(rng.uniform(0, 48));
  return {x, y, x + static_cast<float>(rng.uniform(4, 16)), y + static_cast<float>(rng.uniform(4, 16))};
}

// Args: channels in, channels out, spatial extent, kernel.
void BM_ConvForward(benchmark::State& state) {
  const int in = static_cast<int>(state.range(0)), out = static_cast<int>(state.range(1));
  const int hw = static_cast<int>(state.range(2)), k = static_cast<int>(state.range(3));
  ConvParams p = make_conv<float>("bench", in, out, k, 1, 1);
  const Tensor x = random_tensor({8, in, hw, hw}, 2);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(conv2d(tape.constant(x), p).value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_ConvForward)->Args({2, 16, 64, 7})->Args({32, 32, 16, 3})->Args({64, 128, 8, 1});

void BM_ConvForwardBackward(benchmark::State& state) {
  const int in = static_cast<int>(state.range(0)), out = static_cast<int>(state.range(1));
  const int hw = static_cast<int>(state.range(2)), k = static_cast<int>(state.range(3));
  ConvParams p = make_conv<float>("bench", in, out, k, 1, 1);
  const Tensor x = random_tensor({8, in, hw, hw}, 2);
  for (auto _ : state) {
    Tape tape;
    tape.backward(sum(conv2d(tape.input(x), p)));
    p.weight.zero_grad();
    p.bias.zero_grad();
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_ConvForwardBackward)->Args({2, 16, 64, 7})->Args({32, 32, 16, 3});

void BM_Iou(benchmark::State& state) {
  Rng rng(3);
  std::vector<BoxF> boxes(1024);
  for (BoxF& b : boxes) b = random_box(rng);
  for (auto _ : state) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < boxes.size(); ++i) s += iou(boxes[i], boxes[i + 1]);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * 1023);
}
BENCHMARK(BM_Iou);

void BM_RasterizeIp(benchmark::State& state) {
  Rng rng(4);
  const BoxF h = random_box(rng), o = random_box(rng);
  const int r = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rasterize_ip(h, o, r).grid.data().data());
}
BENCHMARK(BM_RasterizeIp)->Arg(32)->Arg(64);

// One class with n detections over n/2 ground truths in 16 scenes.
void BM_ClassAp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(5);
  std::vector<GtInstance> gts;
  std::vector<TripletDetection> dets;
  for (int i = 0; i < n / 2; ++i) gts.push_back({"s" + std::to_string(i % 16), random_box(rng), random_box(rng), 0});
  for (int i = 0; i < n; ++i) {
    const GtInstance& g = gts[rng.uniform_int(0, n / 2 - 1)];
    dets.push_back({g.scene_id, g.human, rng.bernoulli(0.5) ? g.object : random_box(rng), 0, rng.uniform()});
  }
  for (auto _ : state) {
    const MatchResult m = match_class(dets, gts);
    benchmark::DoNotOptimize(average_precision(m.tp, m.n_gt));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ClassAp)->Arg(256)->Arg(2048);

void BM_ModelForward(benchmark::State& state) {
  const ModelConfig c = state.range(0) == 0 ? ModelConfig::tiny() : ModelConfig::desk();
  Model m(c, variant_from_name("standard"), 1);
  const int n = 8, r = c.resolution;
  PairBatch b;
  b.ip = random_tensor({n, 2, r, r}, 6);
  b.crop = random_tensor({n, 3, r, r}, 7);
  b.w_o = random_tensor({n, c.embedding_dim}, 8);
  b.f_h = random_tensor({n, c.det_feature_dim}, 9);
  b.f_o = random_tensor({n, c.det_feature_dim}, 10);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(m.forward(tape, b, Mode::kEval).p2.value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * n);
  state.SetLabel(state.range(0) == 0 ? "tiny" : "desk");
}
BENCHMARK(BM_ModelForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace hoiprime

BENCHMARK_MAIN();
