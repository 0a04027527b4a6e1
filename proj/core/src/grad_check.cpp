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
#include "hoiprime/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "hoiprime/errors.hpp"
#include "hoiprime/geometry.hpp"
#include "hoiprime/rng.hpp"
#include "hoiprime/training.hpp"

namespace hoiprime {

namespace {

constexpr int kMaxRedraws = 8;

double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

double evaluate(const ScalarFn& fn, const std::vector<TensorD>& inputs) {
  TapeD tape;
  std::vector<VarD> vars;
  vars.reserve(inputs.size());
  for (const TensorD& t : inputs) vars.push_back(tape.constant(t));
  return fn(tape, vars).value()[0];
}

struct Analytic {
  std::vector<TensorD> inputs;
  std::vector<TensorD> params;
};

Analytic analytic(const ScalarFn& fn, const std::vector<TensorD>& inputs,
                  const std::vector<ParameterD*>& params) {
  for (ParameterD* p : params) p->grad = TensorD::zeros_like(p->value);
  TapeD tape;
  std::vector<VarD> vars;
  for (const TensorD& t : inputs) vars.push_back(tape.input(t));
  VarD loss = fn(tape, vars);
  tape.backward(loss);
  Analytic out;
  for (VarD v : vars) out.inputs.push_back(tape.grad(v));
  for (ParameterD* p : params) {
    out.params.push_back(p->grad);
    p->zero_grad();
  }
  return out;
}

double central(const ScalarFn& fn, const std::vector<TensorD>& inputs, double& slot, double eps) {
  const double saved = slot;
  slot = saved + eps;
  const double up = evaluate(fn, inputs);
  slot = saved - eps;
  const double down = evaluate(fn, inputs);
  slot = saved;
  return (up - down) / (2.0 * eps);
}

TensorD random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TensorD t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so relu stays differentiable under eps.
TensorD away_from_zero(Shape shape, Rng& rng, double margin) {
  TensorD t(std::move(shape));
  for (double& v : t.data()) {
    do {
      v = rng.uniform(-1.0, 1.0);
    } while (std::abs(v) < margin);
  }
  return t;
}

// Distinct values on a grid spaced well above eps so window maxima are unique.
TensorD distinct_values(Shape shape, Rng& rng) {
  TensorD t(std::move(shape));
  std::vector<int> order(t.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::shuffle(order.begin(), order.end(), rng.engine());
  for (std::size_t i = 0; i < order.size(); ++i) t[i] = 0.05 * order[i] - 1.0;
  return t;
}

// Loss head with a fixed random projection so every output coordinate
// carries a distinct, non-zero upstream gradient.
VarD project(VarD y, std::uint64_t seed) {
  Rng rng(seed);
  return dot_constant(y, random_tensor(y.shape(), rng));
}

}  // namespace

double grad_check(const ScalarFn& fn, std::vector<TensorD> inputs, double eps,
                  const std::vector<ParameterD*>& params) {
  const Analytic a = analytic(fn, inputs, params);
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double n = central(fn, inputs, inputs[k][i], eps);
      worst = std::max(worst, rel_error(a.inputs[k][i], n));
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k]->value.size(); ++i) {
      const double n = central(fn, inputs, params[k]->value[i], eps);
      worst = std::max(worst, rel_error(a.params[k][i], n));
    }
  }
  return worst;
}

double grad_check_sampled(const ScalarFn& fn, std::vector<TensorD> inputs, double eps,
                          const std::vector<ParameterD*>& params, int per_tensor,
                          std::uint64_t seed) {
  if (per_tensor <= 0) throw ArgumentError("grad_check_sampled: per_tensor must be positive");
  const Analytic a = analytic(fn, inputs, params);
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const int size = static_cast<int>(params[k]->value.size());
    for (int s = 0; s < std::min(per_tensor, size); ++s) {
      // A coordinate whose perturbation crosses a relu or max-pool switch
      // gives step-size dependent differences; draw another one instead.
      for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        const int i = rng.uniform_int(0, size - 1);
        double& slot = params[k]->value[i];
        const double n = central(fn, inputs, slot, eps);
        const double half = central(fn, inputs, slot, 0.5 * eps);
        if (std::abs(n - half) > 1e-6 * std::max(std::abs(n), std::abs(half)) + 1e-9) continue;
        worst = std::max(worst, rel_error(a.params[k][i], n));
        break;
      }
    }
  }
  return worst;
}

std::vector<GradCheckRow> gradcheck_suite(int seeds, std::uint64_t base_seed) {
  if (seeds <= 0) throw ArgumentError("gradcheck_suite: seeds must be positive");
  constexpr double kEps = 1e-3;
  std::vector<GradCheckRow> rows = {
      {"conv2d 3x3 s1", 1e-4}, {"conv2d 3x3 s2", 1e-4}, {"conv2d 1x1", 1e-4},
      {"conv2d 7x7 s2", 1e-4}, {"batch_norm train", 1e-3}, {"batch_norm eval", 1e-3},
      {"relu", 1e-6},          {"sigmoid", 1e-4},       {"max_pool", 1e-4},
      {"global_avg_pool", 1e-5}, {"linear", 1e-4},      {"add", 1e-6},
      {"concat", 1e-6},        {"weighted_bce", 1e-4},  {"linear chain", 1e-4},
  };
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = derive_seed(base_seed, static_cast<std::uint64_t>(s));
    Rng rng(seed);
    const std::uint64_t proj = derive_seed(seed, "projection");
    std::size_t row = 0;
    auto record = [&](double err) {
      rows[row].max_error = std::max(rows[row].max_error, err);
      rows[row].seeds += 1;
      ++row;
    };
    auto conv_case = [&](Shape in, int out, int kernel, int stride) {
      auto p = make_conv<double>("gc", in[1], out, kernel, stride, derive_seed(seed, kernel));
      for (double& b : p.bias.value.data()) b = rng.uniform(-0.5, 0.5);
      ScalarFn fn = [&](TapeD&, const std::vector<VarD>& x) { return project(conv2d(x[0], p), proj); };
      record(grad_check(fn, {random_tensor(in, rng)}, kEps, {&p.weight, &p.bias}));
    };
    conv_case({1, 2, 8, 8}, 3, 3, 1);
    conv_case({2, 2, 7, 7}, 2, 3, 2);
    conv_case({2, 3, 4, 4}, 4, 1, 1);
    conv_case({1, 2, 9, 9}, 2, 7, 2);

    for (Mode mode : {Mode::kTrain, Mode::kEval}) {
      auto bn = make_batch_norm<double>("gc", 3);
      for (double& g : bn.gamma.value.data()) g = rng.uniform(0.5, 1.5);
      for (double& b : bn.beta.value.data()) b = rng.uniform(-0.5, 0.5);
      for (double& m : bn.running_mean.data()) m = rng.uniform(-0.5, 0.5);
      for (double& v : bn.running_var.data()) v = rng.uniform(0.5, 2.0);
      const TensorD mean = bn.running_mean, var = bn.running_var;
      ScalarFn fn = [&](TapeD&, const std::vector<VarD>& x) {
        // Keep eval-mode statistics fixed across the perturbed evaluations.
        bn.running_mean = mean;
        bn.running_var = var;
        return project(batch_norm(x[0], bn, mode), proj);
      };
      record(grad_check(fn, {random_tensor({2, 3, 4, 4}, rng, -2.0, 2.0)}, kEps,
                        {&bn.gamma, &bn.beta}));
    }

    record(grad_check([&](TapeD&, const std::vector<VarD>& x) { return project(relu(x[0]), proj); },
                      {away_from_zero({2, 3, 4}, rng, 10 * kEps)}, kEps));
    record(grad_check([&](TapeD&, const std::vector<VarD>& x) { return project(sigmoid(x[0]), proj); },
                      {random_tensor({2, 5}, rng, -4.0, 4.0)}, kEps));
    record(grad_check(
        [&](TapeD&, const std::vector<VarD>& x) { return project(max_pool(x[0], 2, 2), proj); },
        {distinct_values({1, 2, 6, 6}, rng)}, kEps));
    record(grad_check(
        [&](TapeD&, const std::vector<VarD>& x) { return project(global_avg_pool(x[0]), proj); },
        {random_tensor({2, 3, 3, 3}, rng)}, kEps));

    auto lin = make_linear<double>("gc", 4, 3, derive_seed(seed, "linear"));
    for (double& b : lin.bias.value.data()) b = rng.uniform(-0.5, 0.5);
    record(grad_check(
        [&](TapeD&, const std::vector<VarD>& x) { return project(linear(x[0], lin), proj); },
        {random_tensor({2, 4}, rng)}, kEps, {&lin.weight, &lin.bias}));

    record(grad_check(
        [&](TapeD&, const std::vector<VarD>& x) { return project(add(x[0], x[1]), proj); },
        {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)}, kEps));
    record(grad_check(
        [&](TapeD&, const std::vector<VarD>& x) { return project(concat(x), proj); },
        {random_tensor({2, 2, 2, 2}, rng), random_tensor({2, 3, 2, 2}, rng)}, kEps));

    TensorD targets({2, 4});
    for (double& t : targets.data()) t = rng.bernoulli(0.5) ? 1.0 : 0.0;
    std::vector<float> w(4);
    for (float& v : w) v = static_cast<float>(rng.uniform(0.2, 2.0));
    record(grad_check(
        [&](TapeD&, const std::vector<VarD>& x) { return weighted_bce(x[0], targets, w); },
        {random_tensor({2, 4}, rng, -3.0, 3.0)}, kEps));

    auto l1 = make_linear<double>("gc1", 3, 4, derive_seed(seed, "chain1"));
    auto l2 = make_linear<double>("gc2", 4, 2, derive_seed(seed, "chain2"));
    record(grad_check(
        [&](TapeD&, const std::vector<VarD>& x) { return project(linear(linear(x[0], l1), l2), proj); },
        {random_tensor({2, 3}, rng)}, kEps, {&l1.weight, &l1.bias, &l2.weight, &l2.bias}));
  }
  return rows;
}

GradCheckRow gradcheck_model(const ModelConfig& config, const VariantSpec& variant,
                             std::uint64_t seed, int per_tensor) {
  ModelD model(config, variant, derive_seed(seed, "init"));
  Rng rng(derive_seed(seed, "batch"));
  const int n = 2, r = config.resolution;
  PairBatch batch;
  batch.ip = Tensor({n, 2, r, r});
  batch.crop = Tensor({n, 3, r, r});
  batch.w_o = Tensor({n, config.embedding_dim});
  batch.f_h = Tensor({n, config.det_feature_dim});
  batch.f_o = Tensor({n, config.det_feature_dim});
  batch.target = Tensor({n, config.num_predicates});
  for (int i = 0; i < n; ++i) {
    auto box = [&] {
      const float x = static_cast<float>(rng.uniform(0, 40)), y = static_cast<float>(rng.uniform(0, 40));
      return BoxF{x, y, x + static_cast<float>(rng.uniform(8, 24)), y + static_cast<float>(rng.uniform(8, 24))};
    };
    const InteractionPattern ip = rasterize_ip(box(), box(), r);
    std::copy(ip.grid.data().begin(), ip.grid.data().end(),
              batch.ip.data().begin() + static_cast<std::size_t>(i) * 2 * r * r);
  }
  for (float& v : batch.crop.data()) v = static_cast<float>(rng.uniform(0, 1));
  for (Tensor* t : {&batch.w_o, &batch.f_h, &batch.f_o}) {
    for (float& v : t->data()) v = static_cast<float>(rng.uniform(-1, 1));
  }
  for (float& v : batch.target.data()) v = rng.bernoulli(0.4) ? 1.0f : 0.0f;
  std::vector<float> weights(config.num_predicates);
  for (float& w : weights) w = static_cast<float>(rng.uniform(0.5, 1.5));
  const TensorD target = batch.target.cast<double>();

  ScalarFn fn = [&](TapeD& tape, const std::vector<VarD>&) {
    ForwardResultT<double> fr = model.forward(tape, batch, Mode::kTrain);
    return joint_loss(fr.p1, fr.p2, target, weights).total;
  };
  GradCheckRow row{"model " + variant.name, 1e-3, 0.0, 1};
  row.max_error = grad_check_sampled(fn, {}, 1e-4, model.parameters(), per_tensor,
                                     derive_seed(seed, "coords"));
  return row;
}

}  // namespace hoiprime
