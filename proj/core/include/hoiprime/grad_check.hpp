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
#include <functional>
#include <string>
#include <vector>

#include "hoiprime/autodiff.hpp"
#include "hoiprime/model.hpp"

namespace hoiprime {

using TapeD = TapeT<double>;
using VarD = VarT<double>;
using ParameterD = ParameterT<double>;

// Builds a scalar from the given input nodes on a fresh tape.
using ScalarFn = std::function<VarD(TapeD&, const std::vector<VarD>&)>;

// Worst relative error |a - n| / max(|a|, |n|, 1e-8) between analytic and
// central-difference gradients, taken over every element of every input
// and every listed parameter. The function must be deterministic; any
// parameters it touches are read through the pointers given.
double grad_check(const ScalarFn& fn, std::vector<TensorD> inputs, double eps,
                  const std::vector<ParameterD*>& params = {});

// Same measure restricted to `per_tensor` random coordinates of each
// parameter, for models too large to perturb exhaustively. A coordinate
// whose differences at eps and eps/2 disagree sits next to a kink and is
// redrawn.
double grad_check_sampled(const ScalarFn& fn, std::vector<TensorD> inputs, double eps,
                          const std::vector<ParameterD*>& params, int per_tensor,
                          std::uint64_t seed);

struct GradCheckRow {
  std::string op;
  double threshold = 0.0;
  double max_error = 0.0;  // worst over all seeds
  int seeds = 0;

  bool passed() const { return max_error < threshold; }
};

// Every differentiable operator over `seeds` random draws.
std::vector<GradCheckRow> gradcheck_suite(int seeds, std::uint64_t base_seed = 0);

// Loss gradient of a whole model (double precision) on a random batch of
// two pairs, sampling `per_tensor` coordinates per parameter tensor.
GradCheckRow gradcheck_model(const ModelConfig& config, const VariantSpec& variant,
                             std::uint64_t seed, int per_tensor = 2);

}  // namespace hoiprime
