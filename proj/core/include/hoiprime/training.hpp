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
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hoiprime/errors.hpp"
#include "hoiprime/model.hpp"

namespace hoiprime {

class TrainingError : public Error {
 public:
  using Error::Error;
};

struct TrainConfig {
  int epochs = 10;
  double lr0 = 0.1;
  int decay_every = 3;
  double decay_factor = 0.1;
  int batch_size = 32;
  std::uint64_t seed = 0;

  // Schedule for full-width training. The desk preset shares its lr0.
  static TrainConfig full_scale();
  static TrainConfig desk() { return TrainConfig{}; }

  // lr0 * decay_factor ^ floor(epoch / decay_every)
  double lr_at(int epoch) const;
  void validate() const;
};

struct LossReport {
  std::optional<double> j1;  // layout branch, absent without priming
  double j2 = 0.0;           // visual branch
  double total = 0.0;
};

// w_p proportional to 1 / max(count_p, 1), normalised to mean 1.
std::vector<float> class_weights(std::span<const std::int64_t> counts);

template <typename T>
struct JointLossT {
  VarT<T> total;
  LossReport report;
};
using JointLoss = JointLossT<float>;

// Sum of the weighted BCE of each branch present.
template <typename T>
JointLossT<T> joint_loss(std::optional<VarT<T>> p1, VarT<T> p2, const TensorT<T>& target,
                         std::span<const float> weights);

// Random-access pair collection the training loop batches from.
class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual std::size_t size() const = 0;
  virtual PairBatch batch(std::span<const std::size_t> indices) const = 0;
};

class VectorPairSource : public PairSource {
 public:
  explicit VectorPairSource(std::vector<HoiPair> pairs) : pairs_(std::move(pairs)) {}
  std::size_t size() const override { return pairs_.size(); }
  PairBatch batch(std::span<const std::size_t> indices) const override;
  const std::vector<HoiPair>& pairs() const { return pairs_; }

 private:
  std::vector<HoiPair> pairs_;
};

struct EpochRecord {
  int epoch = 0;
  std::optional<double> j1;
  double j2 = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

struct StepRecord {
  int epoch = 0;
  int batch = 0;
  int step = 0;
  double lr = 0.0;
  LossReport loss;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int steps = 0;
};

using StepCallback = std::function<void(const StepRecord&)>;

// Plain SGD with the step schedule; each epoch visits a permutation drawn
// from derive_seed(seed, epoch). A trailing batch of one pair is merged
// into the previous batch so batch statistics stay defined.
TrainResult train(const PairSource& data, Model& model, const TrainConfig& config,
                  std::span<const float> weights, const StepCallback& on_step = {});

// Batch index lists for one epoch.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, int batch_size,
                                                    std::uint64_t seed, int epoch);

// epoch,j1,j2,total,lr (j1 empty when absent).
void write_loss_csv(std::ostream& os, std::span<const EpochRecord> history);

}  // namespace hoiprime
