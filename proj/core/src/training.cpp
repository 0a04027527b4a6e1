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
#include "hoiprime/training.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hoiprime/rng.hpp"

namespace hoiprime {

TrainConfig TrainConfig::full_scale() {
  TrainConfig c;
  c.lr0 = 0.1;
  return c;
}

double TrainConfig::lr_at(int epoch) const {
  return lr0 * std::pow(decay_factor, epoch / decay_every);
}

void TrainConfig::validate() const {
  if (epochs <= 0 || decay_every <= 0 || batch_size <= 0) {
    throw ArgumentError("train config: epochs, decay_every and batch_size must be positive");
  }
  if (!(lr0 > 0.0) || !(decay_factor > 0.0)) {
    throw ArgumentError("train config: lr0 and decay_factor must be positive");
  }
}

std::vector<float> class_weights(std::span<const std::int64_t> counts) {
  if (counts.empty()) throw ArgumentError("class_weights: no predicates");
  bool any = false;
  for (auto c : counts) {
    if (c < 0) throw ArgumentError("class_weights: negative count");
    any = any || c > 0;
  }
  if (!any) throw ArgumentError("class_weights: every predicate count is zero");
  std::vector<double> inv(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    inv[i] = 1.0 / static_cast<double>(std::max<std::int64_t>(counts[i], 1));
  }
  const double mean = std::accumulate(inv.begin(), inv.end(), 0.0) / static_cast<double>(inv.size());
  std::vector<float> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) w[i] = static_cast<float>(inv[i] / mean);
  return w;
}

template <typename T>
JointLossT<T> joint_loss(std::optional<VarT<T>> p1, VarT<T> p2, const TensorT<T>& target,
                         std::span<const float> weights) {
  JointLossT<T> out;
  VarT<T> j2 = weighted_bce(p2, target, weights);
  out.report.j2 = j2.value()[0];
  if (p1) {
    VarT<T> j1 = weighted_bce(*p1, target, weights);
    out.report.j1 = j1.value()[0];
    out.total = add(j1, j2);
  } else {
    out.total = j2;
  }
  // Reported in double from the parts so the sum holds exactly.
  out.report.total = out.report.j2 + out.report.j1.value_or(0.0);
  return out;
}

template JointLossT<float> joint_loss<float>(std::optional<VarT<float>>, VarT<float>,
                                            const TensorT<float>&, std::span<const float>);
template JointLossT<double> joint_loss<double>(std::optional<VarT<double>>, VarT<double>,
                                               const TensorT<double>&, std::span<const float>);

PairBatch VectorPairSource::batch(std::span<const std::size_t> indices) const {
  std::vector<HoiPair> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) picked.push_back(pairs_.at(i));
  return make_batch(picked);
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, int batch_size,
                                                    std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(derive_seed(seed, "shuffle"), static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t end = std::min(count, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

TrainResult train(const PairSource& data, Model& model, const TrainConfig& config,
                  std::span<const float> weights, const StepCallback& on_step) {
  config.validate();
  if (data.size() == 0) throw ArgumentError("train: empty dataset");
  if (data.size() < 2) throw ArgumentError("train: need at least two pairs for batch statistics");
  TrainResult result;
  std::vector<Parameter*> params = model.parameters();
  for (Parameter* p : params) p->zero_grad();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.lr_at(epoch);
    const auto batches = epoch_batches(data.size(), config.batch_size, config.seed, epoch);
    double j1_sum = 0.0, j2_sum = 0.0, total_sum = 0.0;
    std::size_t seen = 0;
    bool has_j1 = false;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const PairBatch batch = data.batch(batches[b]);
      Tape tape;
      ForwardResult fr = model.forward(tape, batch, Mode::kTrain);
      JointLoss loss = joint_loss(fr.p1, fr.p2, batch.target, weights);
      if (!std::isfinite(loss.report.total)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch " << b << ", lr " << lr;
        throw TrainingError(msg.str());
      }
      tape.backward(loss.total);
      sgd_step(params, static_cast<float>(lr));
      const auto n = static_cast<double>(batch.size());
      if (loss.report.j1) {
        has_j1 = true;
        j1_sum += *loss.report.j1 * n;
      }
      j2_sum += loss.report.j2 * n;
      total_sum += loss.report.total * n;
      seen += batch.size();
      if (on_step) {
        on_step(StepRecord{epoch, static_cast<int>(b), result.steps, lr, loss.report});
      }
      ++result.steps;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    const auto denom = static_cast<double>(seen);
    if (has_j1) rec.j1 = j1_sum / denom;
    rec.j2 = j2_sum / denom;
    rec.total = total_sum / denom;
    result.history.push_back(rec);
  }
  return result;
}

void write_loss_csv(std::ostream& os, std::span<const EpochRecord> history) {
  os << "epoch,j1,j2,total,lr\n";
  char buf[256];
  for (const EpochRecord& r : history) {
    std::string j1;
    if (r.j1) {
      std::snprintf(buf, sizeof buf, "%.9g", *r.j1);
      j1 = buf;
    }
    std::snprintf(buf, sizeof buf, "%d,%s,%.9g,%.9g,%.9g\n", r.epoch, j1.c_str(), r.j2, r.total, r.lr);
    os << buf;
  }
}

}  // namespace hoiprime
