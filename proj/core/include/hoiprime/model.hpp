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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoiprime/autodiff.hpp"
#include "hoiprime/pairing.hpp"
#include "hoiprime/variant.hpp"

namespace hoiprime {

// Architecture widths. full() is the reference layout network (C1..C8 at
// 64/256/128/512/256/1024/512/2048, FC 1024/512, 224x224 input) with a
// ResNet-50 shaped visual base; desk() divides every width by 8.
struct ModelConfig {
  int resolution = 64;
  int num_predicates = 6;
  int num_objects = 4;
  int embedding_dim = 32;
  int det_feature_dim = 32;

  std::array<int, 8> layout_channels = {8, 32, 16, 64, 32, 128, 64, 256};
  int fc1 = 128;
  int fc2 = 64;

  int stem_channels = 8;
  std::vector<int> stage_mid = {8, 16, 32};
  std::vector<int> stage_blocks = {2, 2, 2};
  int expansion = 4;

  static ModelConfig full();
  static ModelConfig desk();
  // desk widths at 32x32 input with one residual block per stage.
  static ModelConfig tiny();

  int stage_out(int stage) const { return stage_mid.at(stage) * expansion; }
  int f1_dim() const { return layout_channels[7]; }
  int f2_dim() const { return stage_out(static_cast<int>(stage_mid.size()) - 1); }
  void validate() const;
};

// Spatial extent after a stride-2 layer with "same" padding.
inline int halve(int extent) { return (extent + 1) / 2; }

// Batched network inputs. Shapes: ip [N,2,R,R], crop [N,3,R,R],
// w_o [N,E], f_h/f_o [N,D], target [N,P] (may be empty).
struct PairBatch {
  Tensor ip;
  Tensor crop;
  Tensor w_o;
  Tensor f_h;
  Tensor f_o;
  Tensor target;

  int size() const { return ip.empty() ? 0 : ip.dim(0); }
};

PairBatch make_batch(std::span<const HoiPair> pairs);

template <typename T>
struct ConvBnT {
  ConvParamsT<T> conv;
  BatchNormParamsT<T> bn;
  VarT<T> forward(VarT<T> x, Mode mode, bool apply_relu = true);
};

template <typename T>
struct BottleneckT {
  ConvBnT<T> reduce;
  ConvBnT<T> spatial;
  ConvBnT<T> expand;
  std::optional<ConvBnT<T>> projection;
  VarT<T> forward(VarT<T> x, Mode mode);
};

template <typename T>
struct MlpHeadT {
  LinearParamsT<T> fc1;
  LinearParamsT<T> fc2;
  LinearParamsT<T> out;
  VarT<T> forward(VarT<T> x);
  int in_features() const { return fc1.in_features(); }
};

// Activation maps exchanged at the three lateral points.
template <typename T>
using StageTapsT = std::array<std::optional<VarT<T>>, 3>;

// Lateral 1x1 (or 3x3) convolutions. Additive mode computes
// receiver + conv(tap); concat mode computes conv([receiver, tap]) with the
// conv reducing back to the receiver's channel count.
template <typename T>
class LateralBankT {
 public:
  LateralBankT() = default;
  LateralBankT(const ModelConfig& config, const VariantSpec& variant, std::uint64_t seed);

  bool active(int index) const { return convs_[index].has_value(); }
  VarT<T> apply(int index, VarT<T> receiver, VarT<T> tap);
  int calls() const { return calls_; }
  void reset_calls() { calls_ = 0; }
  ConvParamsT<T>* conv(int index) { return convs_[index] ? &*convs_[index] : nullptr; }
  void collect(std::vector<ParameterT<T>*>& out);

 private:
  std::array<std::optional<ConvParamsT<T>>, 3> convs_;
  LateralMode mode_ = LateralMode::kNone;
  int calls_ = 0;
};

template <typename T>
struct LayoutOutputT {
  VarT<T> f1;
  std::optional<VarT<T>> p1;
  StageTapsT<T> ports;  // activations after stages 1..3 (post lateral)
};

// Shallow eight-layer layout network over the two-channel interaction
// pattern. Each conv is followed by batch norm and ReLU.
template <typename T>
class LayoutNetT {
 public:
  LayoutNetT() = default;
  LayoutNetT(const ModelConfig& config, const VariantSpec& variant, std::uint64_t seed);

  // taps must hold a map for every connection the bank receives; the
  // bank is null when the layout branch receives nothing.
  LayoutOutputT<T> forward(VarT<T> ip, std::optional<VarT<T>> w_o, const StageTapsT<T>& taps, LateralBankT<T>* bank,
                       Mode mode);
  // Output extents [C,H,W] after each of the four stages, without running.
  static std::array<Shape, 4> stage_shapes(const ModelConfig& config);

  bool has_head() const { return head_.has_value(); }
  MlpHeadT<T>* head() { return head_ ? &*head_ : nullptr; }
  void collect(std::vector<ParameterT<T>*>& params, std::vector<BatchNormParamsT<T>*>& norms);

 private:
  std::array<ConvBnT<T>, 8> convs_;
  std::optional<MlpHeadT<T>> head_;
  bool use_w_o_ = true;
  int embedding_dim_ = 0;
};

template <typename T>
struct VisualBaseOutputT {
  VarT<T> f2;
  StageTapsT<T> taps;
};

// Residual visual network over the union crop plus the fusion head.
template <typename T>
class VisualNetT {
 public:
  VisualNetT() = default;
  VisualNetT(const ModelConfig& config, const VariantSpec& variant, std::uint64_t seed);

  VisualBaseOutputT<T> base(VarT<T> crop, const StageTapsT<T>& incoming, LateralBankT<T>* bank, Mode mode);
  // Head over concat(f2, prior, f_h, f_o) restricted to the enabled parts.
  VarT<T> head(VarT<T> f2, std::optional<VarT<T>> prior, std::optional<VarT<T>> f_h, std::optional<VarT<T>> f_o);
  static std::vector<Shape> stage_shapes(const ModelConfig& config);

  MlpHeadT<T>& mlp() { return head_; }
  int prior_dim() const { return prior_dim_; }
  int head_input_dim() const { return head_.in_features(); }
  void collect(std::vector<ParameterT<T>*>& params, std::vector<BatchNormParamsT<T>*>& norms);

 private:
  ConvBnT<T> stem_;
  std::vector<std::vector<BottleneckT<T>>> stages_;
  MlpHeadT<T> head_;
  int f2_dim_ = 0;
  int prior_dim_ = 0;
  int det_dim_ = 0;
  bool use_fh_fo_ = true;
};

template <typename T>
struct ForwardResultT {
  std::optional<VarT<T>> p1;  // absent without priming
  VarT<T> p2;
  VarT<T> f1;
  VarT<T> f2;
  int lateral_calls = 0;
};

template <typename T>
class ModelT {
 public:
  ModelT(ModelConfig config, VariantSpec variant, std::uint64_t seed);
  ModelT(const ModelT&) = delete;
  ModelT& operator=(const ModelT&) = delete;

  ForwardResultT<T> forward(TapeT<T>& tape, const PairBatch& batch, Mode mode);

  const ModelConfig& config() const { return config_; }
  const VariantSpec& variant() const { return variant_; }
  LayoutNetT<T>& layout() { return layout_; }
  VisualNetT<T>& visual() { return visual_; }
  LateralBankT<T>& laterals() { return laterals_; }

  std::vector<ParameterT<T>*> parameters();
  std::vector<BatchNormParamsT<T>*> norms();
  std::size_t parameter_count();

 private:
  ModelConfig config_;
  VariantSpec variant_;
  LayoutNetT<T> layout_;
  VisualNetT<T> visual_;
  LateralBankT<T> laterals_;
};

using ConvBn = ConvBnT<float>;
using Bottleneck = BottleneckT<float>;
using MlpHead = MlpHeadT<float>;
using StageTaps = StageTapsT<float>;
using LateralBank = LateralBankT<float>;
using LayoutOutput = LayoutOutputT<float>;
using LayoutNet = LayoutNetT<float>;
using VisualBaseOutput = VisualBaseOutputT<float>;
using VisualNet = VisualNetT<float>;
using ForwardResult = ForwardResultT<float>;
using Model = ModelT<float>;
using ModelD = ModelT<double>;

std::unique_ptr<Model> build_model(const ModelConfig& config, const VariantSpec& variant,
                                   std::uint64_t seed);

// FC widths for an enlarged head with in_features inputs whose parameter
// count is closest to that of a (fc1, fc2) head over reference_in inputs.
std::pair<int, int> enlarged_head_widths(int reference_in, int in_features, int fc1, int fc2,
                                         int outputs);

}  // namespace hoiprime
