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
#include <span>
#include <string>
#include <vector>

#include "hoiprime/tensor.hpp"

namespace hoiprime {

// Trainable tensor with its accumulated gradient.
template <typename T>
struct ParameterT {
  std::string name;
  TensorT<T> value;
  TensorT<T> grad;

  ParameterT() = default;
  ParameterT(std::string n, TensorT<T> v)
      : name(std::move(n)), value(std::move(v)), grad(TensorT<T>::zeros_like(value)) {}
  void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
class TapeT;

// Handle to a node recorded on a tape.
template <typename T>
struct VarT {
  TapeT<T>* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const TensorT<T>& value() const { return tape->value(*this); }
  const Shape& shape() const { return value().shape(); }
};

// Records forward operations and replays them in reverse for gradients.
// Nodes are appended in execution order, so the record is acyclic and a
// reverse sweep visits them in reverse topological order.
template <typename T>
class TapeT {
 public:
  using Var = VarT<T>;
  using Tensor = TensorT<T>;
  using BackwardFn = std::function<void(TapeT&, const Tensor& out_grad)>;

  TapeT() = default;
  TapeT(const TapeT&) = delete;
  TapeT& operator=(const TapeT&) = delete;

  // Leaf that never receives a gradient.
  Var constant(Tensor value);
  // Leaf whose gradient is kept and readable through grad().
  Var input(Tensor value);
  // Leaf bound to a parameter: backward accumulates into param.grad.
  Var parameter(ParameterT<T>& param);

  // Interior node produced by an operator.
  Var record(Tensor value, bool requires_grad, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  // Gradient of a node after backward(); zeros if it was never reached.
  const Tensor& grad(Var v) { return grad_buffer(v.id); }
  // Gradient buffer, allocated on first use. Operators accumulate here.
  Tensor& grad_buffer(int id);

  // Reverse sweep from a scalar node. A tape may be swept only once.
  void backward(Var loss);

  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;  // parameter value, not copied
    Tensor grad;
    Tensor* grad_target = nullptr;     // parameter gradient
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

template <typename T>
struct ConvParamsT {
  ParameterT<T> weight;  // [out_ch, in_ch, kh, kw]
  ParameterT<T> bias;    // [out_ch]
  int stride = 1;
  int pad = 0;

  int out_channels() const { return weight.value.dim(0); }
  int in_channels() const { return weight.value.dim(1); }
  int kernel_h() const { return weight.value.dim(2); }
  int kernel_w() const { return weight.value.dim(3); }
};

template <typename T>
struct BatchNormParamsT {
  ParameterT<T> gamma;  // [C]
  ParameterT<T> beta;   // [C]
  TensorT<T> running_mean;
  TensorT<T> running_var;
  T momentum = T(0.1);
  T epsilon = T(1e-5);
};

template <typename T>
struct LinearParamsT {
  ParameterT<T> weight;  // [out, in]
  ParameterT<T> bias;    // [out]

  int out_features() const { return weight.value.dim(0); }
  int in_features() const { return weight.value.dim(1); }
};

enum class Mode { kTrain, kEval };

// Fan-in scaled uniform weights, zero bias. Padding follows the kernel
// (7 -> 3, 3 -> 1, 1 -> 0) unless given.
template <typename T>
ConvParamsT<T> make_conv(const std::string& name, int in_ch, int out_ch, int kernel, int stride,
                         std::uint64_t seed, int pad = -1);
template <typename T>
BatchNormParamsT<T> make_batch_norm(const std::string& name, int channels);
template <typename T>
LinearParamsT<T> make_linear(const std::string& name, int in_features, int out_features,
                             std::uint64_t seed);

// Cross-correlation (no kernel flip) plus bias.
template <typename T>
VarT<T> conv2d(VarT<T> x, ConvParamsT<T>& p);
// Train mode normalises with batch statistics (biased variance) and
// updates the running estimates (unbiased variance); eval mode uses them.
template <typename T>
VarT<T> batch_norm(VarT<T> x, BatchNormParamsT<T>& p, Mode mode);
template <typename T>
VarT<T> relu(VarT<T> x);
template <typename T>
VarT<T> sigmoid(VarT<T> x);
// Ties go to the first maximum in row-major order.
template <typename T>
VarT<T> max_pool(VarT<T> x, int kernel, int stride);
template <typename T>
VarT<T> global_avg_pool(VarT<T> x);
template <typename T>
VarT<T> linear(VarT<T> x, LinearParamsT<T>& p);
template <typename T>
VarT<T> add(VarT<T> a, VarT<T> b);
// Concatenation along axis 1 ([N,*] vectors or [N,C,H,W] maps).
template <typename T>
VarT<T> concat(const std::vector<VarT<T>>& parts);
template <typename T>
VarT<T> sum(VarT<T> x);
// sum_i x_i * w_i for a constant w of the same shape.
template <typename T>
VarT<T> dot_constant(VarT<T> x, const TensorT<T>& w);
// Row mean of sum_p w_p * [max(z,0) - z t + log(1 + exp(-|z|))].
template <typename T>
VarT<T> weighted_bce(VarT<T> logits, const TensorT<T>& targets, std::span<const float> weights);

// theta <- theta - lr * grad, then clears the gradient.
template <typename T>
void sgd_step(const std::vector<ParameterT<T>*>& params, T lr);

using Parameter = ParameterT<float>;
using Var = VarT<float>;
using Tape = TapeT<float>;
using ConvParams = ConvParamsT<float>;
using BatchNormParams = BatchNormParamsT<float>;
using LinearParams = LinearParamsT<float>;

}  // namespace hoiprime
