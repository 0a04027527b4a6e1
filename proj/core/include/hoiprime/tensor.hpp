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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hoiprime/errors.hpp"

namespace hoiprime {

using Shape = std::vector<int>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);
// Throws ShapeError unless the shape is non-empty with positive extents.
void check_extents(const Shape& shape);

// Dense row-major array. Every extent is positive and the element count
// always equals the product of the extents. Instantiated for float (the
// training path) and double (gradient verification).
template <typename T>
class TensorT {
 public:
  using value_type = T;

  TensorT() = default;
  explicit TensorT(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
    check_extents(shape_);
    data_.assign(shape_numel(shape_), fill);
  }
  TensorT(Shape shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
    check_extents(shape_);
    if (data_.size() != shape_numel(shape_)) {
      throw ShapeError("tensor of shape " + shape_to_string(shape_) + " given " +
                       std::to_string(data_.size()) + " values");
    }
  }

  static TensorT zeros_like(const TensorT& other) {
    TensorT t;
    t.shape_ = other.shape_;
    t.data_.assign(other.data_.size(), T(0));
    return t;
  }

  template <typename U>
  TensorT<U> cast() const {
    return TensorT<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const {
    if (axis < 0) axis += rank();
    if (axis < 0 || axis >= rank()) {
      throw ShapeError("axis out of range for shape " + shape_to_string(shape_));
    }
    return shape_[axis];
  }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  // 4-d accessor for [N,C,H,W] tensors.
  T& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  T at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }
  TensorT reshaped(Shape shape) const {
    if (shape_numel(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    return TensorT(std::move(shape), data_);
  }
  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }
  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  TensorT& operator+=(const TensorT& other) {
    if (shape_ != other.shape_) {
      throw ShapeError("cannot accumulate " + shape_to_string(other.shape_) + " into " +
                       shape_to_string(shape_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

 private:
  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace hoiprime
