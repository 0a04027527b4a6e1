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
#include "hoiprime/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "hoiprime/errors.hpp"
#include "hoiprime/rng.hpp"

namespace hoiprime {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
void require_rank(const TensorT<T>& t, int rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_to_string(t.shape()));
  }
}

struct ConvGeometry {
  int channels, height, width, kh, kw, stride, pad, out_h, out_w;
};

// Unfolds one image [C,H,W] into columns [C*kh*kw, Ho*Wo].
template <typename T>
void im2col(const T* img, const ConvGeometry& g, T* cols) {
  const int plane = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        T* row = cols + ((c * g.kh + ki) * g.kw + kj) * static_cast<std::size_t>(plane);
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = img + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters columns back, accumulating into img.
template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* img) {
  const int plane = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        const T* row = cols + ((c * g.kh + ki) * g.kw + kj) * static_cast<std::size_t>(plane);
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.height) continue;
          T* dst = img + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
          const T* src = row + oy * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
T stable_sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

template <typename T>
VarT<T> TapeT<T>::push(Node node) {
  if (consumed_) throw StateError("cannot record on a tape that has already been swept");
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
VarT<T> TapeT<T>::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename T>
VarT<T> TapeT<T>::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

template <typename T>
VarT<T> TapeT<T>::parameter(ParameterT<T>& param) {
  if (!param.grad.same_shape(param.value)) param.grad = Tensor::zeros_like(param.value);
  Node n;
  n.external = &param.value;
  n.grad_target = &param.grad;
  n.requires_grad = true;
  return push(std::move(n));
}

template <typename T>
VarT<T> TapeT<T>::record(Tensor value, bool requires_grad, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

template <typename T>
const TensorT<T>& TapeT<T>::value(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.external ? *n.external : n.value;
}

template <typename T>
TensorT<T>& TapeT<T>::grad_buffer(int id) {
  Node& n = nodes_.at(id);
  if (n.grad_target) return *n.grad_target;
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.external ? *n.external : n.value);
  return n.grad;
}

template <typename T>
void TapeT<T>::backward(Var loss) {
  if (consumed_) throw StateError("backward called twice on the same tape");
  if (value(loss).size() != 1) {
    throw ArgumentError("backward requires a scalar loss, got shape " +
                        shape_to_string(value(loss).shape()));
  }
  consumed_ = true;
  if (!nodes_.at(loss.id).requires_grad) return;
  grad_buffer(loss.id)[0] += T(1);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
    // Interior gradients are dead once propagated.
    n.grad = Tensor();
    n.backward = nullptr;
  }
}

// ---------------------------------------------------------------------------
// Layer construction

template <typename T>
ConvParamsT<T> make_conv(const std::string& name, int in_ch, int out_ch, int kernel, int stride,
                         std::uint64_t seed, int pad) {
  if (stride <= 0) throw ArgumentError("conv " + name + ": stride must be positive");
  ConvParamsT<T> p;
  TensorT<T> w({out_ch, in_ch, kernel, kernel});
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * kernel * kernel));
  for (T& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  p.weight = ParameterT<T>(name + ".weight", std::move(w));
  p.bias = ParameterT<T>(name + ".bias", TensorT<T>({out_ch}));
  p.stride = stride;
  p.pad = pad >= 0 ? pad : (kernel - 1) / 2;
  return p;
}

template <typename T>
BatchNormParamsT<T> make_batch_norm(const std::string& name, int channels) {
  BatchNormParamsT<T> p;
  p.gamma = ParameterT<T>(name + ".gamma", TensorT<T>({channels}, T(1)));
  p.beta = ParameterT<T>(name + ".beta", TensorT<T>({channels}));
  p.running_mean = TensorT<T>({channels}, T(0));
  p.running_var = TensorT<T>({channels}, T(1));
  return p;
}

template <typename T>
LinearParamsT<T> make_linear(const std::string& name, int in_features, int out_features,
                             std::uint64_t seed) {
  LinearParamsT<T> p;
  TensorT<T> w({out_features, in_features});
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  for (T& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  p.weight = ParameterT<T>(name + ".weight", std::move(w));
  p.bias = ParameterT<T>(name + ".bias", TensorT<T>({out_features}));
  return p;
}

// ---------------------------------------------------------------------------
// Operators

template <typename T>
VarT<T> conv2d(VarT<T> x, ConvParamsT<T>& p) {
  TapeT<T>& tape = *x.tape;
  const TensorT<T>& in = x.value();
  require_rank(in, 4, "conv2d");
  const TensorT<T>& w = p.weight.value;
  if (p.stride <= 0) throw ArgumentError("conv2d: stride must be positive");
  if (p.pad < 0) throw ArgumentError("conv2d: padding must be non-negative");
  if (w.rank() != 4 || w.dim(1) != in.dim(1) ||
      p.bias.value.size() != static_cast<std::size_t>(w.dim(0))) {
    throw ShapeError("conv2d: input " + shape_to_string(in.shape()) + " incompatible with weight " +
                     shape_to_string(w.shape()));
  }
  const int n = in.dim(0), o = w.dim(0);
  ConvGeometry g{in.dim(1), in.dim(2), in.dim(3), w.dim(2), w.dim(3), p.stride, p.pad, 0, 0};
  if (g.height + 2 * g.pad < g.kh || g.width + 2 * g.pad < g.kw) {
    throw ShapeError("conv2d: kernel " + shape_to_string(w.shape()) + " larger than padded input " +
                     shape_to_string(in.shape()));
  }
  g.out_h = (g.height + 2 * g.pad - g.kh) / g.stride + 1;
  g.out_w = (g.width + 2 * g.pad - g.kw) / g.stride + 1;
  const int k = g.channels * g.kh * g.kw;
  const int plane = g.out_h * g.out_w;
  const std::size_t image = static_cast<std::size_t>(g.channels) * g.height * g.width;
  const bool pointwise = g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pad == 0;

  TensorT<T> out({n, o, g.out_h, g.out_w});
  std::vector<T> cols;
  if (!pointwise) cols.resize(static_cast<std::size_t>(n) * k * plane);
  ConstMatrixMap<T> wm(w.data().data(), o, k);
  const T* bias = p.bias.value.data().data();
  for (int b = 0; b < n; ++b) {
    const T* colp = in.data().data() + b * image;
    if (!pointwise) {
      T* dst = cols.data() + static_cast<std::size_t>(b) * k * plane;
      im2col(colp, g, dst);
      colp = dst;
    }
    MatrixMap<T> om(out.data().data() + static_cast<std::size_t>(b) * o * plane, o, plane);
    om.noalias() = wm * ConstMatrixMap<T>(colp, k, plane);
    for (int oc = 0; oc < o; ++oc) om.row(oc).array() += bias[oc];
  }

  VarT<T> wv = tape.parameter(p.weight);
  VarT<T> bv = tape.parameter(p.bias);
  return tape.record(
      std::move(out), true,
      [x, wv, bv, cols = std::move(cols), n, o, g, k, plane, image, pointwise](
          TapeT<T>& t, const TensorT<T>& gy) {
        ConstMatrixMap<T> wm(t.value(wv).data().data(), o, k);
        MatrixMap<T> gwm(t.grad_buffer(wv.id).data().data(), o, k);
        TensorT<T>& gb = t.grad_buffer(bv.id);
        const bool input_grad = t.requires_grad(x);
        const T* in = t.value(x).data().data();
        std::vector<T> gcols(input_grad && !pointwise ? static_cast<std::size_t>(k) * plane : 0);
        for (int b = 0; b < n; ++b) {
          ConstMatrixMap<T> gym(gy.data().data() + static_cast<std::size_t>(b) * o * plane, o, plane);
          const T* colp = pointwise ? in + b * image : cols.data() + static_cast<std::size_t>(b) * k * plane;
          gwm.noalias() += gym * ConstMatrixMap<T>(colp, k, plane).transpose();
          for (int oc = 0; oc < o; ++oc) gb[oc] += gym.row(oc).sum();
          if (!input_grad) continue;
          T* gimg = t.grad_buffer(x.id).data().data() + b * image;
          if (pointwise) {
            MatrixMap<T>(gimg, k, plane).noalias() += wm.transpose() * gym;
          } else {
            MatrixMap<T>(gcols.data(), k, plane).noalias() = wm.transpose() * gym;
            col2im(gcols.data(), g, gimg);
          }
        }
      });
}

template <typename T>
VarT<T> batch_norm(VarT<T> x, BatchNormParamsT<T>& p, Mode mode) {
  TapeT<T>& tape = *x.tape;
  const TensorT<T>& in = x.value();
  require_rank(in, 4, "batch_norm");
  const int n = in.dim(0), c = in.dim(1), hw = in.dim(2) * in.dim(3);
  if (p.gamma.value.size() != static_cast<std::size_t>(c)) {
    throw ShapeError("batch_norm: input " + shape_to_string(in.shape()) + " has " +
                     std::to_string(c) + " channels, parameters have " +
                     std::to_string(p.gamma.value.size()));
  }
  const std::size_t m = static_cast<std::size_t>(n) * hw;
  if (mode == Mode::kTrain && m < 2) {
    throw ArgumentError("batch_norm: degenerate batch statistics for input " +
                        shape_to_string(in.shape()) + " (train mode needs N*H*W >= 2)");
  }
  TensorT<T> out(in.shape());
  std::vector<T> xhat(in.size());
  std::vector<double> inv_std(c);
  const T* src = in.data().data();
  for (int ch = 0; ch < c; ++ch) {
    double mean, var;
    if (mode == Mode::kTrain) {
      double s = 0.0;
      for (int b = 0; b < n; ++b) {
        const T* row = src + (static_cast<std::size_t>(b) * c + ch) * hw;
        for (int i = 0; i < hw; ++i) s += row[i];
      }
      mean = s / static_cast<double>(m);
      double sq = 0.0;
      for (int b = 0; b < n; ++b) {
        const T* row = src + (static_cast<std::size_t>(b) * c + ch) * hw;
        for (int i = 0; i < hw; ++i) {
          const double d = row[i] - mean;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(m);
      const double unbiased = sq / static_cast<double>(m - 1);
      const double mom = p.momentum;
      p.running_mean[ch] = static_cast<T>((1.0 - mom) * p.running_mean[ch] + mom * mean);
      p.running_var[ch] = static_cast<T>((1.0 - mom) * p.running_var[ch] + mom * unbiased);
    } else {
      mean = p.running_mean[ch];
      var = p.running_var[ch];
    }
    const double istd = 1.0 / std::sqrt(var + static_cast<double>(p.epsilon));
    inv_std[ch] = istd;
    const double gam = p.gamma.value[ch], bet = p.beta.value[ch];
    for (int b = 0; b < n; ++b) {
      const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * hw;
      for (int i = 0; i < hw; ++i) {
        const double xh = (src[off + i] - mean) * istd;
        xhat[off + i] = static_cast<T>(xh);
        out[off + i] = static_cast<T>(gam * xh + bet);
      }
    }
  }
  VarT<T> gv = tape.parameter(p.gamma);
  VarT<T> bv = tape.parameter(p.beta);
  return tape.record(
      std::move(out), true,
      [x, gv, bv, xhat = std::move(xhat), inv_std = std::move(inv_std), n, c, hw, m,
       train = mode == Mode::kTrain](TapeT<T>& t, const TensorT<T>& gy) {
        const TensorT<T>& gamma = t.value(gv);
        TensorT<T>& gg = t.grad_buffer(gv.id);
        TensorT<T>& gbeta = t.grad_buffer(bv.id);
        const bool input_grad = t.requires_grad(x);
        for (int ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int b = 0; b < n; ++b) {
            const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * hw;
            for (int i = 0; i < hw; ++i) {
              sum_dy += gy[off + i];
              sum_dy_xhat += static_cast<double>(gy[off + i]) * xhat[off + i];
            }
          }
          gg[ch] += static_cast<T>(sum_dy_xhat);
          gbeta[ch] += static_cast<T>(sum_dy);
          if (!input_grad) continue;
          TensorT<T>& gx = t.grad_buffer(x.id);
          const double scale = static_cast<double>(gamma[ch]) * inv_std[ch];
          const double mean_dy = sum_dy / static_cast<double>(m);
          const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(m);
          for (int b = 0; b < n; ++b) {
            const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * hw;
            for (int i = 0; i < hw; ++i) {
              const double d = train ? gy[off + i] - mean_dy - xhat[off + i] * mean_dy_xhat
                                     : static_cast<double>(gy[off + i]);
              gx[off + i] += static_cast<T>(scale * d);
            }
          }
        }
      });
}

template <typename T>
VarT<T> relu(VarT<T> x) {
  TapeT<T>& tape = *x.tape;
  TensorT<T> out = x.value();
  for (T& v : out.data()) v = v > T(0) ? v : T(0);
  return tape.record(std::move(out), tape.requires_grad(x), [x](TapeT<T>& t, const TensorT<T>& gy) {
    const TensorT<T>& in = t.value(x);
    TensorT<T>& gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < gy.size(); ++i) {
      if (in[i] > T(0)) gx[i] += gy[i];
    }
  });
}

template <typename T>
VarT<T> sigmoid(VarT<T> x) {
  TapeT<T>& tape = *x.tape;
  TensorT<T> out = x.value();
  for (T& v : out.data()) v = stable_sigmoid(v);
  const int id = static_cast<int>(tape.size());
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, id](TapeT<T>& t, const TensorT<T>& gy) {
                       const TensorT<T>& s = t.value(VarT<T>{&t, id});
                       TensorT<T>& gx = t.grad_buffer(x.id);
                       for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * s[i] * (T(1) - s[i]);
                     });
}

template <typename T>
VarT<T> max_pool(VarT<T> x, int kernel, int stride) {
  TapeT<T>& tape = *x.tape;
  const TensorT<T>& in = x.value();
  require_rank(in, 4, "max_pool");
  if (kernel <= 0 || stride <= 0) throw ArgumentError("max_pool: kernel and stride must be positive");
  const int n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
  if (kernel > h || kernel > w) {
    throw ShapeError("max_pool: window " + std::to_string(kernel) + " exceeds input " +
                     shape_to_string(in.shape()));
  }
  const int oh = (h - kernel) / stride + 1, ow = (w - kernel) / stride + 1;
  TensorT<T> out({n, c, oh, ow});
  std::vector<std::uint32_t> argmax(out.size());
  std::size_t o = 0;
  for (int plane = 0; plane < n * c; ++plane) {
    const std::size_t base = static_cast<std::size_t>(plane) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++o) {
        std::size_t best = base + static_cast<std::size_t>(oy * stride) * w + ox * stride;
        T best_v = in[best];
        for (int ky = 0; ky < kernel; ++ky) {
          for (int kx = 0; kx < kernel; ++kx) {
            const std::size_t idx = base + static_cast<std::size_t>(oy * stride + ky) * w + ox * stride + kx;
            if (in[idx] > best_v) {
              best_v = in[idx];
              best = idx;
            }
          }
        }
        out[o] = best_v;
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, argmax = std::move(argmax)](TapeT<T>& t, const TensorT<T>& gy) {
                       TensorT<T>& gx = t.grad_buffer(x.id);
                       for (std::size_t i = 0; i < gy.size(); ++i) gx[argmax[i]] += gy[i];
                     });
}

template <typename T>
VarT<T> global_avg_pool(VarT<T> x) {
  TapeT<T>& tape = *x.tape;
  const TensorT<T>& in = x.value();
  require_rank(in, 4, "global_avg_pool");
  const int n = in.dim(0), c = in.dim(1), hw = in.dim(2) * in.dim(3);
  TensorT<T> out({n, c});
  for (int i = 0; i < n * c; ++i) {
    double s = 0.0;
    for (int j = 0; j < hw; ++j) s += in[static_cast<std::size_t>(i) * hw + j];
    out[i] = static_cast<T>(s / hw);
  }
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, n, c, hw](TapeT<T>& t, const TensorT<T>& gy) {
                       TensorT<T>& gx = t.grad_buffer(x.id);
                       const T inv = T(1) / static_cast<T>(hw);
                       for (int i = 0; i < n * c; ++i) {
                         const T g = gy[i] * inv;
                         for (int j = 0; j < hw; ++j) gx[static_cast<std::size_t>(i) * hw + j] += g;
                       }
                     });
}

template <typename T>
VarT<T> linear(VarT<T> x, LinearParamsT<T>& p) {
  TapeT<T>& tape = *x.tape;
  const TensorT<T>& in = x.value();
  require_rank(in, 2, "linear");
  const int n = in.dim(0), i = in.dim(1), o = p.out_features();
  if (p.in_features() != i) {
    throw ShapeError("linear: input " + shape_to_string(in.shape()) + " incompatible with weight " +
                     shape_to_string(p.weight.value.shape()));
  }
  TensorT<T> out({n, o});
  MatrixMap<T> om(out.data().data(), n, o);
  om.noalias() = ConstMatrixMap<T>(in.data().data(), n, i) *
                 ConstMatrixMap<T>(p.weight.value.data().data(), o, i).transpose();
  for (int r = 0; r < n; ++r) {
    for (int col = 0; col < o; ++col) om(r, col) += p.bias.value[col];
  }
  VarT<T> wv = tape.parameter(p.weight);
  VarT<T> bv = tape.parameter(p.bias);
  return tape.record(std::move(out), true, [x, wv, bv, n, i, o](TapeT<T>& t, const TensorT<T>& gy) {
    ConstMatrixMap<T> gym(gy.data().data(), n, o);
    ConstMatrixMap<T> xm(t.value(x).data().data(), n, i);
    MatrixMap<T>(t.grad_buffer(wv.id).data().data(), o, i).noalias() += gym.transpose() * xm;
    TensorT<T>& gb = t.grad_buffer(bv.id);
    for (int col = 0; col < o; ++col) gb[col] += gym.col(col).sum();
    if (t.requires_grad(x)) {
      MatrixMap<T>(t.grad_buffer(x.id).data().data(), n, i).noalias() +=
          gym * ConstMatrixMap<T>(t.value(wv).data().data(), o, i);
    }
  });
}

template <typename T>
VarT<T> add(VarT<T> a, VarT<T> b) {
  TapeT<T>& tape = *a.tape;
  if (!a.value().same_shape(b.value())) {
    throw ShapeError("add: shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()) + " differ");
  }
  TensorT<T> out = a.value();
  out += b.value();
  const bool needs = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(std::move(out), needs, [a, b](TapeT<T>& t, const TensorT<T>& gy) {
    if (t.requires_grad(a)) t.grad_buffer(a.id) += gy;
    if (t.requires_grad(b)) t.grad_buffer(b.id) += gy;
  });
}

template <typename T>
VarT<T> concat(const std::vector<VarT<T>>& parts) {
  if (parts.empty()) throw ArgumentError("concat: no inputs");
  TapeT<T>& tape = *parts.front().tape;
  const Shape first = parts.front().shape();
  if (first.size() < 2) throw ShapeError("concat: inputs must have rank >= 2");
  const int n = first[0];
  std::size_t inner = 1;
  for (std::size_t d = 2; d < first.size(); ++d) inner *= first[d];
  int total = 0;
  bool needs = false;
  for (const VarT<T>& v : parts) {
    const Shape& s = v.shape();
    bool ok = s.size() == first.size() && s[0] == n;
    for (std::size_t d = 2; ok && d < s.size(); ++d) ok = s[d] == first[d];
    if (!ok) {
      throw ShapeError("concat: " + shape_to_string(s) + " incompatible with " + shape_to_string(first));
    }
    total += s[1];
    needs = needs || tape.requires_grad(v);
  }
  Shape out_shape = first;
  out_shape[1] = total;
  TensorT<T> out(out_shape);
  const std::size_t row = static_cast<std::size_t>(total) * inner;
  std::size_t offset = 0;
  for (const VarT<T>& v : parts) {
    const TensorT<T>& t = v.value();
    const std::size_t chunk = static_cast<std::size_t>(t.dim(1)) * inner;
    for (int b = 0; b < n; ++b) {
      std::copy_n(t.data().data() + b * chunk, chunk, out.data().data() + b * row + offset);
    }
    offset += chunk;
  }
  return tape.record(std::move(out), needs, [parts, n, inner, row](TapeT<T>& t, const TensorT<T>& gy) {
    std::size_t offset = 0;
    for (const VarT<T>& v : parts) {
      const std::size_t chunk = static_cast<std::size_t>(t.value(v).dim(1)) * inner;
      if (t.requires_grad(v)) {
        TensorT<T>& g = t.grad_buffer(v.id);
        for (int b = 0; b < n; ++b) {
          const T* src = gy.data().data() + b * row + offset;
          T* dst = g.data().data() + b * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
      offset += chunk;
    }
  });
}

template <typename T>
VarT<T> sum(VarT<T> x) {
  TapeT<T>& tape = *x.tape;
  double s = 0.0;
  for (T v : x.value().data()) s += v;
  return tape.record(TensorT<T>({1}, static_cast<T>(s)), tape.requires_grad(x),
                     [x](TapeT<T>& t, const TensorT<T>& gy) {
                       TensorT<T>& gx = t.grad_buffer(x.id);
                       for (T& g : gx.data()) g += gy[0];
                     });
}

template <typename T>
VarT<T> dot_constant(VarT<T> x, const TensorT<T>& w) {
  TapeT<T>& tape = *x.tape;
  if (!x.value().same_shape(w)) {
    throw ShapeError("dot_constant: shapes " + shape_to_string(x.shape()) + " and " +
                     shape_to_string(w.shape()) + " differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += static_cast<double>(x.value()[i]) * w[i];
  return tape.record(TensorT<T>({1}, static_cast<T>(s)), tape.requires_grad(x),
                     [x, w](TapeT<T>& t, const TensorT<T>& gy) {
                       TensorT<T>& gx = t.grad_buffer(x.id);
                       for (std::size_t i = 0; i < w.size(); ++i) gx[i] += gy[0] * w[i];
                     });
}

template <typename T>
VarT<T> weighted_bce(VarT<T> logits, const TensorT<T>& targets, std::span<const float> weights) {
  TapeT<T>& tape = *logits.tape;
  const TensorT<T>& z = logits.value();
  require_rank(z, 2, "weighted_bce");
  if (!z.same_shape(targets)) {
    throw ShapeError("weighted_bce: logits " + shape_to_string(z.shape()) + " vs targets " +
                     shape_to_string(targets.shape()));
  }
  const int n = z.dim(0), p = z.dim(1);
  if (weights.size() != static_cast<std::size_t>(p)) {
    throw ShapeError("weighted_bce: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(p) + " predicates");
  }
  for (float w : weights) {
    if (!(w > 0.0f)) throw ArgumentError("weighted_bce: weights must be strictly positive");
  }
  for (T t : targets.data()) {
    if (t != T(0) && t != T(1)) throw ArgumentError("weighted_bce: targets must be 0 or 1");
  }
  double loss = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < p; ++c) {
      const double zi = z[static_cast<std::size_t>(r) * p + c];
      const double ti = targets[static_cast<std::size_t>(r) * p + c];
      loss += weights[c] * (std::max(zi, 0.0) - zi * ti + std::log1p(std::exp(-std::abs(zi))));
    }
  }
  loss /= n;
  std::vector<T> w(weights.begin(), weights.end());
  return tape.record(TensorT<T>({1}, static_cast<T>(loss)), tape.requires_grad(logits),
                     [logits, targets, w = std::move(w), n, p](TapeT<T>& t, const TensorT<T>& gy) {
                       const TensorT<T>& z = t.value(logits);
                       TensorT<T>& gz = t.grad_buffer(logits.id);
                       const T scale = gy[0] / static_cast<T>(n);
                       for (int r = 0; r < n; ++r) {
                         for (int c = 0; c < p; ++c) {
                           const std::size_t i = static_cast<std::size_t>(r) * p + c;
                           gz[i] += scale * w[c] * (stable_sigmoid(z[i]) - targets[i]);
                         }
                       }
                     });
}

template <typename T>
void sgd_step(const std::vector<ParameterT<T>*>& params, T lr) {
  for (ParameterT<T>* p : params) {
    auto v = p->value.data();
    auto g = p->grad.data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    p->zero_grad();
  }
}

#define HOIPRIME_INSTANTIATE(T)                                                                   \
  template class TapeT<T>;                                                                       \
  template ConvParamsT<T> make_conv<T>(const std::string&, int, int, int, int, std::uint64_t, int); \
  template BatchNormParamsT<T> make_batch_norm<T>(const std::string&, int);                      \
  template LinearParamsT<T> make_linear<T>(const std::string&, int, int, std::uint64_t);         \
  template VarT<T> conv2d<T>(VarT<T>, ConvParamsT<T>&);                                          \
  template VarT<T> batch_norm<T>(VarT<T>, BatchNormParamsT<T>&, Mode);                           \
  template VarT<T> relu<T>(VarT<T>);                                                             \
  template VarT<T> sigmoid<T>(VarT<T>);                                                          \
  template VarT<T> max_pool<T>(VarT<T>, int, int);                                               \
  template VarT<T> global_avg_pool<T>(VarT<T>);                                                  \
  template VarT<T> linear<T>(VarT<T>, LinearParamsT<T>&);                                        \
  template VarT<T> add<T>(VarT<T>, VarT<T>);                                                     \
  template VarT<T> concat<T>(const std::vector<VarT<T>>&);                                       \
  template VarT<T> sum<T>(VarT<T>);                                                              \
  template VarT<T> dot_constant<T>(VarT<T>, const TensorT<T>&);                                  \
  template VarT<T> weighted_bce<T>(VarT<T>, const TensorT<T>&, std::span<const float>);          \
  template void sgd_step<T>(const std::vector<ParameterT<T>*>&, T);

HOIPRIME_INSTANTIATE(float)
HOIPRIME_INSTANTIATE(double)

#undef HOIPRIME_INSTANTIATE

}  // namespace hoiprime
