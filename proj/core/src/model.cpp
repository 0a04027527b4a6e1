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
#include "hoiprime/model.hpp"

#include <cmath>
#include <limits>

#include "hoiprime/errors.hpp"
#include "hoiprime/rng.hpp"

namespace hoiprime {

// ---------------------------------------------------------------------------
// Config

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.resolution = 224;
  c.num_predicates = 117;
  c.num_objects = 80;
  c.embedding_dim = 300;
  c.det_feature_dim = 2048;
  c.layout_channels = {64, 256, 128, 512, 256, 1024, 512, 2048};
  c.fc1 = 1024;
  c.fc2 = 512;
  c.stem_channels = 64;
  c.stage_mid = {64, 128, 256, 512};
  c.stage_blocks = {3, 4, 6, 3};
  return c;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.resolution = 32;
  c.stage_blocks = {1, 1, 1};
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw ArgumentError(std::string("model config: ") + what + " must be positive");
  };
  positive(resolution, "resolution");
  positive(num_predicates, "num_predicates");
  positive(num_objects, "num_objects");
  positive(embedding_dim, "embedding_dim");
  positive(det_feature_dim, "det_feature_dim");
  for (int c : layout_channels) positive(c, "layout channel width");
  positive(fc1, "fc1");
  positive(fc2, "fc2");
  positive(stem_channels, "stem_channels");
  positive(expansion, "expansion");
  if (stage_mid.empty() || stage_mid.size() != stage_blocks.size()) {
    throw ArgumentError("model config: stage_mid and stage_blocks must be non-empty and equal length");
  }
  for (int m : stage_mid) positive(m, "stage width");
  for (int b : stage_blocks) positive(b, "stage block count");
  if (resolution < 16) throw ArgumentError("model config: resolution must be at least 16");
}

// ---------------------------------------------------------------------------
// Building blocks

template <typename T>
VarT<T> ConvBnT<T>::forward(VarT<T> x, Mode mode, bool apply_relu) {
  VarT<T> y = batch_norm(conv2d(x, conv), bn, mode);
  return apply_relu ? relu(y) : y;
}

template <typename T>
VarT<T> BottleneckT<T>::forward(VarT<T> x, Mode mode) {
  VarT<T> y = reduce.forward(x, mode);
  y = spatial.forward(y, mode);
  y = expand.forward(y, mode, false);
  VarT<T> shortcut = projection ? projection->forward(x, mode, false) : x;
  return relu(add(y, shortcut));
}

template <typename T>
VarT<T> MlpHeadT<T>::forward(VarT<T> x) {
  VarT<T> h = relu(linear(x, fc1));
  h = relu(linear(h, fc2));
  return linear(h, out);
}

namespace {

template <typename T>
ConvBnT<T> make_conv_bn(const std::string& name, int in, int out, int kernel, int stride,
                    std::uint64_t seed) {
  return ConvBnT<T>{make_conv<T>(name + ".conv", in, out, kernel, stride, derive_seed(seed, name)),
                make_batch_norm<T>(name + ".bn", out)};
}

template <typename T>
MlpHeadT<T> make_head(const std::string& name, int in, int fc1, int fc2, int outputs,
                  std::uint64_t seed) {
  return MlpHeadT<T>{make_linear<T>(name + ".fc1", in, fc1, derive_seed(seed, name + ".fc1")),
                 make_linear<T>(name + ".fc2", fc1, fc2, derive_seed(seed, name + ".fc2")),
                 make_linear<T>(name + ".out", fc2, outputs, derive_seed(seed, name + ".out"))};
}

template <typename T>
void collect_conv_bn(ConvBnT<T>& cb, std::vector<ParameterT<T>*>& params,
                     std::vector<BatchNormParamsT<T>*>& norms) {
  params.push_back(&cb.conv.weight);
  params.push_back(&cb.conv.bias);
  params.push_back(&cb.bn.gamma);
  params.push_back(&cb.bn.beta);
  norms.push_back(&cb.bn);
}

template <typename T>
void collect_head(MlpHeadT<T>& h, std::vector<ParameterT<T>*>& params) {
  for (LinearParamsT<T>* l : {&h.fc1, &h.fc2, &h.out}) {
    params.push_back(&l->weight);
    params.push_back(&l->bias);
  }
}

std::size_t head_parameters(int in, int fc1, int fc2, int outputs) {
  return static_cast<std::size_t>(in) * fc1 + fc1 + static_cast<std::size_t>(fc1) * fc2 + fc2 +
         static_cast<std::size_t>(fc2) * outputs + outputs;
}

}  // namespace

std::pair<int, int> enlarged_head_widths(int reference_in, int in_features, int fc1, int fc2,
                                         int outputs) {
  const auto target = static_cast<double>(head_parameters(reference_in, fc1, fc2, outputs));
  std::pair<int, int> best{fc1, fc2};
  double best_gap = std::numeric_limits<double>::infinity();
  for (int h1 = 1; h1 <= 8 * fc1; ++h1) {
    const int h2 = std::max(1, static_cast<int>(std::lround(static_cast<double>(h1) * fc2 / fc1)));
    const double gap = std::abs(static_cast<double>(head_parameters(in_features, h1, h2, outputs)) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = {h1, h2};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Laterals

template <typename T>
LateralBankT<T>::LateralBankT(const ModelConfig& config, const VariantSpec& variant,
                         std::uint64_t seed)
    : mode_(variant.laterals) {
  if (variant.laterals == LateralMode::kNone) return;
  if (variant.lateral_kernel != 1 && variant.lateral_kernel != 3) {
    throw ArgumentError("lateral kernel must be 1 or 3");
  }
  const auto layout_shapes = LayoutNetT<T>::stage_shapes(config);
  const auto visual_shapes = VisualNetT<T>::stage_shapes(config);
  for (int i = 0; i < 3; ++i) {
    if (!variant.has_connection(i)) continue;
    const std::string where = "lateral connection " + std::to_string(i + 1);
    if (i >= static_cast<int>(visual_shapes.size())) {
      throw ShapeError(where + ": visual branch has only " + std::to_string(visual_shapes.size()) +
                       " residual stages");
    }
    const Shape& port = layout_shapes[i];
    const Shape& tap = visual_shapes[i];
    if (port[1] != tap[1] || port[2] != tap[2]) {
      throw ShapeError(where + ": visual tap " + shape_to_string(tap) +
                       " does not match layout port " + shape_to_string(port));
    }
    const bool to_layout = variant.direction == LateralDirection::kVisualToLayout;
    const int receiver = to_layout ? port[0] : tap[0];
    const int source = to_layout ? tap[0] : port[0];
    const int in = mode_ == LateralMode::kAdd ? source : receiver + source;
    const std::string name = "lateral" + std::to_string(i + 1);
    convs_[i] = make_conv<T>(name, in, receiver, variant.lateral_kernel, 1, derive_seed(seed, name));
  }
}

template <typename T>
VarT<T> LateralBankT<T>::apply(int index, VarT<T> receiver, VarT<T> tap) {
  ConvParamsT<T>* c = conv(index);
  if (!c) throw StateError("lateral connection " + std::to_string(index + 1) + " is not active");
  ++calls_;
  if (mode_ == LateralMode::kAdd) return add(receiver, conv2d(tap, *c));
  return conv2d(concat(std::vector<VarT<T>>{receiver, tap}), *c);
}

template <typename T>
void LateralBankT<T>::collect(std::vector<ParameterT<T>*>& out) {
  for (auto& c : convs_) {
    if (!c) continue;
    out.push_back(&c->weight);
    out.push_back(&c->bias);
  }
}

// ---------------------------------------------------------------------------
// Layout branch

template <typename T>
LayoutNetT<T>::LayoutNetT(const ModelConfig& config, const VariantSpec& variant, std::uint64_t seed)
    : use_w_o_(variant.use_w_o), embedding_dim_(config.embedding_dim) {
  const auto& ch = config.layout_channels;
  struct Spec {
    int in, out, kernel, stride;
  };
  const std::array<Spec, 8> specs = {{{2, ch[0], 7, 2},
                                      {ch[0], ch[1], 3, 1},
                                      {ch[1], ch[2], 1, 1},
                                      {ch[2], ch[3], 3, 2},
                                      {ch[3], ch[4], 1, 1},
                                      {ch[4], ch[5], 3, 2},
                                      {ch[5], ch[6], 1, 1},
                                      {ch[6], ch[7], 3, 2}}};
  for (int i = 0; i < 8; ++i) {
    convs_[i] = make_conv_bn<T>("layout.c" + std::to_string(i + 1), specs[i].in, specs[i].out,
                             specs[i].kernel, specs[i].stride, seed);
  }
  if (variant.priming) {
    const int in = ch[7] + (use_w_o_ ? config.embedding_dim : 0);
    head_ = make_head<T>("layout.head", in, config.fc1, config.fc2, config.num_predicates, seed);
  }
}

template <typename T>
std::array<Shape, 4> LayoutNetT<T>::stage_shapes(const ModelConfig& config) {
  const auto& ch = config.layout_channels;
  int s = halve(config.resolution);  // C1, stride 2
  s = (s - 2) / 2 + 1;               // max pool 2
  std::array<Shape, 4> shapes;
  shapes[0] = {ch[1], s, s};
  s = halve(s);
  shapes[1] = {ch[3], s, s};
  s = halve(s);
  shapes[2] = {ch[5], s, s};
  s = halve(s);
  shapes[3] = {ch[7], s, s};
  return shapes;
}

template <typename T>
LayoutOutputT<T> LayoutNetT<T>::forward(VarT<T> ip, std::optional<VarT<T>> w_o, const StageTapsT<T>& taps,
                                LateralBankT<T>* bank, Mode mode) {
  LayoutOutputT<T> out;
  VarT<T> x = convs_[0].forward(ip, mode);
  x = max_pool(x, 2, 2);
  for (int stage = 0; stage < 4; ++stage) {
    if (stage > 0) {
      x = convs_[2 * stage].forward(x, mode);
      x = convs_[2 * stage + 1].forward(x, mode);
    } else {
      x = convs_[1].forward(x, mode);
    }
    if (stage == 3) break;
    if (bank && bank->active(stage)) {
      if (!taps[stage]) {
        throw ArgumentError("layout branch: missing visual tap for lateral connection " +
                            std::to_string(stage + 1));
      }
      x = bank->apply(stage, x, *taps[stage]);
    }
    out.ports[stage] = x;
  }
  out.f1 = global_avg_pool(x);
  if (head_) {
    VarT<T> in = out.f1;
    if (use_w_o_) {
      if (!w_o) throw ArgumentError("layout branch: object embedding required");
      if (w_o->value().dim(1) != embedding_dim_) {
        throw ShapeError("layout branch: embedding " + shape_to_string(w_o->shape()) +
                         " does not have width " + std::to_string(embedding_dim_));
      }
      in = concat(std::vector<VarT<T>>{out.f1, *w_o});
    }
    out.p1 = head_->forward(in);
  }
  return out;
}

template <typename T>
void LayoutNetT<T>::collect(std::vector<ParameterT<T>*>& params, std::vector<BatchNormParamsT<T>*>& norms) {
  for (ConvBnT<T>& cb : convs_) collect_conv_bn(cb, params, norms);
  if (head_) collect_head(*head_, params);
}

// ---------------------------------------------------------------------------
// Visual branch

template <typename T>
VisualNetT<T>::VisualNetT(const ModelConfig& config, const VariantSpec& variant, std::uint64_t seed)
    : f2_dim_(config.f2_dim()),
      prior_dim_(variant.priming ? config.num_predicates : config.f1_dim()),
      det_dim_(config.det_feature_dim),
      use_fh_fo_(variant.use_fh_fo) {
  stem_ = make_conv_bn<T>("visual.stem", 3, config.stem_channels, 7, 2, seed);
  int in = config.stem_channels;
  for (std::size_t s = 0; s < config.stage_mid.size(); ++s) {
    const int mid = config.stage_mid[s];
    const int out = config.stage_out(static_cast<int>(s));
    std::vector<BottleneckT<T>> blocks;
    for (int b = 0; b < config.stage_blocks[s]; ++b) {
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      const std::string name = "visual.res" + std::to_string(s + 1) + "." + std::to_string(b);
      BottleneckT<T> block{make_conv_bn<T>(name + ".reduce", in, mid, 1, 1, seed),
                       make_conv_bn<T>(name + ".spatial", mid, mid, 3, stride, seed),
                       make_conv_bn<T>(name + ".expand", mid, out, 1, 1, seed),
                       std::nullopt};
      if (in != out || stride != 1) {
        block.projection = make_conv_bn<T>(name + ".projection", in, out, 1, stride, seed);
      }
      blocks.push_back(std::move(block));
      in = out;
    }
    stages_.push_back(std::move(blocks));
  }
  const int base_in = f2_dim_ + prior_dim_;
  const int full_in = base_in + 2 * det_dim_;
  int fc1 = config.fc1, fc2 = config.fc2;
  if (variant.enlarged_head && !use_fh_fo_) {
    std::tie(fc1, fc2) = enlarged_head_widths(full_in, base_in, config.fc1, config.fc2,
                                              config.num_predicates);
  }
  head_ = make_head<T>("visual.head", use_fh_fo_ ? full_in : base_in, fc1, fc2,
                    config.num_predicates, seed);
}

template <typename T>
std::vector<Shape> VisualNetT<T>::stage_shapes(const ModelConfig& config) {
  int s = halve(config.resolution);
  s = (s - 2) / 2 + 1;
  std::vector<Shape> shapes;
  for (std::size_t i = 0; i < config.stage_mid.size(); ++i) {
    if (i > 0) s = halve(s);
    shapes.push_back({config.stage_out(static_cast<int>(i)), s, s});
  }
  return shapes;
}

template <typename T>
VisualBaseOutputT<T> VisualNetT<T>::base(VarT<T> crop, const StageTapsT<T>& incoming, LateralBankT<T>* bank,
                                 Mode mode) {
  VisualBaseOutputT<T> out;
  VarT<T> x = max_pool(stem_.forward(crop, mode), 2, 2);
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    for (BottleneckT<T>& b : stages_[s]) x = b.forward(x, mode);
    if (s < 3) {
      if (bank && bank->active(static_cast<int>(s))) {
        if (!incoming[s]) {
          throw ArgumentError("visual branch: missing layout tap for lateral connection " +
                              std::to_string(s + 1));
        }
        x = bank->apply(static_cast<int>(s), x, *incoming[s]);
      }
      out.taps[s] = x;
    }
  }
  out.f2 = global_avg_pool(x);
  return out;
}

template <typename T>
VarT<T> VisualNetT<T>::head(VarT<T> f2, std::optional<VarT<T>> prior, std::optional<VarT<T>> f_h,
                    std::optional<VarT<T>> f_o) {
  auto check = [](const VarT<T>& v, int width, const char* what) {
    if (v.value().rank() != 2 || v.value().dim(1) != width) {
      throw ShapeError(std::string("visual head: ") + what + " " + shape_to_string(v.shape()) +
                       " does not have width " + std::to_string(width));
    }
  };
  check(f2, f2_dim_, "f2");
  std::vector<VarT<T>> parts = {f2};
  if (!prior) throw ArgumentError("visual head: prior input required");
  check(*prior, prior_dim_, "prior");
  parts.push_back(*prior);
  if (use_fh_fo_) {
    if (!f_h || !f_o) throw ArgumentError("visual head: detector features f_h and f_o required");
    check(*f_h, det_dim_, "f_h");
    check(*f_o, det_dim_, "f_o");
    parts.push_back(*f_h);
    parts.push_back(*f_o);
  } else if (f_h || f_o) {
    throw ArgumentError("visual head: variant does not use detector features");
  }
  return head_.forward(concat(parts));
}

template <typename T>
void VisualNetT<T>::collect(std::vector<ParameterT<T>*>& params, std::vector<BatchNormParamsT<T>*>& norms) {
  collect_conv_bn(stem_, params, norms);
  for (auto& stage : stages_) {
    for (BottleneckT<T>& b : stage) {
      collect_conv_bn(b.reduce, params, norms);
      collect_conv_bn(b.spatial, params, norms);
      collect_conv_bn(b.expand, params, norms);
      if (b.projection) collect_conv_bn(*b.projection, params, norms);
    }
  }
  collect_head(head_, params);
}

// ---------------------------------------------------------------------------
// ModelT<T>

PairBatch make_batch(std::span<const HoiPair> pairs) {
  if (pairs.empty()) throw ArgumentError("make_batch: no pairs");
  const int n = static_cast<int>(pairs.size());
  const int r = pairs.front().ip.resolution();
  const int e = static_cast<int>(pairs.front().w_o.size());
  const int d = static_cast<int>(pairs.front().human.feature.size());
  const int p = static_cast<int>(pairs.front().target.size());
  PairBatch b;
  b.ip = Tensor({n, 2, r, r});
  b.crop = Tensor({n, 3, r, r});
  b.w_o = Tensor({n, std::max(e, 1)});
  b.f_h = Tensor({n, std::max(d, 1)});
  b.f_o = Tensor({n, std::max(d, 1)});
  if (p > 0) b.target = Tensor({n, p});
  const std::size_t ip_size = 2u * r * r, crop_size = 3u * r * r;
  for (int i = 0; i < n; ++i) {
    const HoiPair& hp = pairs[i];
    if (hp.ip.resolution() != r || hp.w_o.size() != static_cast<std::size_t>(e) ||
        hp.human.feature.size() != static_cast<std::size_t>(d) ||
        hp.object.feature.size() != static_cast<std::size_t>(d) ||
        hp.target.size() != static_cast<std::size_t>(p)) {
      throw ShapeError("make_batch: pair " + std::to_string(i) + " differs in shape from pair 0");
    }
    std::copy_n(hp.ip.grid.data().data(), ip_size, b.ip.data().data() + i * ip_size);
    std::copy_n(hp.union_crop.data().data(), crop_size, b.crop.data().data() + i * crop_size);
    std::copy(hp.w_o.begin(), hp.w_o.end(), b.w_o.data().begin() + static_cast<std::size_t>(i) * e);
    std::copy(hp.human.feature.begin(), hp.human.feature.end(),
              b.f_h.data().begin() + static_cast<std::size_t>(i) * d);
    std::copy(hp.object.feature.begin(), hp.object.feature.end(),
              b.f_o.data().begin() + static_cast<std::size_t>(i) * d);
    if (p > 0) {
      std::copy(hp.target.begin(), hp.target.end(),
                b.target.data().begin() + static_cast<std::size_t>(i) * p);
    }
  }
  return b;
}

template <typename T>
ModelT<T>::ModelT(ModelConfig config, VariantSpec variant, std::uint64_t seed)
    : config_(std::move(config)), variant_(std::move(variant)) {
  config_.validate();
  layout_ = LayoutNetT<T>(config_, variant_, seed);
  visual_ = VisualNetT<T>(config_, variant_, seed);
  laterals_ = LateralBankT<T>(config_, variant_, seed);
}

template <typename T>
ForwardResultT<T> ModelT<T>::forward(TapeT<T>& tape, const PairBatch& batch, Mode mode) {
  const int r = config_.resolution;
  if (batch.ip.rank() != 4 || batch.ip.dim(1) != 2 || batch.ip.dim(2) != r || batch.ip.dim(3) != r) {
    throw ShapeError("model: interaction patterns " + shape_to_string(batch.ip.shape()) +
                     " do not match resolution " + std::to_string(r));
  }
  if (batch.crop.rank() != 4 || batch.crop.dim(0) != batch.ip.dim(0) || batch.crop.dim(1) != 3) {
    throw ShapeError("model: union crops " + shape_to_string(batch.crop.shape()) +
                     " do not match batch " + shape_to_string(batch.ip.shape()));
  }
  VarT<T> ip = tape.constant(batch.ip.template cast<T>());
  VarT<T> crop = tape.constant(batch.crop.template cast<T>());
  std::optional<VarT<T>> w_o, f_h, f_o;
  if (layout_.has_head() && variant_.use_w_o) w_o = tape.constant(batch.w_o.template cast<T>());
  if (variant_.use_fh_fo) {
    f_h = tape.constant(batch.f_h.template cast<T>());
    f_o = tape.constant(batch.f_o.template cast<T>());
  }
  laterals_.reset_calls();
  LayoutOutputT<T> lo;
  VisualBaseOutputT<T> vb;
  if (variant_.direction == LateralDirection::kVisualToLayout) {
    vb = visual_.base(crop, {}, nullptr, mode);
    lo = layout_.forward(ip, w_o, vb.taps, &laterals_, mode);
  } else {
    lo = layout_.forward(ip, w_o, {}, nullptr, mode);
    vb = visual_.base(crop, lo.ports, &laterals_, mode);
  }
  ForwardResultT<T> result;
  result.f1 = lo.f1;
  result.f2 = vb.f2;
  result.p1 = lo.p1;
  const VarT<T> prior = variant_.priming ? *lo.p1 : lo.f1;
  result.p2 = visual_.head(vb.f2, prior, f_h, f_o);
  result.lateral_calls = laterals_.calls();
  return result;
}

template <typename T>
std::vector<ParameterT<T>*> ModelT<T>::parameters() {
  std::vector<ParameterT<T>*> params;
  std::vector<BatchNormParamsT<T>*> norms;
  layout_.collect(params, norms);
  visual_.collect(params, norms);
  laterals_.collect(params);
  return params;
}

template <typename T>
std::vector<BatchNormParamsT<T>*> ModelT<T>::norms() {
  std::vector<ParameterT<T>*> params;
  std::vector<BatchNormParamsT<T>*> norms;
  layout_.collect(params, norms);
  visual_.collect(params, norms);
  return norms;
}

template <typename T>
std::size_t ModelT<T>::parameter_count() {
  std::size_t n = 0;
  for (ParameterT<T>* p : parameters()) n += p->value.size();
  return n;
}

std::unique_ptr<Model> build_model(const ModelConfig& config, const VariantSpec& variant,
                                   std::uint64_t seed) {
  return std::make_unique<Model>(config, variant, seed);
}

template struct ConvBnT<float>;
template struct ConvBnT<double>;
template struct BottleneckT<float>;
template struct BottleneckT<double>;
template struct MlpHeadT<float>;
template struct MlpHeadT<double>;
template class LateralBankT<float>;
template class LateralBankT<double>;
template class LayoutNetT<float>;
template class LayoutNetT<double>;
template class VisualNetT<float>;
template class VisualNetT<double>;
template class ModelT<float>;
template class ModelT<double>;

}  // namespace hoiprime
