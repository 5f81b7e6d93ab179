/* Copyright 2026 The chgate Authors. All Rights Reserved.

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

#include "chgate/gatednet.hpp"

#include <cmath>
#include <stdexcept>

namespace chgate {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::size_t kBottleneckExpansion = 4;

std::size_t pooled_size(std::size_t s) { return (s + 2 - 3) / 2 + 1; }

}  // namespace

NetworkConfig NetworkConfig::preset(const std::string& name) {
  NetworkConfig c;
  c.name = name;
  if (name == "resnet18" || name == "resnet34" || name == "resnet50") {
    c.resolution = 224;
    c.classes = 1000;
    c.stem_channels = 64;
    c.stem_kernel = 7;
    c.stem_stride = 2;
    c.stem_pool = true;
    c.stage_widths = {64, 128, 256, 512};
    if (name == "resnet18") {
      c.blocks_per_stage = {2, 2, 2, 2};
    } else {
      c.blocks_per_stage = {3, 4, 6, 3};
    }
    c.block = name == "resnet50" ? BlockKind::kBottleneck : BlockKind::kBasic;
  } else if (name == "resnet20" || name == "resnet32") {
    const std::size_t n = name == "resnet20" ? 3 : 5;
    c.blocks_per_stage = {n, n, n};
  } else if (name == "desk8") {
    c.resolution = 16;
    c.stem_channels = 8;
    c.stage_widths = {8, 16, 32};
    c.blocks_per_stage = {3, 3, 2};
  } else {
    throw std::invalid_argument("unknown network preset '" + name +
                                "' (expected resnet18, resnet34, resnet50, resnet20, resnet32, desk8)");
  }
  return c;
}

void NetworkConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("network config: " + what); };
  if (stage_widths.empty()) fail("needs at least one stage");
  if (stage_widths.size() != blocks_per_stage.size()) {
    fail("stage_widths has " + std::to_string(stage_widths.size()) + " entries but blocks_per_stage has " +
         std::to_string(blocks_per_stage.size()));
  }
  for (std::size_t w : stage_widths)
    if (w == 0) fail("stage widths must be positive");
  for (std::size_t b : blocks_per_stage)
    if (b == 0) fail("every stage needs at least one block");
  if (in_channels == 0 || classes < 2 || resolution == 0) fail("need channels > 0, classes >= 2, resolution > 0");
  if (stem_channels == 0 || stem_kernel % 2 == 0 || stem_stride == 0) fail("invalid stem");
  if (width_multiplier == 0) fail("width multiplier must be positive");
  if (!(temperature > 0.0)) fail("temperature must be positive");
  for (const auto& b : blocks()) b.validate();
}

std::vector<GatedBlockConfig> NetworkConfig::blocks() const {
  std::vector<GatedBlockConfig> out;
  std::size_t size = (resolution + 2 * (stem_kernel / 2) - stem_kernel) / stem_stride + 1;
  if (stem_pool) size = pooled_size(size);
  std::size_t channels = stem_channels;
  for (std::size_t s = 0; s < stage_widths.size(); ++s) {
    for (std::size_t i = 0; i < blocks_per_stage[s]; ++i) {
      GatedBlockConfig b;
      b.kind = block;
      b.in_channels = channels;
      b.mid_channels = stage_widths[s] * width_multiplier;
      b.out_channels = block == BlockKind::kBottleneck ? stage_widths[s] * kBottleneckExpansion : stage_widths[s];
      b.kernel = 3;
      b.stride = (s > 0 && i == 0) ? 2 : 1;
      b.projection = b.needs_projection();
      b.gated = gated;
      b.in_height = size;
      b.in_width = size;
      out.push_back(b);
      size = b.out_height();
      channels = b.out_channels;
    }
  }
  return out;
}

std::size_t NetworkConfig::total_gates() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.gates();
  return n;
}

std::vector<std::size_t> NetworkConfig::gate_widths() const {
  std::vector<std::size_t> w;
  for (const auto& b : blocks())
    if (b.gated) w.push_back(b.gates());
  return w;
}

std::size_t NetworkConfig::main_conv_layers() const {
  std::size_t n = 1;
  for (const auto& b : blocks()) n += b.kind == BlockKind::kBottleneck ? 3 : 2;
  return n;
}

std::size_t NetworkConfig::feature_channels() const {
  return block == BlockKind::kBottleneck ? stage_widths.back() * kBottleneckExpansion : stage_widths.back();
}

MacReport mac_count(const NetworkConfig& config) {
  config.validate();
  using u64 = std::uint64_t;
  MacReport r;
  const std::size_t stem_size = (config.resolution + 2 * (config.stem_kernel / 2) - config.stem_kernel) /
                                    config.stem_stride + 1;
  const u64 stem_plane = static_cast<u64>(stem_size) * stem_size;
  r.stem = static_cast<u64>(config.in_channels) * config.stem_channels * config.stem_kernel *
           config.stem_kernel * stem_plane;
  r.aux_ops += 2 * config.stem_channels * stem_plane;
  if (config.stem_pool) r.aux_ops += 9 * config.stem_channels * pooled_size(stem_size) * pooled_size(stem_size);
  std::size_t last_plane = 0;
  for (const auto& b : config.blocks()) {
    const BlockMacs m = block_conv_macs(b);
    r.blocks += m.pre + m.gated();
    r.projections += m.projection;
    const u64 out_plane = static_cast<u64>(b.out_height()) * b.out_width();
    // BN + ReLU on each intermediate, BN on output and shortcut, add, ReLU.
    const u64 mids = b.kind == BlockKind::kBottleneck ? 2 : 1;
    r.aux_ops += mids * 2 * b.mid_channels * out_plane + 3 * b.out_channels * out_plane;
    if (b.projection) r.aux_ops += b.out_channels * out_plane;
    if (b.gated) {
      const GateOverhead o = gate_overhead_macs(b);
      r.gate_affine += o.affine_macs();
      r.aux_ops += o.pool_adds;
    }
    last_plane = out_plane;
  }
  r.aux_ops += config.feature_channels() * last_plane;
  r.classifier = static_cast<u64>(config.feature_channels()) * config.classes;
  return r;
}

std::uint64_t conditional_macs(const NetworkConfig& config, std::span<const std::size_t> active) {
  const auto blocks = config.blocks();
  if (active.size() != blocks.size()) {
    throw std::invalid_argument("conditional_macs: " + std::to_string(active.size()) +
                                " active counts for " + std::to_string(blocks.size()) + " blocks");
  }
  const MacReport full = mac_count(config);
  std::uint64_t macs = full.stem + full.projections + full.classifier + full.gate_affine;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const BlockMacs m = block_conv_macs(blocks[i], active[i]);
    macs += m.pre + m.gated();
  }
  return macs;
}

ParamCount parameter_count(const NetworkConfig& config) {
  config.validate();
  using u64 = std::uint64_t;
  ParamCount p;
  auto conv_bn = [](u64 in, u64 out, u64 k) { return in * out * k * k + 2 * out; };
  p.backbone += conv_bn(config.in_channels, config.stem_channels, config.stem_kernel);
  for (const auto& b : config.blocks()) {
    if (b.kind == BlockKind::kBottleneck) {
      p.backbone += conv_bn(b.in_channels, b.mid_channels, 1);
      p.backbone += conv_bn(b.mid_channels, b.mid_channels, b.kernel);
      p.backbone += conv_bn(b.mid_channels, b.out_channels, 1);
    } else {
      p.backbone += conv_bn(b.in_channels, b.mid_channels, b.kernel);
      p.backbone += conv_bn(b.mid_channels, b.out_channels, b.kernel);
    }
    if (b.projection) p.backbone += conv_bn(b.in_channels, b.out_channels, 1);
    if (b.gated) {
      p.gating += b.in_channels * kGateHiddenWidth + 2 * kGateHiddenWidth +
                  kGateHiddenWidth * b.gates() + b.gates();
    }
  }
  p.backbone += static_cast<u64>(config.feature_channels()) * config.classes + config.classes;
  return p;
}

template <typename T>
ConvBn<T> ConvBn<T>::init(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride, Rng& rng) {
  ConvBn c;
  Tensor<T> w(Shape{out, in, kernel, kernel});
  const double std_dev = std::sqrt(2.0 / static_cast<double>(in * kernel * kernel));
  for (auto& v : w.data()) v = static_cast<T>(rng.normal() * std_dev);
  c.weight = Variable<T>(std::move(w), true);
  c.scale = Variable<T>(Tensor<T>(Shape{out}, T{1}), true);
  c.shift = Variable<T>(Tensor<T>(Shape{out}, T{0}), true);
  c.stats = BatchNormStats<T>(out);
  c.stride = stride;
  c.padding = kernel / 2;
  return c;
}

template <typename T>
Variable<T> ConvBn<T>::forward(const Variable<T>& x, Mode mode) {
  return ops::batch_norm(ops::conv2d(x, weight, stride, padding), scale, shift, stats, mode);
}

template <typename T>
GatedBlock<T>::GatedBlock(const GatedBlockConfig& config, Rng& rng, double temperature) : config_(config) {
  config_.validate();
  const auto& c = config_;
  if (c.kind == BlockKind::kBottleneck) {
    pre = ConvBn<T>::init(c.in_channels, c.mid_channels, 1, 1, rng);
    producer = ConvBn<T>::init(c.mid_channels, c.mid_channels, c.kernel, c.stride, rng);
    consumer = ConvBn<T>::init(c.mid_channels, c.out_channels, 1, 1, rng);
  } else {
    producer = ConvBn<T>::init(c.in_channels, c.mid_channels, c.kernel, c.stride, rng);
    consumer = ConvBn<T>::init(c.mid_channels, c.out_channels, c.kernel, 1, rng);
  }
  if (c.projection) shortcut = ConvBn<T>::init(c.in_channels, c.out_channels, 1, c.stride, rng);
  if (c.gated) gate = GateModuleParams<T>::init(c.in_channels, c.mid_channels, rng, temperature);
}

template <typename T>
typename GatedBlock<T>::Output GatedBlock<T>::forward(const Variable<T>& x, Mode mode, Rng* noise,
                                                      const Tensor<T>* forced_mask) {
  Output out;
  Variable<T> h = config_.kind == BlockKind::kBottleneck ? ops::relu(pre.forward(x, mode)) : x;
  h = ops::relu(producer.forward(h, mode));
  if (forced_mask != nullptr) {
    if (forced_mask->shape() != Shape{x.shape()[0], config_.mid_channels}) {
      throw std::invalid_argument("gated block: mask " + shape_str(forced_mask->shape()) +
                                  " does not match [N, Cmid] = " +
                                  shape_str(Shape{x.shape()[0], config_.mid_channels}));
    }
    h = ops::channel_mul(h, Variable<T>(*forced_mask));
  } else if (gate) {
    out.gate = gate_forward(x, *gate, mode, noise);
    h = ops::channel_mul(h, out.gate->mask);
  }
  Variable<T> y = consumer.forward(h, mode);
  y = ops::add(y, shortcut ? shortcut->forward(x, mode) : x);
  out.y = ops::relu(y);
  return out;
}

template <typename T>
void GatedBlock<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& params,
                            std::vector<NamedBuffer<T>>& buffers) {
  auto add_conv = [&](const std::string& name, ConvBn<T>& c) {
    params.push_back({prefix + name + ".weight", c.weight, false});
    params.push_back({prefix + name + ".bn.scale", c.scale, false});
    params.push_back({prefix + name + ".bn.shift", c.shift, false});
    buffers.push_back({prefix + name + ".bn.running_mean", &c.stats.running_mean});
    buffers.push_back({prefix + name + ".bn.running_var", &c.stats.running_var});
  };
  if (config_.kind == BlockKind::kBottleneck) add_conv("pre", pre);
  add_conv("producer", producer);
  add_conv("consumer", consumer);
  if (shortcut) add_conv("shortcut", *shortcut);
  if (gate) {
    params.push_back({prefix + "gate.fc1.weight", gate->fc1_weight, true});
    params.push_back({prefix + "gate.bn.scale", gate->bn_scale, true});
    params.push_back({prefix + "gate.bn.shift", gate->bn_shift, true});
    params.push_back({prefix + "gate.fc2.weight", gate->fc2_weight, true});
    params.push_back({prefix + "gate.fc2.bias", gate->fc2_bias, true});
    buffers.push_back({prefix + "gate.bn.running_mean", &gate->bn_stats.running_mean});
    buffers.push_back({prefix + "gate.bn.running_var", &gate->bn_stats.running_var});
  }
}

template <typename T>
GatedResNet<T>::GatedResNet(NetworkConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(derive_seed(seed, {kInitStream}));
  stem = ConvBn<T>::init(config_.in_channels, config_.stem_channels, config_.stem_kernel, config_.stem_stride, rng);
  for (const auto& b : config_.blocks()) blocks.emplace_back(b, rng, config_.temperature);
  const std::size_t feat = config_.feature_channels();
  Tensor<T> w(Shape{config_.classes, feat});
  const double bound = 1.0 / std::sqrt(static_cast<double>(feat));
  for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  fc_weight = Variable<T>(std::move(w), true);
  fc_bias = Variable<T>(Tensor<T>(Shape{config_.classes}, T{0}), true);
}

template <typename T>
Variable<T> GatedResNet<T>::stem_forward(const Variable<T>& images, Mode mode) {
  const Shape& s = images.shape();
  if (s.size() != 4 || s[1] != config_.in_channels || s[2] != config_.resolution || s[3] != config_.resolution) {
    throw std::invalid_argument("network input " + shape_str(s) + " does not match [N," +
                                std::to_string(config_.in_channels) + "," + std::to_string(config_.resolution) +
                                "," + std::to_string(config_.resolution) + "]");
  }
  Variable<T> x = ops::relu(stem.forward(images, mode));
  if (config_.stem_pool) x = ops::max_pool2d(x, 3, 2, 1);
  return x;
}

template <typename T>
Variable<T> GatedResNet<T>::head_forward(const Variable<T>& features) {
  return ops::linear(ops::global_avg_pool(features), fc_weight, &fc_bias);
}

template <typename T>
typename GatedResNet<T>::Output GatedResNet<T>::forward(const Variable<T>& images, Mode mode, Rng* noise,
                                                        const std::vector<Tensor<T>>* forced_masks) {
  if (forced_masks && forced_masks->size() != blocks.size()) {
    throw std::invalid_argument("forward: " + std::to_string(forced_masks->size()) + " masks for " +
                                std::to_string(blocks.size()) + " blocks");
  }
  Output out;
  Variable<T> x = stem_forward(images, mode);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto r = blocks[b].forward(x, mode, noise, forced_masks ? &(*forced_masks)[b] : nullptr);
    if (r.gate) out.gates.push_back(std::move(*r.gate));
    x = std::move(r.y);
  }
  out.logits = head_forward(x);
  return out;
}

template <typename T>
std::vector<NamedParam<T>> GatedResNet<T>::parameters() {
  std::vector<NamedParam<T>> params;
  std::vector<NamedBuffer<T>> buffers;
  params.push_back({"stem.weight", stem.weight, false});
  params.push_back({"stem.bn.scale", stem.scale, false});
  params.push_back({"stem.bn.shift", stem.shift, false});
  for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b].collect("blocks." + std::to_string(b) + ".", params, buffers);
  params.push_back({"fc.weight", fc_weight, false});
  params.push_back({"fc.bias", fc_bias, false});
  return params;
}

template <typename T>
std::vector<NamedBuffer<T>> GatedResNet<T>::buffers() {
  std::vector<NamedParam<T>> params;
  std::vector<NamedBuffer<T>> buffers;
  buffers.push_back({"stem.bn.running_mean", &stem.stats.running_mean});
  buffers.push_back({"stem.bn.running_var", &stem.stats.running_var});
  for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b].collect("blocks." + std::to_string(b) + ".", params, buffers);
  return buffers;
}

template struct ConvBn<float>;
template struct ConvBn<double>;
template class GatedBlock<float>;
template class GatedBlock<double>;
template class GatedResNet<float>;
template class GatedResNet<double>;

}  // namespace chgate
