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

// Channel-gated residual networks. Within a block only the intermediate
// representation is gated:
//
//   x_{l+1} = relu(BN2(W2 * (G(x_l) . relu(BN1(W1 * x_l)))) + shortcut(x_l))
//
// The stem, shortcuts and classifier stay dense. In bottleneck blocks the
// gate sits on the output of the middle 3x3 convolution.

#ifndef CHGATE_GATEDNET_HPP_
#define CHGATE_GATEDNET_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chgate/block_config.hpp"
#include "chgate/gating.hpp"

namespace chgate {

struct NetworkConfig {
  std::string name = "custom";
  BlockKind block = BlockKind::kBasic;
  std::size_t in_channels = 3;
  std::size_t resolution = 32;
  std::size_t classes = 10;
  std::size_t stem_channels = 16;
  std::size_t stem_kernel = 3;
  std::size_t stem_stride = 1;
  bool stem_pool = false;  // 3x3 stride-2 max pool after the stem
  std::vector<std::size_t> stage_widths{16, 32, 64};
  std::vector<std::size_t> blocks_per_stage{3, 3, 3};
  std::size_t width_multiplier = 1;  // scales the gated width of every block
  bool gated = true;
  double temperature = kGateTemperature;

  /// resnet18, resnet34, resnet50 (224x224, 1000 classes), resnet20,
  /// resnet32 (32x32, 10 classes), desk8 (8 narrow blocks, 16x16, 10 classes).
  static NetworkConfig preset(const std::string& name);

  void validate() const;
  /// Resolved per-block shapes, in execution order.
  std::vector<GatedBlockConfig> blocks() const;
  std::size_t total_gates() const;
  /// Gate count per gated block, in execution order.
  std::vector<std::size_t> gate_widths() const;
  /// Main-path convolutions (stem plus block convolutions, no shortcuts).
  std::size_t main_conv_layers() const;
  std::size_t feature_channels() const;
};

struct MacReport {
  std::uint64_t stem = 0;
  std::uint64_t blocks = 0;
  std::uint64_t projections = 0;
  std::uint64_t classifier = 0;
  std::uint64_t gate_affine = 0;
  /// Batch norm, ReLU, pooling and residual additions; not part of total().
  std::uint64_t aux_ops = 0;

  std::uint64_t total() const { return stem + blocks + projections + classifier + gate_affine; }
};

/// MACs with every gate open (gate modules included when the config is gated).
MacReport mac_count(const NetworkConfig& config);
/// MACs of one example whose block b executes active[b] gated channels.
std::uint64_t conditional_macs(const NetworkConfig& config, std::span<const std::size_t> active);

struct ParamCount {
  std::uint64_t backbone = 0;
  std::uint64_t gating = 0;
  std::uint64_t total() const { return backbone + gating; }
};
ParamCount parameter_count(const NetworkConfig& config);

template <typename T>
struct ConvBn {
  Variable<T> weight;  // [Cout, Cin, k, k]
  Variable<T> scale;
  Variable<T> shift;
  BatchNormStats<T> stats;
  std::size_t stride = 1;
  std::size_t padding = 0;

  static ConvBn init(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride, Rng& rng);
  Variable<T> forward(const Variable<T>& x, Mode mode);
  std::size_t out_channels() const { return weight.shape()[0]; }
};

template <typename T>
struct NamedParam {
  std::string name;
  Variable<T> var;
  bool gating = false;
};

template <typename T>
struct NamedBuffer {
  std::string name;
  Tensor<T>* tensor;
};

template <typename T>
class GatedBlock {
 public:
  GatedBlock(const GatedBlockConfig& config, Rng& rng, double temperature = kGateTemperature);

  struct Output {
    Variable<T> y;
    std::optional<GateOutput<T>> gate;
  };

  /// `forced_mask` ([N, Cmid] of 0/1) replaces the gate module's decision;
  /// `noise` is required in train mode for gated blocks without a forced mask.
  Output forward(const Variable<T>& x, Mode mode, Rng* noise = nullptr,
                 const Tensor<T>* forced_mask = nullptr);

  const GatedBlockConfig& config() const { return config_; }
  void collect(const std::string& prefix, std::vector<NamedParam<T>>& params,
               std::vector<NamedBuffer<T>>& buffers);

  ConvBn<T> pre;       // bottleneck 1x1 reduction only
  ConvBn<T> producer;  // output channels gated
  ConvBn<T> consumer;  // input channels gated
  std::optional<ConvBn<T>> shortcut;
  std::optional<GateModuleParams<T>> gate;

 private:
  GatedBlockConfig config_;
};

template <typename T>
class GatedResNet {
 public:
  explicit GatedResNet(NetworkConfig config, std::uint64_t seed = 0);

  struct Output {
    Variable<T> logits;
    std::vector<GateOutput<T>> gates;  // one per gated block
  };

  /// `forced_masks`, when given, holds one [N, Cmid] mask per block.
  Output forward(const Variable<T>& images, Mode mode, Rng* noise = nullptr,
                 const std::vector<Tensor<T>>* forced_masks = nullptr);

  const NetworkConfig& config() const { return config_; }
  std::vector<NamedParam<T>> parameters();
  std::vector<NamedBuffer<T>> buffers();

  /// Runs the stem (conv, BN, ReLU, optional max pool).
  Variable<T> stem_forward(const Variable<T>& images, Mode mode);
  /// Pooling plus the classifier.
  Variable<T> head_forward(const Variable<T>& features);

  ConvBn<T> stem;
  std::vector<GatedBlock<T>> blocks;
  Variable<T> fc_weight;  // [classes, C]
  Variable<T> fc_bias;

 private:
  NetworkConfig config_;
};

extern template class GatedBlock<float>;
extern template class GatedBlock<double>;
extern template class GatedResNet<float>;
extern template class GatedResNet<double>;

}  // namespace chgate

#endif  // CHGATE_GATEDNET_HPP_
