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

#ifndef CHGATE_BLOCK_CONFIG_HPP_
#define CHGATE_BLOCK_CONFIG_HPP_

#include <cstddef>
#include <cstdint>

namespace chgate {

enum class BlockKind { kBasic, kBottleneck };

/// Shape of one residual block. The gated width is `mid_channels`: the
/// output of the producer convolution (conv1 in a basic block, the middle
/// 3x3 in a bottleneck) and the input of the consumer convolution after it.
struct GatedBlockConfig {
  BlockKind kind = BlockKind::kBasic;
  std::size_t in_channels = 0;
  std::size_t mid_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  bool projection = false;
  bool gated = true;
  std::size_t in_height = 0;
  std::size_t in_width = 0;

  std::size_t gates() const { return gated ? mid_channels : 0; }
  std::size_t padding() const { return kernel / 2; }
  std::size_t out_height() const { return (in_height + 2 * padding() - kernel) / stride + 1; }
  std::size_t out_width() const { return (in_width + 2 * padding() - kernel) / stride + 1; }
  /// Projection required whenever the residual add would otherwise mismatch.
  bool needs_projection() const { return stride != 1 || in_channels != out_channels; }

  void validate() const;
};

/// Per-convolution MAC counts of one block with `active` of its gated
/// channels executing.
struct BlockMacs {
  std::uint64_t pre = 0;         // bottleneck 1x1 reduction (ungated)
  std::uint64_t producer = 0;    // scales with active channels (output axis)
  std::uint64_t consumer = 0;    // scales with active channels (input axis)
  std::uint64_t projection = 0;  // shortcut, ungated

  std::uint64_t gated() const { return producer + consumer; }
  std::uint64_t total() const { return pre + producer + consumer + projection; }
};

BlockMacs block_conv_macs(const GatedBlockConfig& block, std::size_t active);
inline BlockMacs block_conv_macs(const GatedBlockConfig& block) {
  return block_conv_macs(block, block.mid_channels);
}

}  // namespace chgate

#endif  // CHGATE_BLOCK_CONFIG_HPP_
