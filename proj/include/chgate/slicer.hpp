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

// Gate-driven inference at batch size one. For every gated block the active
// channel list selects output filters of the producer convolution, the
// matching batch-norm channels, and input channels of the consumer; only
// those slices are executed.

#ifndef CHGATE_SLICER_HPP_
#define CHGATE_SLICER_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chgate/gatednet.hpp"

namespace chgate {

struct SlicePlan {
  std::size_t width = 0;               // gated channels in the block
  std::vector<std::uint32_t> active;   // strictly increasing, < width

  static SlicePlan full(std::size_t width);
  /// Channels whose mask entry is nonzero.
  static SlicePlan from_mask(std::span<const float> mask);
  /// `count` distinct channels drawn uniformly.
  static SlicePlan random(std::size_t width, std::size_t count, Rng& rng);

  void validate() const;
  std::vector<float> mask() const;
  double fraction() const { return width == 0 ? 0.0 : static_cast<double>(active.size()) / width; }
};

/// Evaluation-mode executor over a snapshot of a model's parameters.
class SlicedExecutor {
 public:
  enum class Path {
    kDense,   // gates ignored, every channel computed
    kMasked,  // full convolutions, intermediate multiplied by the mask
    kSliced,  // only active slices computed
  };

  explicit SlicedExecutor(GatedResNet<float>& model, std::size_t cache_limit = 4096);

  /// x is [1,Cin,H,W]. Without `forced`, the block's gate module picks the
  /// plan; `used`, if given, receives it.
  Tensor<float> block_forward(std::size_t block, const Tensor<float>& x, Path path,
                              const SlicePlan* forced = nullptr, SlicePlan* used = nullptr);
  /// Logits [1,classes] for an image [1,C,H,W].
  Tensor<float> forward(const Tensor<float>& image, Path path,
                        const std::vector<SlicePlan>* forced = nullptr,
                        std::vector<SlicePlan>* used = nullptr);

  std::size_t blocks() const { return blocks_.size(); }
  /// Convolution and classifier MACs executed since the last reset.
  std::uint64_t executed_macs() const { return macs_; }
  /// Gated-convolution MACs (producer + consumer) executed since the last reset.
  std::uint64_t executed_gated_macs() const { return gated_macs_; }
  void reset_macs() { macs_ = gated_macs_ = 0; }
  std::size_t cached_plans() const;

 private:
  struct Norm {
    std::vector<float> mean, invstd, scale, shift;
  };
  struct Conv {
    std::vector<float> weight;
    std::size_t in = 0, out = 0, kernel = 1, stride = 1, padding = 0;
    Norm norm;
  };
  struct Slice {
    std::vector<float> producer;  // [|a|, Cin, k, k]
    Norm norm;
    std::vector<float> consumer;  // [Cout, |a|, k, k]
  };
  struct Block {
    GatedBlockConfig config;
    std::optional<Conv> pre;
    Conv producer, consumer;
    std::optional<Conv> shortcut;
    GateModuleParams<float>* gate = nullptr;
    std::map<std::vector<std::uint32_t>, Slice> cache;
  };
  struct Map {
    std::vector<float> data;
    std::size_t c = 0, h = 0, w = 0;
  };

  static Conv snapshot(const ConvBn<float>& c);
  Map conv_norm(const Map& x, const float* weight, std::size_t in, std::size_t out, const Conv& geom,
                const Norm& norm, bool relu);
  SlicePlan decide(Block& b, const Map& x);
  const Slice& slice(Block& b, const SlicePlan& plan);

  std::vector<Block> blocks_;
  Conv stem_;
  bool stem_pool_ = false;
  std::vector<float> fc_weight_, fc_bias_;
  std::size_t classes_ = 0;
  std::size_t cache_limit_;
  std::uint64_t macs_ = 0;
  std::uint64_t gated_macs_ = 0;
};

struct PathTiming {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  friend bool operator==(const PathTiming&, const PathTiming&) = default;
};

struct BenchOptions {
  std::size_t warmup = 10;
  std::size_t repetitions = 20;
  /// When set, every block runs this fraction of its channels (random subset).
  std::optional<double> forced_fraction;
  std::uint64_t seed = 0;
};

/// Mirrors the columns of an inference-time results table.
struct BenchReport {
  std::string model;
  std::size_t examples = 0;
  std::size_t warmup = 0;
  std::size_t repetitions = 0;
  double forced_fraction = -1.0;  // -1 when gates decide
  PathTiming dense;
  PathTiming masked;
  PathTiming sliced;
  double sliced_over_dense = 0.0;
  std::uint64_t params_total = 0;
  double params_active_avg = 0.0;
  std::uint64_t macs_full = 0;
  double macs_avg = 0.0;
  double gated_mac_fraction = 0.0;  // executed / dense gated-conv MACs
  double accuracy = -1.0;           // -1 without labels
  bool predictions_agree = true;    // sliced top-1 == masked top-1 on every example

  std::string to_json() const;
  static BenchReport from_json(const std::string& text);
  friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

/// `images` are [1,C,H,W]; `labels` may be empty.
BenchReport bench(GatedResNet<float>& model, const std::vector<Tensor<float>>& images,
                  std::span<const int> labels, const BenchOptions& options);

/// Parameters touched when block b executes active[b] channels.
double active_parameters(const NetworkConfig& config, std::span<const std::size_t> active);

}  // namespace chgate

#endif  // CHGATE_SLICER_HPP_
