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

// Per-block channel gate: global average pool -> affine(Cin->16) -> batch
// norm -> ReLU -> affine(16->G) gives one logit per gated channel. Training
// perturbs the logit with logistic noise and relaxes it through a tempered
// sigmoid; the forward pass uses the thresholded decision and the backward
// pass the relaxation (straight-through). Evaluation is noise-free.

#ifndef CHGATE_GATING_HPP_
#define CHGATE_GATING_HPP_

#include <cstdint>
#include <span>

#include "chgate/block_config.hpp"
#include "chgate/ops.hpp"
#include "chgate/rng.hpp"

namespace chgate {

inline constexpr std::size_t kGateHiddenWidth = 16;
inline constexpr double kGateTemperature = 2.0 / 3.0;
inline constexpr double kGateBiasInit = 2.0;

template <typename T>
struct GateModuleParams {
  std::size_t in_channels = 0;
  std::size_t gates = 0;
  double temperature = kGateTemperature;
  Variable<T> fc1_weight;  // [16, Cin]
  Variable<T> bn_scale;    // [16]
  Variable<T> bn_shift;    // [16]
  BatchNormStats<T> bn_stats{kGateHiddenWidth};
  Variable<T> fc2_weight;  // [G, 16]
  Variable<T> fc2_bias;    // [G]

  static GateModuleParams init(std::size_t in_channels, std::size_t gates, Rng& rng,
                               double temperature = kGateTemperature);
};

template <typename T>
struct GateOutput {
  Tensor<T> hard;      // [N,G], 1 = execute the channel
  Variable<T> soft;    // [N,G] relaxed sample in (0,1)
  Variable<T> logits;  // [N,G] pre-noise logits
  Variable<T> mask;    // value == hard, gradient flows into soft

  std::size_t batch() const { return hard.dim(0); }
  std::size_t width() const { return hard.dim(1); }
  std::size_t active(std::size_t example) const;
};

/// Relaxed gate value sigmoid((logit + noise) / temperature).
double relaxed_gate(double logit, double noise, double temperature);

/// Train mode draws one logistic sample per example per gate from `noise`,
/// which must then be non-null.
template <typename T>
GateOutput<T> gate_forward(const Variable<T>& features, GateModuleParams<T>& params, Mode mode,
                           Rng* noise);

/// gamma * sum_i sigmoid(logit_i). Throws for negative gamma.
double l0_loss(std::span<const double> logits, double gamma);
template <typename T>
Variable<T> l0_loss(const Variable<T>& logits, double gamma);

/// Cost of one gate module relative to its block. Affine layers are counted
/// as MACs; global pooling as one addition per input element.
struct GateOverhead {
  std::uint64_t fc1_macs = 0;
  std::uint64_t fc2_macs = 0;
  std::uint64_t pool_adds = 0;
  std::uint64_t block_macs = 0;

  std::uint64_t affine_macs() const { return fc1_macs + fc2_macs; }
  std::uint64_t total() const { return affine_macs() + pool_adds; }
  /// (affine + pooling) / block conv MACs.
  double ratio() const;
  double affine_ratio() const;
};

GateOverhead gate_overhead_macs(const GatedBlockConfig& block);

}  // namespace chgate

#endif  // CHGATE_GATING_HPP_
