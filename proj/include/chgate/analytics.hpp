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

#ifndef CHGATE_ANALYTICS_HPP_
#define CHGATE_ANALYTICS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chgate/trace.hpp"

namespace chgate {

inline constexpr double kAlwaysOnRate = 0.99;
inline constexpr double kAlwaysOffRate = 0.01;
inline constexpr std::size_t kMinClassifyTraces = 100;

enum class GateLabel { kAlwaysOn, kAlwaysOff, kConditional };
const char* gate_label_name(GateLabel label);

struct GateClass {
  std::size_t layer = 0;
  std::size_t index = 0;
  double rate = 0.0;
  GateLabel label = GateLabel::kConditional;
};

/// Label fractions; `conditional` is computed as 1 - (on + off) so the
/// three sum to exactly 1.
struct LabelFractions {
  double always_on = 0.0;
  double always_off = 0.0;
  double conditional = 0.0;
};

struct GateClassification {
  std::vector<GateClass> gates;  // block-major
  std::vector<LabelFractions> per_layer;
  LabelFractions overall;
};

struct ClassifyOptions {
  double on_threshold = kAlwaysOnRate;    // rate > on  -> always on
  double off_threshold = kAlwaysOffRate;  // rate < off -> always off
  std::size_t min_traces = kMinClassifyTraces;
};

/// Firing rate of every gate, block-major.
std::vector<double> firing_rates(const TraceSet& traces);
GateClassification classify_gates(const TraceSet& traces, const ClassifyOptions& options = {});

/// Per layer, gate indices ordered by descending global firing rate (ties
/// by index). Computed once over all classes.
std::vector<std::vector<std::size_t>> global_firing_order(const TraceSet& traces);

/// Per layer, the firing frequency of each gate over examples of `label`.
/// With `order`, entry j of layer l is the frequency of gate order[l][j].
std::vector<std::vector<double>> per_class_firing(
    const TraceSet& traces, std::int32_t label,
    const std::vector<std::vector<std::size_t>>* order = nullptr);

struct MacRanking {
  std::vector<std::uint32_t> lowest;   // ascending MACs, ties by id
  std::vector<std::uint32_t> highest;  // descending MACs, ties by id
};
MacRanking mac_ranking(const TraceSet& traces, std::size_t top_k);

}  // namespace chgate

#endif  // CHGATE_ANALYTICS_HPP_
