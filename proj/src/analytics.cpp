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

#include "chgate/analytics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace chgate {

const char* gate_label_name(GateLabel label) {
  switch (label) {
    case GateLabel::kAlwaysOn:
      return "always_on";
    case GateLabel::kAlwaysOff:
      return "always_off";
    case GateLabel::kConditional:
      return "conditional";
  }
  return "unknown";
}

namespace {

std::vector<double> rates_over(const TraceSet& traces, const std::vector<const GateTrace*>& rows) {
  std::vector<std::uint64_t> counts(traces.gate_count(), 0);
  for (const GateTrace* row : rows)
    for (std::size_t g = 0; g < counts.size(); ++g) counts[g] += row->bits[g] != 0;
  std::vector<double> rates(counts.size());
  for (std::size_t g = 0; g < counts.size(); ++g)
    rates[g] = static_cast<double>(counts[g]) / static_cast<double>(rows.size());
  return rates;
}

std::vector<const GateTrace*> all_rows(const TraceSet& traces) {
  std::vector<const GateTrace*> rows;
  for (const auto& r : traces.rows) rows.push_back(&r);
  return rows;
}

LabelFractions fractions(std::size_t on, std::size_t off, std::size_t total) {
  LabelFractions f;
  if (total == 0) return f;
  f.always_on = static_cast<double>(on) / static_cast<double>(total);
  f.always_off = static_cast<double>(off) / static_cast<double>(total);
  f.conditional = 1.0 - (f.always_on + f.always_off);
  return f;
}

}  // namespace

std::vector<double> firing_rates(const TraceSet& traces) {
  if (traces.rows.empty()) throw std::invalid_argument("firing_rates: empty trace set");
  traces.validate();
  return rates_over(traces, all_rows(traces));
}

GateClassification classify_gates(const TraceSet& traces, const ClassifyOptions& options) {
  if (traces.rows.empty()) throw std::invalid_argument("classify_gates: empty trace set");
  if (traces.rows.size() < options.min_traces) {
    throw std::invalid_argument("classify_gates: need at least " + std::to_string(options.min_traces) +
                                " traces, got " + std::to_string(traces.rows.size()));
  }
  if (!(options.off_threshold < options.on_threshold)) {
    throw std::invalid_argument("classify_gates: off threshold must be below on threshold");
  }
  const std::vector<double> rates = firing_rates(traces);
  GateClassification out;
  std::size_t total_on = 0, total_off = 0, g = 0;
  for (std::size_t l = 0; l < traces.layer_widths.size(); ++l) {
    std::size_t on = 0, off = 0;
    for (std::size_t i = 0; i < traces.layer_widths[l]; ++i, ++g) {
      GateClass c{l, i, rates[g], GateLabel::kConditional};
      if (rates[g] > options.on_threshold) {
        c.label = GateLabel::kAlwaysOn;
        ++on;
      } else if (rates[g] < options.off_threshold) {
        c.label = GateLabel::kAlwaysOff;
        ++off;
      }
      out.gates.push_back(c);
    }
    out.per_layer.push_back(fractions(on, off, traces.layer_widths[l]));
    total_on += on;
    total_off += off;
  }
  out.overall = fractions(total_on, total_off, rates.size());
  return out;
}

std::vector<std::vector<std::size_t>> global_firing_order(const TraceSet& traces) {
  const std::vector<double> rates = firing_rates(traces);
  std::vector<std::vector<std::size_t>> order;
  std::size_t off = 0;
  for (auto w : traces.layer_widths) {
    std::vector<std::size_t> idx(w);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return rates[off + a] > rates[off + b]; });
    order.push_back(std::move(idx));
    off += w;
  }
  return order;
}

std::vector<std::vector<double>> per_class_firing(const TraceSet& traces, std::int32_t label,
                                                  const std::vector<std::vector<std::size_t>>* order) {
  traces.validate();
  std::vector<const GateTrace*> rows;
  for (const auto& r : traces.rows)
    if (r.label == label) rows.push_back(&r);
  if (rows.empty()) throw std::invalid_argument("per_class_firing: class " + std::to_string(label) + " not in traces");
  if (order != nullptr && order->size() != traces.layer_widths.size()) {
    throw std::invalid_argument("per_class_firing: order has wrong layer count");
  }
  const std::vector<double> rates = rates_over(traces, rows);
  std::vector<std::vector<double>> out;
  std::size_t off = 0;
  for (std::size_t l = 0; l < traces.layer_widths.size(); ++l) {
    const std::size_t w = traces.layer_widths[l];
    std::vector<double> layer(w);
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t gate = order ? (*order)[l].at(j) : j;
      if (gate >= w) throw std::invalid_argument("per_class_firing: order index out of range");
      layer[j] = rates[off + gate];
    }
    out.push_back(std::move(layer));
    off += w;
  }
  return out;
}

MacRanking mac_ranking(const TraceSet& traces, std::size_t top_k) {
  if (top_k > traces.rows.size()) {
    throw std::invalid_argument("mac_ranking: top_k " + std::to_string(top_k) + " exceeds " +
                                std::to_string(traces.rows.size()) + " traces");
  }
  std::vector<const GateTrace*> rows = all_rows(traces);
  std::sort(rows.begin(), rows.end(), [](const GateTrace* a, const GateTrace* b) {
    return a->macs != b->macs ? a->macs < b->macs : a->id < b->id;
  });
  MacRanking r;
  for (std::size_t i = 0; i < top_k; ++i) r.lowest.push_back(rows[i]->id);
  std::stable_sort(rows.begin(), rows.end(), [](const GateTrace* a, const GateTrace* b) {
    return a->macs != b->macs ? a->macs > b->macs : a->id < b->id;
  });
  for (std::size_t i = 0; i < top_k; ++i) r.highest.push_back(rows[i]->id);
  return r;
}

}  // namespace chgate
