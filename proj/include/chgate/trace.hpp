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

// Per-example gate firing records.
//
// File layout, little-endian:
//
//   "CHGTRACE"  u32 version  u32 gate_count  u32 example_count
//   u32 layer_count  layer_count x u32 layer width
//   example_count rows of { u32 id, i32 label, ceil(gate_count/8) bytes, u32 macs }
//
// Gate bits are ordered block-major then channel, least significant bit
// first within a byte. Rows have a fixed size, so row i starts at
// header_size + i * row_size.

#ifndef CHGATE_TRACE_HPP_
#define CHGATE_TRACE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "chgate/gatednet.hpp"

namespace chgate {

inline constexpr std::uint32_t kTraceVersion = 1;

struct GateTrace {
  std::uint32_t id = 0;
  std::int32_t label = 0;
  std::vector<std::uint8_t> bits;  // one 0/1 entry per gate
  std::uint32_t macs = 0;

  friend bool operator==(const GateTrace&, const GateTrace&) = default;
};

struct TraceSet {
  std::vector<std::uint32_t> layer_widths;  // gates per gated block
  std::vector<GateTrace> rows;

  std::size_t gate_count() const;
  /// Offset of layer l's first gate within a row.
  std::size_t layer_offset(std::size_t layer) const;
  /// Per-block active channel counts of one row.
  std::vector<std::size_t> active_counts(const GateTrace& row) const;
  /// Throws when a row's width differs from the layer table.
  void validate() const;

  friend bool operator==(const TraceSet&, const TraceSet&) = default;
};

std::vector<unsigned char> encode_traces(const TraceSet& set);
TraceSet decode_traces(const std::vector<unsigned char>& bytes, const std::string& source = "trace");
void write_traces(const std::string& path, const TraceSet& set);
TraceSet read_traces(const std::string& path);
/// Reads row `index` without loading the whole file.
GateTrace read_trace_row(const std::string& path, std::size_t index);

/// Checked narrowing of a MAC count into the trace's 32-bit field.
std::uint32_t trace_macs(std::uint64_t macs);
/// Recomputes every row's MACs from its bits; returns the first mismatching
/// row index, or -1 when all agree. Throws if the layer table does not match
/// the network.
std::ptrdiff_t verify_trace_macs(const TraceSet& set, const NetworkConfig& config);

}  // namespace chgate

#endif  // CHGATE_TRACE_HPP_
