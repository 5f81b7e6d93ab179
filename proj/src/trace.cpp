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

#include "chgate/trace.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "chgate/byteio.hpp"

namespace chgate {

namespace {

constexpr char kMagic[8] = {'C', 'H', 'G', 'T', 'R', 'A', 'C', 'E'};

std::size_t header_size(std::size_t layers) { return 8 + 4 * 4 + 4 * layers; }
std::size_t row_size(std::size_t gates) { return 4 + 4 + (gates + 7) / 8 + 4; }

void encode_row(ByteWriter& w, const GateTrace& row) {
  w.u32(row.id);
  w.i32(row.label);
  for (std::size_t i = 0; i < row.bits.size(); i += 8) {
    std::uint8_t byte = 0;
    for (std::size_t b = 0; b < 8 && i + b < row.bits.size(); ++b)
      if (row.bits[i + b]) byte |= static_cast<std::uint8_t>(1u << b);
    w.u8(byte);
  }
  w.u32(row.macs);
}

GateTrace decode_row(ByteReader& r, std::size_t gates) {
  GateTrace row;
  row.id = r.u32();
  row.label = r.i32();
  row.bits.resize(gates);
  for (std::size_t i = 0; i < gates; i += 8) {
    const std::uint8_t byte = r.u8();
    for (std::size_t b = 0; b < 8 && i + b < gates; ++b) row.bits[i + b] = (byte >> b) & 1u;
  }
  row.macs = r.u32();
  return row;
}

struct Header {
  std::uint32_t gates = 0;
  std::uint32_t examples = 0;
  std::vector<std::uint32_t> widths;
};

Header decode_header(ByteReader& r) {
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) r.fail("not a gate trace file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kTraceVersion) r.fail("unsupported trace version " + std::to_string(version));
  Header h;
  h.gates = r.u32();
  h.examples = r.u32();
  const std::uint32_t layers = r.u32();
  if (layers > h.gates) r.fail("layer count " + std::to_string(layers) + " exceeds gate count");
  std::uint64_t sum = 0;
  for (std::uint32_t l = 0; l < layers; ++l) {
    h.widths.push_back(r.u32());
    sum += h.widths.back();
  }
  if (sum != h.gates) r.fail("layer widths sum to " + std::to_string(sum) + ", header says " + std::to_string(h.gates));
  return h;
}

}  // namespace

std::size_t TraceSet::gate_count() const {
  std::size_t n = 0;
  for (auto w : layer_widths) n += w;
  return n;
}

std::size_t TraceSet::layer_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += layer_widths.at(l);
  return off;
}

std::vector<std::size_t> TraceSet::active_counts(const GateTrace& row) const {
  std::vector<std::size_t> active;
  std::size_t off = 0;
  for (auto w : layer_widths) {
    std::size_t n = 0;
    for (std::size_t g = 0; g < w; ++g) n += row.bits[off + g] != 0;
    active.push_back(n);
    off += w;
  }
  return active;
}

void TraceSet::validate() const {
  const std::size_t gates = gate_count();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].bits.size() != gates) {
      throw std::invalid_argument("trace row " + std::to_string(i) + " has " + std::to_string(rows[i].bits.size()) +
                                  " gates, expected " + std::to_string(gates));
    }
  }
}

std::vector<unsigned char> encode_traces(const TraceSet& set) {
  set.validate();
  ByteWriter w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kTraceVersion);
  w.u32(static_cast<std::uint32_t>(set.gate_count()));
  w.u32(static_cast<std::uint32_t>(set.rows.size()));
  w.u32(static_cast<std::uint32_t>(set.layer_widths.size()));
  for (auto width : set.layer_widths) w.u32(width);
  for (const auto& row : set.rows) encode_row(w, row);
  return w.buffer();
}

TraceSet decode_traces(const std::vector<unsigned char>& bytes, const std::string& source) {
  ByteReader r(bytes, source);
  const Header h = decode_header(r);
  if (r.remaining() != static_cast<std::size_t>(h.examples) * row_size(h.gates)) {
    r.fail("expected " + std::to_string(h.examples) + " rows of " + std::to_string(row_size(h.gates)) +
           " bytes, found " + std::to_string(r.remaining()) + " bytes");
  }
  TraceSet set;
  set.layer_widths = h.widths;
  set.rows.reserve(h.examples);
  for (std::uint32_t i = 0; i < h.examples; ++i) set.rows.push_back(decode_row(r, h.gates));
  return set;
}

void write_traces(const std::string& path, const TraceSet& set) { write_file(path, encode_traces(set)); }

TraceSet read_traces(const std::string& path) { return decode_traces(read_file(path), path); }

GateTrace read_trace_row(const std::string& path, std::size_t index) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::vector<unsigned char> fixed(header_size(0));
  in.read(reinterpret_cast<char*>(fixed.data()), static_cast<std::streamsize>(fixed.size()));
  if (!in) throw std::runtime_error(path + ": truncated trace header");
  const std::uint32_t layers = ByteReader(fixed, path, 8 + 12).u32();
  std::vector<unsigned char> head(header_size(layers));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  if (!in) throw std::runtime_error(path + ": truncated trace header");
  ByteReader hr(head, path);
  const Header h = decode_header(hr);
  if (index >= h.examples) {
    throw std::out_of_range(path + ": row " + std::to_string(index) + " of " + std::to_string(h.examples));
  }
  std::vector<unsigned char> row(row_size(h.gates));
  in.seekg(static_cast<std::streamoff>(head.size() + index * row.size()));
  in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
  if (!in) throw std::runtime_error(path + ": truncated trace row " + std::to_string(index));
  ByteReader rr(row, path);
  return decode_row(rr, h.gates);
}

std::uint32_t trace_macs(std::uint64_t macs) {
  if (macs > std::numeric_limits<std::uint32_t>::max()) {
    throw std::overflow_error("MAC count " + std::to_string(macs) + " does not fit the trace's 32-bit field");
  }
  return static_cast<std::uint32_t>(macs);
}

std::ptrdiff_t verify_trace_macs(const TraceSet& set, const NetworkConfig& config) {
  const std::vector<std::size_t> widths = config.gate_widths();
  if (widths.size() != config.blocks().size() ||
      !std::equal(widths.begin(), widths.end(), set.layer_widths.begin(), set.layer_widths.end())) {
    throw std::invalid_argument("trace layer table does not match network '" + config.name + "'");
  }
  set.validate();
  for (std::size_t i = 0; i < set.rows.size(); ++i) {
    const auto active = set.active_counts(set.rows[i]);
    if (conditional_macs(config, active) != set.rows[i].macs) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

}  // namespace chgate
