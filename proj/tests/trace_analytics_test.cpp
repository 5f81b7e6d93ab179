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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

#include "chgate/analytics.hpp"
#include "chgate/byteio.hpp"

namespace chgate {
namespace {

namespace fs = std::filesystem;

fs::path TempPath(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "chgate_trace_test";
  fs::create_directories(dir);
  return dir / name;
}

TraceSet RandomTraces(std::size_t rows, std::vector<std::uint32_t> widths, std::uint64_t seed) {
  Rng rng(seed);
  TraceSet set;
  set.layer_widths = std::move(widths);
  for (std::size_t i = 0; i < rows; ++i) {
    GateTrace t;
    t.id = static_cast<std::uint32_t>(i);
    t.label = static_cast<std::int32_t>(rng.below(10));
    t.bits.resize(set.gate_count());
    for (auto& b : t.bits) b = rng.uniform() < 0.4;
    t.macs = static_cast<std::uint32_t>(rng.below(1u << 30));
    set.rows.push_back(std::move(t));
  }
  return set;
}

TEST(TraceIoTest, RoundTripIsByteIdentical) {
  const auto set = RandomTraces(257, {8, 8, 8, 16, 16, 16, 32, 32}, 1);
  const auto path = TempPath("roundtrip.trace").string();
  write_traces(path, set);
  const auto back = read_traces(path);
  EXPECT_EQ(back, set);
  EXPECT_EQ(encode_traces(back), read_file(path));
  // Header: magic, version, gate count, rows, layer count, widths. Row: id,
  // label, 17 bytes of bits, macs.
  EXPECT_EQ(read_file(path).size(), 8 + 4 * 4 + 8 * 4 + 257 * (4 + 4 + 17 + 4));
}

TEST(TraceIoTest, BitOrderIsLeastSignificantFirst) {
  TraceSet set;
  set.layer_widths = {3, 7};
  GateTrace t;
  t.id = 5;
  t.label = -1;
  t.bits = {1, 0, 0, 0, 0, 0, 0, 0, 0, 1};
  t.macs = 0x01020304;
  set.rows.push_back(t);
  const auto bytes = encode_traces(set);
  const std::size_t row = 8 + 4 * 4 + 2 * 4;
  EXPECT_EQ(bytes[row + 8], 0x01);
  EXPECT_EQ(bytes[row + 9], 0x02);
  EXPECT_EQ(bytes[row + 10], 0x04);  // macs, little-endian
  EXPECT_EQ(decode_traces(bytes), set);
}

TEST(TraceIoTest, RandomRowAccess) {
  const auto set = RandomTraces(100, {5, 11}, 2);
  const auto path = TempPath("rows.trace").string();
  write_traces(path, set);
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const std::size_t i = rng.below(100);
    EXPECT_EQ(read_trace_row(path, i), set.rows[i]);
  }
  EXPECT_THROW(read_trace_row(path, 100), std::out_of_range);
}

TEST(TraceIoTest, CorruptFilesAreRejected) {
  const auto set = RandomTraces(10, {4, 4}, 4);
  auto bytes = encode_traces(set);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_traces(truncated), std::runtime_error);
  try {
    decode_traces(std::vector<unsigned char>(bytes.begin(), bytes.begin() + 10), "x.trace");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("x.trace: byte"), std::string::npos) << e.what();
  }
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_traces(bad_magic), std::runtime_error);
  const auto path = TempPath("short.trace").string();
  {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size() - 3));
  }
  EXPECT_THROW(read_traces(path), std::runtime_error);
  EXPECT_THROW(read_trace_row(path, 9), std::runtime_error);
  EXPECT_THROW(read_traces(TempPath("missing.trace").string()), std::runtime_error);

  TraceSet ragged = set;
  ragged.rows[3].bits.pop_back();
  EXPECT_THROW(encode_traces(ragged), std::invalid_argument);
}

TEST(TraceMacsTest, NarrowingIsChecked) {
  EXPECT_EQ(trace_macs(4000000000ull), 4000000000u);
  EXPECT_THROW(trace_macs(1ull << 32), std::overflow_error);
}

TEST(TraceMacsTest, VerifyAgainstTheNetwork) {
  const auto config = NetworkConfig::preset("desk8");
  TraceSet set;
  for (auto w : config.gate_widths()) set.layer_widths.push_back(static_cast<std::uint32_t>(w));
  Rng rng(6);
  for (std::uint32_t i = 0; i < 20; ++i) {
    GateTrace t{i, 0, std::vector<std::uint8_t>(set.gate_count()), 0};
    for (auto& b : t.bits) b = rng.uniform() < 0.5;
    t.macs = trace_macs(conditional_macs(config, set.active_counts(t)));
    set.rows.push_back(t);
  }
  EXPECT_EQ(verify_trace_macs(set, config), -1);
  set.rows[7].macs += 1;
  EXPECT_EQ(verify_trace_macs(set, config), 7);
  set.layer_widths.pop_back();
  EXPECT_THROW(verify_trace_macs(set, config), std::invalid_argument);
}

// Five gates in one layer with exact firing rates over 1000 rows.
TraceSet PlantedRates() {
  const std::vector<double> rates{1.0, 0.995, 0.5, 0.005, 0.0};
  TraceSet set;
  set.layer_widths = {5};
  for (std::uint32_t i = 0; i < 1000; ++i) {
    GateTrace t{i, static_cast<std::int32_t>(i % 2), std::vector<std::uint8_t>(5), 0};
    for (std::size_t g = 0; g < 5; ++g) t.bits[g] = i < static_cast<std::uint32_t>(rates[g] * 1000);
    set.rows.push_back(t);
  }
  return set;
}

TEST(ClassifyGatesTest, PlantedRates) {
  const auto set = PlantedRates();
  const auto c = classify_gates(set);
  const std::vector<GateLabel> want{GateLabel::kAlwaysOn, GateLabel::kAlwaysOn, GateLabel::kConditional,
                                    GateLabel::kAlwaysOff, GateLabel::kAlwaysOff};
  ASSERT_EQ(c.gates.size(), 5u);
  for (std::size_t g = 0; g < 5; ++g) EXPECT_EQ(c.gates[g].label, want[g]) << g;
  EXPECT_DOUBLE_EQ(c.overall.always_on, 0.4);
  EXPECT_DOUBLE_EQ(c.overall.always_off, 0.4);
  EXPECT_EQ(c.overall.always_on + c.overall.always_off + c.overall.conditional, 1.0);
  EXPECT_STREQ(gate_label_name(GateLabel::kConditional), "conditional");
}

TEST(ClassifyGatesTest, ThresholdsAreStrict) {
  TraceSet set;
  set.layer_widths = {2};
  for (std::uint32_t i = 0; i < 100; ++i) set.rows.push_back({i, 0, {i < 99, i < 1}, 0});
  const auto c = classify_gates(set);
  EXPECT_EQ(c.gates[0].label, GateLabel::kConditional);  // exactly 0.99
  EXPECT_EQ(c.gates[1].label, GateLabel::kConditional);  // exactly 0.01
}

TEST(ClassifyGatesTest, RejectsTooFewTraces) {
  auto set = PlantedRates();
  set.rows.resize(99);
  EXPECT_THROW(classify_gates(set), std::invalid_argument);
  EXPECT_NO_THROW(classify_gates(set, {0.99, 0.01, 50}));
  EXPECT_THROW(classify_gates(set, {0.1, 0.2, 1}), std::invalid_argument);
  EXPECT_THROW(firing_rates(TraceSet{}), std::invalid_argument);
}

TEST(PerClassFiringTest, DisjointClassesUseDisjointGates) {
  TraceSet set;
  set.layer_widths = {4, 2};
  for (std::uint32_t i = 0; i < 200; ++i) {
    const bool a = i % 2 == 0;
    set.rows.push_back({i, a ? 0 : 1, {a, a, !a, !a, 1, 0}, 0});
  }
  const auto f0 = per_class_firing(set, 0), f1 = per_class_firing(set, 1);
  EXPECT_EQ(f0[0], (std::vector<double>{1, 1, 0, 0}));
  EXPECT_EQ(f1[0], (std::vector<double>{0, 0, 1, 1}));
  for (std::size_t g = 0; g < 4; ++g) EXPECT_EQ(f0[0][g] * f1[0][g], 0.0);
  EXPECT_EQ(f0[1], (std::vector<double>{1, 0}));
  EXPECT_THROW(per_class_firing(set, 7), std::invalid_argument);
}

TEST(PerClassFiringTest, GlobalOrderIsSharedAcrossClasses) {
  const auto set = PlantedRates();
  const auto order = global_firing_order(set);
  EXPECT_EQ(order[0], (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  TraceSet reversed = set;
  for (auto& r : reversed.rows) std::reverse(r.bits.begin(), r.bits.end());
  const auto rorder = global_firing_order(reversed);
  EXPECT_EQ(rorder[0], (std::vector<std::size_t>{4, 3, 2, 1, 0}));
  const auto ordered = per_class_firing(reversed, 0, &rorder);
  EXPECT_TRUE(std::is_sorted(ordered[0].rbegin(), ordered[0].rend()));
}

TEST(MacRankingTest, TiesBrokenById) {
  TraceSet set;
  set.layer_widths = {1};
  const std::vector<std::uint32_t> macs{50, 10, 50, 10, 30};
  for (std::uint32_t i = 0; i < macs.size(); ++i) set.rows.push_back({i, 0, {1}, macs[i]});
  const auto r = mac_ranking(set, 3);
  EXPECT_EQ(r.lowest, (std::vector<std::uint32_t>{1, 3, 4}));
  EXPECT_EQ(r.highest, (std::vector<std::uint32_t>{0, 2, 4}));
  EXPECT_THROW(mac_ranking(set, 6), std::invalid_argument);
}

}  // namespace
}  // namespace chgate
