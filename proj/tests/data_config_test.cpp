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

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "chgate/byteio.hpp"
#include "chgate/trainer.hpp"

namespace chgate {
namespace {

namespace fs = std::filesystem;

// Record i: label i % 10, every byte of channel c equal to 10 * i + c.
std::vector<unsigned char> CifarFixture(std::size_t records) {
  std::vector<unsigned char> bytes;
  for (std::size_t i = 0; i < records; ++i) {
    bytes.push_back(static_cast<unsigned char>(i % 10));
    for (std::size_t c = 0; c < 3; ++c) bytes.insert(bytes.end(), 1024, static_cast<unsigned char>(10 * i + c));
  }
  return bytes;
}

TEST(CifarTest, ParsesRecords) {
  const auto d = parse_cifar10(CifarFixture(4), "fixture");
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(d.image(2)[0], 20.0f / 255.0f);
  EXPECT_EQ(d.image(2)[1024], 21.0f / 255.0f);
  EXPECT_EQ(d.image(3)[3 * 1024 - 1], 32.0f / 255.0f);
  EXPECT_EQ(parse_cifar10(CifarFixture(4), "fixture", 2).size(), 2u);
}

TEST(CifarTest, ErrorsCiteTheByteOffset) {
  auto bytes = CifarFixture(3);
  bytes.resize(bytes.size() - 100);
  try {
    parse_cifar10(bytes, "batch.bin");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("batch.bin: byte 6146"), std::string::npos) << e.what();
  }
  bytes = CifarFixture(3);
  bytes[kCifarRecordBytes] = 12;
  try {
    parse_cifar10(bytes, "batch.bin");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("byte 3073: label 12"), std::string::npos) << e.what();
  }
}

TEST(CifarTest, LoaderNormalizesWithStandardStatistics) {
  const auto dir = fs::temp_directory_path() / "chgate_cifar_fixture";
  fs::create_directories(dir);
  write_file((dir / "test_batch.bin").string(), CifarFixture(5));
  const auto d = load_cifar10(dir.string(), false, 3);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_NEAR(d.image(1)[0], (10.0 / 255.0 - kCifarMean[0]) / kCifarStd[0], 1e-6);
  EXPECT_NEAR(d.image(1)[2048], (12.0 / 255.0 - kCifarMean[2]) / kCifarStd[2], 1e-6);
  EXPECT_THROW(load_cifar10(dir.string(), true), std::runtime_error);

  ExperimentConfig c;
  c.network = NetworkConfig::preset("desk8");
  c.network.resolution = 32;
  c.data.kind = "cifar10";
  c.data.path = (fs::temp_directory_path() / "chgate_no_such_dir").string();
  EXPECT_THROW(load_datasets(c), DataUnavailable);
}

TEST(AugmentTest, FlipTwiceIsIdentity) {
  Rng rng(1);
  Tensor<float> x({3, 2, 4, 5});
  for (auto& v : x.data()) v = static_cast<float>(rng.normal());
  auto y = x;
  flip_horizontal(y);
  EXPECT_EQ(y.at(1, 1, 2, 0), x.at(1, 1, 2, 4));
  flip_horizontal(y);
  EXPECT_EQ(y, x);
}

TEST(AugmentTest, CropKeepsShapeAndIsSeeded) {
  Rng r0(1);
  Tensor<float> x({4, 3, 8, 8});
  for (auto& v : x.data()) v = static_cast<float>(r0.normal());
  auto a = x, b = x;
  Rng ra(5), rb(5);
  augment(a, {2, true}, ra);
  augment(b, {2, true}, rb);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.shape(), x.shape());
  auto none = x;
  augment(none, {0, false}, ra);
  EXPECT_EQ(none, x);
}

TEST(SyntheticDataTest, DeterministicAndBalanced) {
  const auto a = synthetic_conditional_dataset(3, 1000, 10, 16);
  const auto b = synthetic_conditional_dataset(3, 1000, 10, 16);
  const auto c = synthetic_conditional_dataset(4, 1000, 10, 16);
  EXPECT_EQ(a.pixels, b.pixels);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.pixels, c.pixels);
  EXPECT_EQ(a.class_histogram(), std::vector<std::size_t>(10, 100));
  EXPECT_EQ(a.image_size(), 3u * 16 * 16);
  EXPECT_THROW(synthetic_conditional_dataset(1, 10, 1, 16), std::invalid_argument);
  EXPECT_THROW(synthetic_conditional_dataset(1, 10, 10, 4), std::invalid_argument);
}

TEST(SyntheticDataTest, ShuffleIsAPermutation) {
  Rng rng(2);
  auto idx = shuffled_indices(100, rng);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(idx[i], i);
}

TEST(DatasetTest, NormalizeGivesUnitStatistics) {
  auto d = synthetic_conditional_dataset(9, 200, 10, 8);
  const auto [mean, sd] = d.channel_stats();
  d.normalize(mean, sd);
  const auto [m2, s2] = d.channel_stats();
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(m2[c], 0.0, 1e-5);
    EXPECT_NEAR(s2[c], 1.0, 1e-5);
  }
  EXPECT_EQ(d.head(10).size(), 10u);
  EXPECT_EQ(d.gather(std::vector<std::size_t>{3, 1}).shape(), (Shape{2, 3, 8, 8}));
}

TEST(ConfigTest, ParsesTheShippedConfigs) {
  const std::string root = CHGATE_SOURCE_DIR;
  for (const char* name : {"desk_synthetic.yaml", "desk_cifar10.yaml", "cifar10_resnet20_full.yaml"}) {
    EXPECT_NO_THROW(load_config(root + "/configs/" + name)) << name;
  }
  const auto full = load_config(root + "/configs/cifar10_resnet20_full.yaml");
  EXPECT_EQ(full.schedule.epochs, 500u);
  EXPECT_EQ(full.schedule.bs_anneal_end, 100.0);
  const auto desk = load_config(root + "/configs/desk_synthetic.yaml");
  EXPECT_EQ(desk.network.total_gates(), 136u);
  EXPECT_EQ(desk.schedule.l0_start, 8.0);
  EXPECT_EQ(desk.schedule.l0_rampup_end, 24.0);
}

std::string ConfigErrorOf(const std::string& text) {
  try {
    parse_config(text, "cfg.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, ErrorsCarryLineNumbers) {
  EXPECT_EQ(ConfigErrorOf("seed: 1\nschedule:\n  epochs: 4\n  learning_rate: 0.1\n").rfind("cfg.yaml:4:3: unknown key "
                                                                                             "'schedule.learning_rate'",
                                                                                             0),
            0u);
  EXPECT_NE(ConfigErrorOf("seed: 1\nschedule:\n  epochs: many\n").find("cfg.yaml:3:11"), std::string::npos);
  EXPECT_NE(ConfigErrorOf("seed: [1\n").find("cfg.yaml:"), std::string::npos);
  EXPECT_NE(ConfigErrorOf("network:\n  preset: vgg\n").find("cfg.yaml:2:11"), std::string::npos);
  EXPECT_NE(ConfigErrorOf("data:\n  kind: imagenet\n").find("data.kind"), std::string::npos);
  EXPECT_NE(ConfigErrorOf("schedule:\n  epochs: -3\n").find("non-negative"), std::string::npos);
  EXPECT_NE(ConfigErrorOf("prior:\n  kind: beta\n  params: [0, 1]\n").find("cfg.yaml:2:3"), std::string::npos);
  EXPECT_THROW(load_config("/nonexistent/config.yaml"), ConfigError);
}

TEST(ConfigTest, EmptyDocumentGivesDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.network.name, "desk8");
  EXPECT_EQ(c.schedule.epochs, 40u);
}

}  // namespace
}  // namespace chgate
