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

#include <map>
#include <string>
#include <vector>

#include "chgate/gatednet.hpp"

namespace chgate {
namespace {

NetworkConfig Ungated(const std::string& preset) {
  auto c = NetworkConfig::preset(preset);
  c.gated = false;
  return c;
}

TEST(MacCountTest, ImageNetResNetsMatchPublishedTotals) {
  const std::vector<std::pair<std::string, double>> published{
      {"resnet18", 1.81e9}, {"resnet34", 3.66e9}, {"resnet50", 4.09e9}};
  for (const auto& [name, macs] : published) {
    const double ours = static_cast<double>(mac_count(Ungated(name)).total());
    EXPECT_NEAR(ours / macs, 1.0, 0.02) << name << " " << ours;
  }
}

TEST(MacCountTest, ResNet18ByHand) {
  // Stem 7x7x3x64 on 112x112, then per stage two 3x3 convs per block.
  std::uint64_t want = 3ull * 64 * 49 * 112 * 112;
  const std::uint64_t w[] = {64, 128, 256, 512}, s[] = {56, 28, 14, 7};
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t in = i == 0 ? 64 : w[i - 1];
    want += (in * w[i] + 3 * w[i] * w[i]) * 9 * s[i] * s[i];
    if (i > 0) want += in * w[i] * s[i] * s[i];
  }
  want += 512 * 1000;
  EXPECT_EQ(mac_count(Ungated("resnet18")).total(), want);
}

TEST(MacCountTest, ResNet34ParameterCount) {
  const double params = static_cast<double>(parameter_count(Ungated("resnet34")).total());
  EXPECT_NEAR(params / 21.79e6, 1.0, 0.01) << params;
  EXPECT_EQ(parameter_count(Ungated("resnet34")).gating, 0u);
}

TEST(MacCountTest, GatesAddOnlyTheirAffineCost) {
  const auto gated = mac_count(NetworkConfig::preset("resnet34"));
  const auto plain = mac_count(Ungated("resnet34"));
  EXPECT_EQ(gated.total() - plain.total(), gated.gate_affine);
  EXPECT_LT(static_cast<double>(gated.gate_affine) / plain.total(), 1e-3);
}

TEST(ConditionalMacsTest, EndpointsAndLinearity) {
  const auto config = NetworkConfig::preset("desk8");
  const auto blocks = config.blocks();
  std::vector<std::size_t> all, none(blocks.size(), 0), half;
  for (const auto& b : blocks) {
    all.push_back(b.mid_channels);
    half.push_back(b.mid_channels / 2);
  }
  const auto full = mac_count(config);
  EXPECT_EQ(conditional_macs(config, all), full.total());
  EXPECT_EQ(conditional_macs(config, none), full.stem + full.projections + full.classifier + full.gate_affine);
  // Both gated convolutions scale linearly in the active count.
  EXPECT_EQ(conditional_macs(config, half) - conditional_macs(config, none),
            (conditional_macs(config, all) - conditional_macs(config, none)) / 2);
  EXPECT_THROW(conditional_macs(config, std::vector<std::size_t>(3, 0)), std::invalid_argument);
}

TEST(ConditionalMacsTest, BottleneckGatesTheMiddleConvolution) {
  GatedBlockConfig b;
  b.kind = BlockKind::kBottleneck;
  b.in_channels = 256;
  b.mid_channels = 64;
  b.out_channels = 256;
  b.in_height = b.in_width = 56;
  const auto full = block_conv_macs(b), half = block_conv_macs(b, 32);
  EXPECT_EQ(full.pre, 256ull * 64 * 56 * 56);
  EXPECT_EQ(half.pre, full.pre);
  EXPECT_EQ(full.producer, 64ull * 64 * 9 * 56 * 56);
  EXPECT_EQ(half.producer, full.producer / 2);
  EXPECT_EQ(half.consumer, full.consumer / 2);
}

TEST(PresetTest, Desk8HasEightGatedBlocks) {
  const auto c = NetworkConfig::preset("desk8");
  EXPECT_EQ(c.blocks().size(), 8u);
  EXPECT_EQ(c.total_gates(), 3u * 8 + 3 * 16 + 2 * 32);
  EXPECT_EQ(c.main_conv_layers(), 17u);
  EXPECT_THROW(NetworkConfig::preset("vgg16"), std::invalid_argument);
  auto bad = c;
  bad.stage_widths = {8, 16};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(PresetTest, Resnet20Shape) {
  const auto c = NetworkConfig::preset("resnet20");
  EXPECT_EQ(c.main_conv_layers() + 1, 20u);  // plus the classifier
  const auto blocks = c.blocks();
  EXPECT_TRUE(blocks[3].projection);
  EXPECT_EQ(blocks[3].stride, 2u);
  EXPECT_FALSE(blocks[4].projection);
}

Tensor<float> RandomImages(std::size_t n, const NetworkConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> x({n, c.in_channels, c.resolution, c.resolution});
  for (auto& v : x.data()) v = static_cast<float>(rng.normal());
  return x;
}

TEST(GatedResNetTest, AllOnesMaskIsBitExactWithUngatedNetwork) {
  auto config = NetworkConfig::preset("desk8");
  GatedResNet<float> gated(config, 3);
  auto plain_config = config;
  plain_config.gated = false;
  GatedResNet<float> plain(plain_config, 99);
  std::map<std::string, Variable<float>> by_name;
  for (auto& p : gated.parameters()) by_name[p.name] = p.var;
  for (auto& p : plain.parameters()) p.var.mutable_value() = by_name.at(p.name).value();
  std::map<std::string, Tensor<float>*> buffers;
  for (auto& b : gated.buffers()) buffers[b.name] = b.tensor;
  for (auto& b : plain.buffers()) *b.tensor = *buffers.at(b.name);

  const auto x = RandomImages(4, config, 1);
  std::vector<Tensor<float>> ones;
  for (const auto& b : config.blocks()) ones.emplace_back(Shape{4, b.mid_channels}, 1.0f);
  NoGradGuard guard;
  for (Mode mode : {Mode::kEval, Mode::kTrain}) {
    Rng noise(5);
    const auto a = gated.forward(Variable<float>(x), mode, &noise, &ones).logits.value();
    const auto b = plain.forward(Variable<float>(x), mode).logits.value();
    EXPECT_EQ(a, b);
  }
}

TEST(GatedResNetTest, ClosedChannelsReceiveNoGradient) {
  auto config = NetworkConfig::preset("desk8");
  GatedResNet<float> net(config, 4);
  const auto x = RandomImages(6, config, 2);
  std::vector<Tensor<float>> masks;
  for (const auto& b : config.blocks()) {
    Tensor<float> m(Shape{6, b.mid_channels}, 1.0f);
    for (std::size_t n = 0; n < 6; ++n) m.at(n, 0) = 0.0f;  // channel 0 closed everywhere
    masks.push_back(m);
  }
  Rng noise(1);
  const auto out = net.forward(Variable<float>(x), Mode::kTrain, &noise, &masks);
  backward(ops::sum(out.logits));
  auto& block = net.blocks[2];
  const auto gp = block.producer.weight.grad();
  const auto gc = block.consumer.weight.grad();
  const std::size_t cin = block.config().in_channels, mid = block.config().mid_channels;
  for (std::size_t i = 0; i < cin * 9; ++i) EXPECT_EQ(gp[i], 0.0f);  // filter 0 of the producer
  for (std::size_t o = 0; o < block.config().out_channels; ++o)
    for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(gc[(o * mid + 0) * 9 + k], 0.0f);
  double other = 0.0;
  for (std::size_t i = cin * 9; i < gp.size(); ++i) other += std::abs(gp[i]);
  EXPECT_GT(other, 0.0);
}

TEST(GatedResNetTest, ForwardReturnsOneGateOutputPerBlock) {
  auto config = NetworkConfig::preset("desk8");
  GatedResNet<float> net(config, 5);
  NoGradGuard guard;
  const auto out = net.forward(Variable<float>(RandomImages(2, config, 3)), Mode::kEval);
  EXPECT_EQ(out.logits.shape(), (Shape{2, 10}));
  ASSERT_EQ(out.gates.size(), 8u);
  for (std::size_t b = 0; b < 8; ++b) EXPECT_EQ(out.gates[b].width(), config.blocks()[b].mid_channels);
  EXPECT_THROW(net.forward(Variable<float>(Tensor<float>({2, 3, 8, 8})), Mode::kEval), std::invalid_argument);
}

TEST(GatedResNetTest, SameSeedSameWeights) {
  const auto c = NetworkConfig::preset("desk8");
  GatedResNet<float> a(c, 11), b(c, 11), d(c, 12);
  const auto pa = a.parameters(), pb = b.parameters(), pd = d.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_EQ(pa[i].var.value(), pb[i].var.value());
  }
  EXPECT_NE(pa[0].var.value(), pd[0].var.value());
}

TEST(GatedResNetTest, ParameterCountMatchesModel) {
  const auto c = NetworkConfig::preset("desk8");
  GatedResNet<float> net(c, 1);
  std::uint64_t backbone = 0, gating = 0;
  for (auto& p : net.parameters()) (p.gating ? gating : backbone) += p.var.size();
  EXPECT_EQ(backbone, parameter_count(c).backbone);
  EXPECT_EQ(gating, parameter_count(c).gating);
}

}  // namespace
}  // namespace chgate
