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

#include "chgate/gating.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace chgate {

void GatedBlockConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("block config: " + what); };
  if (in_channels == 0 || mid_channels == 0 || out_channels == 0) fail("channel counts must be positive");
  if (kernel % 2 == 0) fail("kernel must be odd, got " + std::to_string(kernel));
  if (stride == 0) fail("stride must be positive");
  if (in_height == 0 || in_width == 0) fail("input resolution must be positive");
  if (in_height + 2 * padding() < kernel || in_width + 2 * padding() < kernel) {
    fail("kernel larger than padded input");
  }
  if (needs_projection() && !projection) {
    fail("stride " + std::to_string(stride) + " or channels " + std::to_string(in_channels) + "->" +
         std::to_string(out_channels) + " require a projection shortcut");
  }
}

BlockMacs block_conv_macs(const GatedBlockConfig& b, std::size_t active) {
  if (active > b.mid_channels) {
    throw std::invalid_argument("block_conv_macs: " + std::to_string(active) + " active of " +
                                std::to_string(b.mid_channels) + " channels");
  }
  using u64 = std::uint64_t;
  const u64 out_plane = static_cast<u64>(b.out_height()) * b.out_width();
  const u64 in_plane = static_cast<u64>(b.in_height) * b.in_width;
  const u64 k2 = static_cast<u64>(b.kernel) * b.kernel;
  BlockMacs m;
  if (b.kind == BlockKind::kBasic) {
    m.producer = static_cast<u64>(b.in_channels) * active * k2 * out_plane;
    m.consumer = static_cast<u64>(active) * b.out_channels * k2 * out_plane;
  } else {
    m.pre = static_cast<u64>(b.in_channels) * b.mid_channels * in_plane;
    m.producer = static_cast<u64>(b.mid_channels) * active * k2 * out_plane;
    m.consumer = static_cast<u64>(active) * b.out_channels * out_plane;
  }
  if (b.projection) m.projection = static_cast<u64>(b.in_channels) * b.out_channels * out_plane;
  return m;
}

template <typename T>
GateModuleParams<T> GateModuleParams<T>::init(std::size_t in_channels, std::size_t gates, Rng& rng,
                                              double temperature) {
  if (in_channels == 0 || gates == 0) throw std::invalid_argument("gate module needs Cin > 0 and G > 0");
  if (!(temperature > 0.0)) throw std::invalid_argument("gate temperature must be positive");
  GateModuleParams p;
  p.in_channels = in_channels;
  p.gates = gates;
  p.temperature = temperature;
  Tensor<T> w1(Shape{kGateHiddenWidth, in_channels});
  const double s1 = std::sqrt(2.0 / static_cast<double>(in_channels));
  for (auto& v : w1.data()) v = static_cast<T>(rng.normal() * s1);
  Tensor<T> w2(Shape{gates, kGateHiddenWidth});
  const double s2 = 1.0 / std::sqrt(static_cast<double>(kGateHiddenWidth));
  for (auto& v : w2.data()) v = static_cast<T>(rng.normal() * s2);
  p.fc1_weight = Variable<T>(std::move(w1), true);
  p.bn_scale = Variable<T>(Tensor<T>(Shape{kGateHiddenWidth}, T{1}), true);
  p.bn_shift = Variable<T>(Tensor<T>(Shape{kGateHiddenWidth}, T{0}), true);
  p.fc2_weight = Variable<T>(std::move(w2), true);
  p.fc2_bias = Variable<T>(Tensor<T>(Shape{gates}, static_cast<T>(kGateBiasInit)), true);
  return p;
}

template <typename T>
std::size_t GateOutput<T>::active(std::size_t example) const {
  std::size_t n = 0;
  for (std::size_t g = 0; g < width(); ++g) n += hard.at(example, g) > T{0};
  return n;
}

double relaxed_gate(double logit, double noise, double temperature) {
  return 1.0 / (1.0 + std::exp(-(logit + noise) / temperature));
}

template <typename T>
GateOutput<T> gate_forward(const Variable<T>& features, GateModuleParams<T>& params, Mode mode,
                           Rng* noise) {
  const Shape& fs = features.shape();
  if (fs.size() != 4 || fs[1] != params.in_channels) {
    throw std::invalid_argument("gate_forward: features " + shape_str(fs) + " do not match gate input width " +
                                std::to_string(params.in_channels));
  }
  auto pooled = ops::global_avg_pool(features);
  auto hidden = ops::linear(pooled, params.fc1_weight, static_cast<const Variable<T>*>(nullptr));
  hidden = ops::batch_norm(hidden, params.bn_scale, params.bn_shift, params.bn_stats, mode);
  hidden = ops::relu(hidden);
  GateOutput<T> out;
  out.logits = ops::linear(hidden, params.fc2_weight, &params.fc2_bias);

  Variable<T> pre = out.logits;
  if (mode == Mode::kTrain) {
    if (noise == nullptr) throw std::invalid_argument("gate_forward: train mode needs a noise source");
    Tensor<T> l(out.logits.shape());
    for (auto& v : l.data()) v = static_cast<T>(noise->logistic());
    pre = ops::add_constant(pre, l);
  }
  out.soft = ops::sigmoid(ops::scale(pre, static_cast<T>(1.0 / params.temperature)));
  out.hard = Tensor<T>(out.soft.shape());
  for (std::size_t i = 0; i < out.hard.size(); ++i) {
    out.hard[i] = out.soft.value()[i] > T(0.5) ? T{1} : T{0};
  }
  out.mask = ops::straight_through(out.soft, out.hard);
  return out;
}

double l0_loss(std::span<const double> logits, double gamma) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("l0_loss: gamma must be >= 0, got " + std::to_string(gamma));
  double s = 0.0;
  for (double z : logits) s += 1.0 / (1.0 + std::exp(-z));
  return gamma * s;
}

template <typename T>
Variable<T> l0_loss(const Variable<T>& logits, double gamma) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("l0_loss: gamma must be >= 0, got " + std::to_string(gamma));
  std::vector<double> sig(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    sig[i] = 1.0 / (1.0 + std::exp(-static_cast<double>(logits.value()[i])));
    s += sig[i];
  }
  return make_result<T>(
      Tensor<T>::scalar(static_cast<T>(gamma * s)), {logits},
      [sig = std::move(sig), gamma](TapeNode<T>& self) {
        T* d = self.inputs[0]->grad_buffer().raw();
        const double up = self.grad[0];
        for (std::size_t i = 0; i < sig.size(); ++i) {
          d[i] += static_cast<T>(up * gamma * sig[i] * (1.0 - sig[i]));
        }
      },
      "l0_loss");
}

double GateOverhead::ratio() const {
  return block_macs == 0 ? 0.0 : static_cast<double>(total()) / static_cast<double>(block_macs);
}

double GateOverhead::affine_ratio() const {
  return block_macs == 0 ? 0.0 : static_cast<double>(affine_macs()) / static_cast<double>(block_macs);
}

GateOverhead gate_overhead_macs(const GatedBlockConfig& block) {
  GateOverhead o;
  o.fc1_macs = static_cast<std::uint64_t>(block.in_channels) * kGateHiddenWidth;
  o.fc2_macs = static_cast<std::uint64_t>(kGateHiddenWidth) * block.gates();
  o.pool_adds = static_cast<std::uint64_t>(block.in_channels) * block.in_height * block.in_width;
  o.block_macs = block_conv_macs(block).total();
  return o;
}

template struct GateModuleParams<float>;
template struct GateModuleParams<double>;
template struct GateOutput<float>;
template struct GateOutput<double>;
template GateOutput<float> gate_forward(const Variable<float>&, GateModuleParams<float>&, Mode, Rng*);
template GateOutput<double> gate_forward(const Variable<double>&, GateModuleParams<double>&, Mode, Rng*);
template Variable<float> l0_loss(const Variable<float>&, double);
template Variable<double> l0_loss(const Variable<double>&, double);

}  // namespace chgate
