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

#include "chgate/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chgate/batchshape.hpp"
#include "chgate/gatednet.hpp"
#include "chgate/gating.hpp"
#include "chgate/ops.hpp"

namespace chgate {

template <typename T>
GradCheckResult check_gradients(const std::string& name, const ScalarFn<T>& f, std::vector<Variable<T>> inputs,
                                double tolerance, const GradCheckOptions& options, Rng& rng) {
  GradCheckResult r;
  r.name = name;
  r.tolerance = tolerance;
  for (auto& v : inputs) v.zero_grad();
  backward(f(inputs));
  std::vector<Tensor<T>> analytic;
  for (const auto& v : inputs) analytic.push_back(v.grad());

  NoGradGuard no_grad;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor<T>& value = inputs[i].mutable_value();
    std::vector<std::size_t> entries(value.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (entries.size() > options.samples_per_input) {
      for (std::size_t k = 0; k < options.samples_per_input; ++k)
        std::swap(entries[k], entries[k + rng.below(entries.size() - k)]);
      entries.resize(options.samples_per_input);
    }
    for (std::size_t k : entries) {
      const T saved = value[k];
      value[k] = static_cast<T>(saved + options.step);
      const double plus = f(inputs).value().item();
      value[k] = static_cast<T>(saved - options.step);
      const double minus = f(inputs).value().item();
      value[k] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[i][k];
      const double diff = std::abs(a - numeric);
      const double scale = std::max(std::abs(a), std::abs(numeric));
      if (options.absolute > 0.0 && scale < options.floor) {
        // Too small for a relative comparison at this precision.
        ++r.small_entries;
        r.max_abs_error_small = std::max(r.max_abs_error_small, diff);
        if (diff > options.absolute) ++r.small_failures;
      } else {
        r.max_rel_error = std::max(r.max_rel_error, diff / std::max(scale, options.floor));
      }
      ++r.checked;
    }
  }
  return r;
}

template GradCheckResult check_gradients(const std::string&, const ScalarFn<float>&, std::vector<Variable<float>>,
                                         double, const GradCheckOptions&, Rng&);
template GradCheckResult check_gradients(const std::string&, const ScalarFn<double>&, std::vector<Variable<double>>,
                                         double, const GradCheckOptions&, Rng&);

namespace {

template <typename T>
Tensor<T> random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  Tensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(rng.normal() * scale);
  return t;
}

template <typename T>
Variable<T> param(const Shape& shape, Rng& rng, double scale = 1.0) {
  return Variable<T>(random_tensor<T>(shape, rng, scale), true);
}

/// sum(y * r) for a fixed random r, so every output entry gets a distinct
/// upstream gradient.
template <typename T>
Variable<T> project(const Variable<T>& y, const Tensor<T>& r) {
  return ops::sum(ops::mul(y, Variable<T>(r)));
}

template <typename T>
std::vector<Variable<T>> block_params(GatedBlock<T>& block) {
  std::vector<NamedParam<T>> params;
  std::vector<NamedBuffer<T>> buffers;
  block.collect("", params, buffers);
  std::vector<Variable<T>> out;
  for (auto& p : params)
    if (!p.gating) out.push_back(p.var);
  return out;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed) {
  using D = double;
  constexpr double kTol64 = 1e-4;
  std::vector<GradCheckResult> results;
  Rng rng(derive_seed(seed, {0x6c4}));
  GradCheckOptions opt;

  {
    auto x = param<D>({2, 3, 6, 6}, rng);
    auto w = param<D>({4, 3, 3, 3}, rng);
    const auto r = random_tensor<D>({2, 4, 3, 3}, rng);
    results.push_back(check_gradients<D>(
        "conv2d", [&](const auto& in) { return project(ops::conv2d(in[0], in[1], 2, 1), r); }, {x, w}, kTol64, opt,
        rng));
  }
  {
    auto x = param<D>({3, 2, 4, 4}, rng);
    auto w = param<D>({5, 2, 1, 1}, rng);
    const auto r = random_tensor<D>({3, 5, 4, 4}, rng);
    results.push_back(check_gradients<D>(
        "conv2d_pointwise", [&](const auto& in) { return project(ops::conv2d(in[0], in[1], 1, 0), r); }, {x, w},
        kTol64, opt, rng));
  }
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    auto x = param<D>({4, 3, 3, 3}, rng, 2.0);
    auto g = param<D>({3}, rng);
    auto b = param<D>({3}, rng);
    const auto r = random_tensor<D>({4, 3, 3, 3}, rng);
    BatchNormStats<D> stats(3);
    stats.running_mean = random_tensor<D>({3}, rng);
    stats.running_var.fill(1.7);
    results.push_back(check_gradients<D>(
        mode == Mode::kTrain ? "batch_norm_train" : "batch_norm_eval",
        [&](const auto& in) {
          BatchNormStats<D> s = stats;
          return project(ops::batch_norm(in[0], in[1], in[2], s, mode), r);
        },
        {x, g, b}, kTol64, opt, rng));
  }
  {
    auto x = param<D>({5, 6}, rng);
    auto w = param<D>({4, 6}, rng);
    auto b = param<D>({4}, rng);
    const auto r = random_tensor<D>({5, 4}, rng);
    results.push_back(check_gradients<D>(
        "linear", [&](const auto& in) { return project(ops::linear(in[0], in[1], &in[2]), r); }, {x, w, b}, kTol64,
        opt, rng));
  }
  {
    // Keep inputs away from the kink.
    Tensor<D> t = random_tensor<D>({4, 5}, rng);
    for (auto& v : t.data()) v = v >= 0 ? v + 0.1 : v - 0.1;
    Variable<D> x(t, true);
    const auto r = random_tensor<D>({4, 5}, rng);
    results.push_back(check_gradients<D>(
        "relu", [&](const auto& in) { return project(ops::relu(in[0]), r); }, {x}, kTol64, opt, rng));
  }
  {
    auto x = param<D>({4, 5}, rng, 2.0);
    const auto r = random_tensor<D>({4, 5}, rng);
    results.push_back(check_gradients<D>(
        "sigmoid", [&](const auto& in) { return project(ops::sigmoid(in[0]), r); }, {x}, kTol64, opt, rng));
  }
  {
    auto x = param<D>({2, 3, 4, 4}, rng);
    const auto r = random_tensor<D>({2, 3}, rng);
    results.push_back(check_gradients<D>(
        "global_avg_pool", [&](const auto& in) { return project(ops::global_avg_pool(in[0]), r); }, {x}, kTol64, opt,
        rng));
  }
  {
    // Distinct, well separated values so no window has a near tie.
    Tensor<D> t({1, 2, 5, 5});
    std::vector<std::size_t> perm(t.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.1 * static_cast<double>(perm[i]);
    Variable<D> x(t, true);
    const auto r = random_tensor<D>({1, 2, 3, 3}, rng);
    results.push_back(check_gradients<D>(
        "max_pool2d", [&](const auto& in) { return project(ops::max_pool2d(in[0], 3, 2, 1), r); }, {x}, kTol64, opt,
        rng));
  }
  {
    auto a = param<D>({3, 4}, rng);
    auto b = param<D>({3, 4}, rng);
    const auto r = random_tensor<D>({3, 4}, rng);
    results.push_back(check_gradients<D>(
        "add_mul", [&](const auto& in) { return project(ops::mul(ops::add(in[0], in[1]), in[1]), r); }, {a, b},
        kTol64, opt, rng));
  }
  {
    auto x = param<D>({2, 3, 3, 3}, rng);
    auto m = param<D>({2, 3}, rng);
    const auto r = random_tensor<D>({2, 3, 3, 3}, rng);
    results.push_back(check_gradients<D>(
        "channel_mul", [&](const auto& in) { return project(ops::channel_mul(in[0], in[1]), r); }, {x, m}, kTol64,
        opt, rng));
  }
  {
    auto logits = param<D>({6, 5}, rng, 2.0);
    const std::vector<int> labels{0, 4, 2, 2, 1, 3};
    results.push_back(check_gradients<D>(
        "softmax_cross_entropy", [&](const auto& in) { return ops::softmax_cross_entropy(in[0], labels); }, {logits},
        kTol64, opt, rng));
  }
  {
    auto x = param<D>({9}, rng);
    const auto r = random_tensor<D>({9}, rng);
    results.push_back(check_gradients<D>(
        "sort", [&](const auto& in) { return project(ops::sort(in[0]), r); }, {x}, 1e-5, opt, rng));
  }
  {
    Tensor<D> t({32, 3});
    for (auto& v : t.data()) v = rng.uniform(0.02, 0.98);
    Variable<D> x(t, true);
    GradCheckOptions bs = opt;
    bs.step = 1e-6;
    const ShapingConfig cfg{default_gate_prior(), 0.75};
    results.push_back(check_gradients<D>(
        "shaping_loss", [&](const auto& in) { return shaping_loss(in[0], cfg); }, {x}, 1e-5, bs, rng));
  }
  {
    auto z = param<D>({4, 6}, rng, 2.0);
    results.push_back(check_gradients<D>(
        "l0_loss", [&](const auto& in) { return l0_loss(in[0], 0.3); }, {z}, kTol64, opt, rng));
  }
  {
    GatedBlockConfig cfg;
    cfg.in_channels = 3;
    cfg.mid_channels = 4;
    cfg.out_channels = 5;
    cfg.stride = 2;
    cfg.projection = true;
    cfg.in_height = cfg.in_width = 6;
    GatedBlock<D> block(cfg, rng);
    auto x = param<D>({2, 3, 6, 6}, rng);
    Tensor<D> mask({2, 4});
    for (auto& v : mask.data()) v = rng.below(4) == 0 ? 0.0 : 1.0;
    const auto r = random_tensor<D>({2, 5, 3, 3}, rng);
    std::vector<Variable<D>> inputs{x};
    for (auto& p : block_params(block)) inputs.push_back(p);
    results.push_back(check_gradients<D>(
        "gated_block",
        [&](const auto& in) { return project(block.forward(in[0], Mode::kTrain, nullptr, &mask).y, r); }, inputs,
        kTol64, opt, rng));
  }
  {
    auto gate = GateModuleParams<D>::init(3, 5, rng);
    auto x = param<D>({4, 3, 3, 3}, rng);
    const auto r = random_tensor<D>({4, 5}, rng);
    const std::uint64_t noise_seed = rng.next_u64();
    results.push_back(check_gradients<D>(
        "gate_relaxation",
        [&](const auto& in) {
          Rng noise(noise_seed);
          return project(gate_forward(in[0], gate, Mode::kTrain, &noise).soft, r);
        },
        {x, gate.fc1_weight, gate.bn_scale, gate.bn_shift, gate.fc2_weight, gate.fc2_bias}, kTol64, opt, rng));
  }
  {
    GatedBlockConfig cfg;
    cfg.in_channels = 4;
    cfg.mid_channels = 4;
    cfg.out_channels = 4;
    cfg.in_height = cfg.in_width = 5;
    GatedBlock<float> block(cfg, rng);
    Variable<float> x(random_tensor<float>({2, 4, 5, 5}, rng), false);
    Tensor<float> mask({2, 4});
    for (auto& v : mask.data()) v = rng.below(4) == 0 ? 0.0f : 1.0f;
    const auto r = random_tensor<float>({2, 4, 5, 5}, rng, 0.1);
    GradCheckOptions f32;
    f32.step = 1e-3;
    f32.samples_per_input = 4;
    f32.floor = 1e-2;
    // Rounding in a float forward pass moves the loss by ~1e-7 relative, which
    // is ~1e-4 after dividing by 2h. Entries below the floor are compared in
    // absolute terms at ten times that.
    f32.absolute = 1e-3;
    auto params = block_params(block);
    // Five tensors x four entries: twenty parameters.
    params.resize(5);
    results.push_back(check_gradients<float>(
        "gated_block_f32",
        [&](const auto&) { return project(block.forward(x, Mode::kTrain, nullptr, &mask).y, r); }, params, 1e-2,
        f32, rng));
  }
  return results;
}

}  // namespace chgate
