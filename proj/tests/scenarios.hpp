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

// Experiments shared by the unit tests and the acceptance runner.

#ifndef CHGATE_TESTS_SCENARIOS_HPP_
#define CHGATE_TESTS_SCENARIOS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "chgate/batchshape.hpp"
#include "chgate/gating.hpp"
#include "chgate/ops.hpp"
#include "chgate/rng.hpp"
#include "oracles.hpp"

namespace chgate::scenario {

/// Interior samples in (lo, hi) whose pairwise gaps exceed `gap`.
inline std::vector<double> tie_free_samples(std::size_t n, double lo, double hi, double gap, Rng& rng) {
  for (;;) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    auto s = v;
    std::sort(s.begin(), s.end());
    bool ok = true;
    for (std::size_t i = 1; i < n; ++i) ok = ok && s[i] - s[i - 1] > gap;
    if (ok) return v;
  }
}

/// Worst relative error of the analytic shaping gradient against central
/// differences (step h) of the definition oracle, on tie-free interior
/// samples.
inline double shaping_gradient_error(const PriorSpec& prior, std::size_t n, Rng& rng, double h = 1e-6) {
  const ShapingConfig config{prior, 1.0};
  auto x = tie_free_samples(n, 0.02, 0.98, 4 * h, rng);
  std::vector<double> g(n);
  shaping_loss<double>(x, config, g);
  const auto cdf = [&](double v) { return prior.cdf(v); };
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const long double plus = oracle::shaping_loss(x, cdf, 1.0);
    x[i] = saved - h;
    const long double minus = oracle::shaping_loss(x, cdf, 1.0);
    x[i] = saved;
    const double fd = static_cast<double>((plus - minus) / (2.0L * h));
    worst = std::max(worst, std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-12}));
  }
  return worst;
}

struct ShapingDescent {
  double initial_distance = 0.0;  // summed over streams
  double final_distance = 0.0;
  double final_mean = 0.0;
};

/// Gradient descent on free logits z[batch, streams] so that every column of
/// sigmoid(z) follows `prior` under the shaping loss alone.
inline ShapingDescent shaping_descent(std::size_t streams, std::size_t batch, int steps, double lr,
                                      const PriorSpec& prior, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> init({batch, streams});
  for (auto& v : init.data()) v = rng.normal();
  Variable<double> z(init, true);
  const ShapingConfig config{prior, 1.0};
  auto distance = [&] {
    NoGradGuard guard;
    return shaping_loss(ops::sigmoid(z), config).value().item();
  };
  ShapingDescent r;
  r.initial_distance = distance();
  for (int s = 0; s < steps; ++s) {
    z.zero_grad();
    backward(shaping_loss(ops::sigmoid(z), config));
    const Tensor<double> g = z.grad();
    auto& w = z.mutable_value();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
  }
  r.final_distance = distance();
  double sum = 0.0;
  for (double v : z.value().data()) sum += 1.0 / (1.0 + std::exp(-v));
  r.final_mean = sum / static_cast<double>(z.size());
  return r;
}

/// Train-mode firing frequency of a gate module whose logits are pinned to
/// `logits`: the hidden layer is zeroed so the output bias is the logit.
inline std::vector<double> firing_frequencies(const std::vector<double>& logits, std::size_t draws,
                                              std::uint64_t seed) {
  Rng init(seed);
  auto gate = GateModuleParams<float>::init(1, logits.size(), init);
  gate.fc1_weight.mutable_value().fill(0.0f);
  gate.bn_shift.mutable_value().fill(0.0f);
  for (std::size_t g = 0; g < logits.size(); ++g) gate.fc2_bias.mutable_value()[g] = static_cast<float>(logits[g]);
  Rng noise(seed + 1);
  NoGradGuard guard;
  const auto out = gate_forward(Variable<float>(Tensor<float>({draws, 1, 1, 1}, 1.0f)), gate, Mode::kTrain, &noise);
  std::vector<double> freq(logits.size(), 0.0);
  for (std::size_t n = 0; n < draws; ++n)
    for (std::size_t g = 0; g < logits.size(); ++g) freq[g] += out.hard.at(n, g);
  for (auto& f : freq) f /= static_cast<double>(draws);
  return freq;
}

/// Central difference of the relaxed gate in the logit at logit + noise = 0.
inline double relaxed_slope_at_threshold(double temperature, double h = 1e-6) {
  return (relaxed_gate(h, 0.0, temperature) - relaxed_gate(-h, 0.0, temperature)) / (2.0 * h);
}

/// d(soft)/d(logit) through the gate module's backward pass, with the
/// logit placed so that logit + noise = 0 for the first example.
inline double relaxed_slope_autograd(std::uint64_t seed) {
  Rng init(seed);
  auto gate = GateModuleParams<double>::init(1, 1, init);
  gate.fc1_weight.mutable_value().fill(0.0);
  gate.bn_shift.mutable_value().fill(0.0);
  Rng probe(seed + 1);
  gate.fc2_bias.mutable_value()[0] = -probe.logistic();
  Rng noise(seed + 1);
  const auto out = gate_forward(Variable<double>(Tensor<double>({2, 1, 1, 1}, 1.0)), gate, Mode::kTrain, &noise);
  const Tensor<double> pick({2, 1}, std::vector<double>{1.0, 0.0});
  backward(ops::sum(ops::mul(out.soft, Variable<double>(pick))));
  return gate.fc2_bias.grad()[0];
}

}  // namespace chgate::scenario

#endif  // CHGATE_TESTS_SCENARIOS_HPP_
