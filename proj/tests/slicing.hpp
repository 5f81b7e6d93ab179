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

// Slicer experiments shared by the unit tests and the acceptance runner.

#ifndef CHGATE_TESTS_SLICING_HPP_
#define CHGATE_TESTS_SLICING_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chgate/slicer.hpp"

namespace chgate::slicing {

/// Moves every batch-norm running statistic away from its (0, 1) start so
/// that slicing the normalization is actually exercised.
inline void perturb_norm_statistics(GatedResNet<float>& model, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& b : model.buffers()) {
    const bool var = b.name.ends_with("running_var");
    for (auto& v : b.tensor->data()) v = static_cast<float>(var ? rng.uniform(0.5, 1.5) : 0.1 * rng.normal());
  }
}

inline Tensor<float> random_input(std::size_t c, std::size_t h, std::size_t w, Rng& rng) {
  Tensor<float> x({1, c, h, w});
  for (auto& v : x.data()) v = static_cast<float>(rng.normal());
  return x;
}

inline std::size_t argmax(const Tensor<float>& logits) {
  return static_cast<std::size_t>(std::max_element(logits.data().begin(), logits.data().end()) -
                                  logits.data().begin());
}

struct TripleReport {
  std::size_t cases = 0;
  std::size_t empty_plans = 0;
  std::size_t full_plans = 0;
  double max_abs_diff = 0.0;
};

/// Random (block, plan, input) triples run through the sliced and the
/// masked-dense block paths.
inline TripleReport random_block_triples(GatedResNet<float>& model, std::size_t cases, std::uint64_t seed) {
  SlicedExecutor ex(model);
  const auto blocks = model.config().blocks();
  Rng rng(seed);
  TripleReport r;
  for (std::size_t i = 0; i < cases; ++i) {
    const std::size_t b = rng.below(blocks.size());
    const auto& cfg = blocks[b];
    // One case in ten is pinned to an empty or a full plan.
    std::size_t count = rng.below(cfg.mid_channels + 1);
    if (i % 10 == 0) count = 0;
    if (i % 10 == 5) count = cfg.mid_channels;
    const auto plan = SlicePlan::random(cfg.mid_channels, count, rng);
    r.empty_plans += count == 0;
    r.full_plans += count == cfg.mid_channels;
    const auto x = random_input(cfg.in_channels, cfg.in_height, cfg.in_width, rng);
    const auto sliced = ex.block_forward(b, x, SlicedExecutor::Path::kSliced, &plan);
    const auto masked = ex.block_forward(b, x, SlicedExecutor::Path::kMasked, &plan);
    for (std::size_t k = 0; k < sliced.size(); ++k)
      r.max_abs_diff = std::max(r.max_abs_diff, static_cast<double>(std::abs(sliced[k] - masked[k])));
    ++r.cases;
  }
  return r;
}

struct AgreementReport {
  std::size_t examples = 0;
  std::size_t sliced_vs_masked = 0;  // identical top-1 count
  std::size_t sliced_vs_model = 0;
  double max_logit_diff = 0.0;  // sliced vs batched eval-mode model
};

/// Gate-chosen plans on random images: the sliced path against the masked
/// path with the same plans and against the batched eval-mode network.
inline AgreementReport top1_agreement(GatedResNet<float>& model, std::size_t examples, std::uint64_t seed) {
  const auto& config = model.config();
  Rng rng(seed);
  Tensor<float> batch({examples, config.in_channels, config.resolution, config.resolution});
  for (auto& v : batch.data()) v = static_cast<float>(rng.normal());
  Tensor<float> reference;
  {
    NoGradGuard guard;
    reference = model.forward(Variable<float>(batch), Mode::kEval).logits.value();
  }
  SlicedExecutor ex(model);
  AgreementReport r;
  const std::size_t per = batch.size() / examples;
  for (std::size_t i = 0; i < examples; ++i) {
    Tensor<float> x({1, config.in_channels, config.resolution, config.resolution});
    std::copy_n(batch.raw() + i * per, per, x.raw());
    std::vector<SlicePlan> used;
    const auto sliced = ex.forward(x, SlicedExecutor::Path::kSliced, nullptr, &used);
    const auto masked = ex.forward(x, SlicedExecutor::Path::kMasked, &used);
    std::size_t model_top = 0;
    for (std::size_t k = 0; k < config.classes; ++k) {
      const float ref = reference.at(i, k);
      r.max_logit_diff = std::max(r.max_logit_diff, static_cast<double>(std::abs(ref - sliced[k])));
      if (ref > reference.at(i, model_top)) model_top = k;
    }
    r.sliced_vs_masked += argmax(sliced) == argmax(masked);
    r.sliced_vs_model += argmax(sliced) == model_top;
    ++r.examples;
  }
  return r;
}

/// Timing with every block forced to `fraction` of its channels.
inline BenchReport forced_bench(GatedResNet<float>& model, std::size_t images, double fraction,
                                std::uint64_t seed) {
  const auto& config = model.config();
  Rng rng(seed);
  std::vector<Tensor<float>> xs;
  for (std::size_t i = 0; i < images; ++i)
    xs.push_back(random_input(config.in_channels, config.resolution, config.resolution, rng));
  BenchOptions options;
  options.warmup = 2;
  options.repetitions = 3;
  options.forced_fraction = fraction;
  options.seed = seed;
  return bench(model, xs, {}, options);
}

}  // namespace chgate::slicing

#endif  // CHGATE_TESTS_SLICING_HPP_
