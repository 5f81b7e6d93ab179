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

// Batch-shaping: a Cramer-von-Mises distance between the empirical
// distribution of a minibatch of feature values and a target CDF,
//
//   S(x) = (lambda / N) * sum_i (i / (N + 1) - F(x*_i))^2,   x* = sort(x),
//
// differentiated through the sort by routing each sorted-position gradient
// back to the element's original index. Plotting positions i/(N+1) are
// treated as constants, so at ties the gradient is the subgradient selected
// by the stable sort order.

#ifndef CHGATE_BATCHSHAPE_HPP_
#define CHGATE_BATCHSHAPE_HPP_

#include <span>
#include <vector>

#include "chgate/autograd.hpp"
#include "chgate/priors.hpp"

namespace chgate {

struct ShapingConfig {
  PriorSpec prior = default_gate_prior();
  double lambda = 1.0;

  /// Throws std::invalid_argument for negative or non-finite lambda.
  void validate() const;
};

/// Loss of one feature over a batch. When `grad_out` is non-empty it must
/// have the same length as `samples` and receives dS/dx in input order.
template <typename T>
double shaping_loss(std::span<const T> samples, const ShapingConfig& config,
                    std::span<T> grad_out = {});

/// Sum of per-feature losses; every vector must share one batch length.
template <typename T>
double network_shaping_loss(const std::vector<std::vector<T>>& gate_batches,
                            const ShapingConfig& config);

/// shaping_loss with lambda = 1.
template <typename T>
double cvm_distance(std::span<const T> samples, const PriorSpec& prior);

/// Differentiable network loss over values[N,M]: each of the M columns is a
/// feature observed over a batch of N. A 1-D input is a single feature.
template <typename T>
Variable<T> shaping_loss(const Variable<T>& values, const ShapingConfig& config);

}  // namespace chgate

#endif  // CHGATE_BATCHSHAPE_HPP_
