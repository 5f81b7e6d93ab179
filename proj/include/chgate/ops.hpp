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

// Differentiable primitives. Each op checks its shape rule, computes the
// forward value, and records a backward closure when any input requires a
// gradient. Shape violations throw std::invalid_argument naming both shapes.

#ifndef CHGATE_OPS_HPP_
#define CHGATE_OPS_HPP_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "chgate/autograd.hpp"

namespace chgate {

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

enum class Mode { kTrain, kEval };

template <typename T>
struct BatchNormStats {
  Tensor<T> running_mean;
  Tensor<T> running_var;

  explicit BatchNormStats(std::size_t channels = 1)
      : running_mean(Shape{channels}, T{0}), running_var(Shape{channels}, T{1}) {}
};

/// Ascending stable sort; ties keep their original order. `permutation[j]`
/// is the original index of the value that landed at sorted position j.
template <typename T>
std::pair<std::vector<T>, std::vector<std::size_t>> sort_with_indices(std::span<const T> values);

namespace ops {

template <typename T>
Variable<T> conv2d(const Variable<T>& input, const Variable<T>& weight, std::size_t stride,
                   std::size_t padding);

/// Normalizes [N,C] or [N,C,H,W] per channel. Train mode uses batch
/// statistics and updates `stats` with momentum; eval mode applies the
/// running statistics.
template <typename T>
Variable<T> batch_norm(const Variable<T>& input, const Variable<T>& scale, const Variable<T>& shift,
                       BatchNormStats<T>& stats, Mode mode,
                       double momentum = kBatchNormMomentum, double eps = kBatchNormEpsilon);

template <typename T>
Variable<T> relu(const Variable<T>& x);
template <typename T>
Variable<T> sigmoid(const Variable<T>& x);

/// x[N,in] * weight[out,in]^T + bias[out]; `bias` may be null.
template <typename T>
Variable<T> linear(const Variable<T>& x, const Variable<T>& weight, const Variable<T>* bias);

/// [N,C,H,W] -> [N,C]
template <typename T>
Variable<T> global_avg_pool(const Variable<T>& x);

template <typename T>
Variable<T> max_pool2d(const Variable<T>& x, std::size_t kernel, std::size_t stride,
                       std::size_t padding);

template <typename T>
Variable<T> add(const Variable<T>& a, const Variable<T>& b);
template <typename T>
Variable<T> mul(const Variable<T>& a, const Variable<T>& b);
template <typename T>
Variable<T> scale(const Variable<T>& x, T factor);
/// x + c with c held constant.
template <typename T>
Variable<T> add_constant(const Variable<T>& x, const Tensor<T>& c);

/// x[N,C,H,W] * mask[N,C] broadcast over the spatial plane.
template <typename T>
Variable<T> channel_mul(const Variable<T>& x, const Variable<T>& mask);

/// Mean softmax cross-entropy of logits[N,K] against integer labels.
template <typename T>
Variable<T> softmax_cross_entropy(const Variable<T>& logits, std::span<const int> labels);

template <typename T>
Variable<T> sum(const Variable<T>& x);
template <typename T>
Variable<T> mean(const Variable<T>& x);

/// Sorts a 1-D variable ascending; backward sends the gradient at sorted
/// position j to the original position of that element.
template <typename T>
Variable<T> sort(const Variable<T>& x);

/// Forward value is `hard`; the gradient passes to `soft` unchanged.
template <typename T>
Variable<T> straight_through(const Variable<T>& soft, const Tensor<T>& hard);

}  // namespace ops
}  // namespace chgate

#endif  // CHGATE_OPS_HPP_
