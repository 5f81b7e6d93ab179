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

#include "chgate/batchshape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "chgate/ops.hpp"

namespace chgate {

void ShapingConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("batch-shaping lambda must be finite and >= 0, got " +
                                std::to_string(lambda));
  }
}

template <typename T>
double shaping_loss(std::span<const T> samples, const ShapingConfig& config, std::span<T> grad_out) {
  config.validate();
  if (samples.empty()) throw std::invalid_argument("shaping_loss: empty sample vector");
  if (!grad_out.empty() && grad_out.size() != samples.size()) {
    throw std::invalid_argument("shaping_loss: gradient buffer length " +
                                std::to_string(grad_out.size()) + " != sample count " +
                                std::to_string(samples.size()));
  }
  if (config.lambda == 0.0) {
    for (T& g : grad_out) g = T{0};
    return 0.0;
  }
  const auto [sorted, perm] = sort_with_indices<T>(samples);
  const std::size_t n = sorted.size();
  const double coeff = config.lambda / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = static_cast<double>(sorted[j]);
    const double target = static_cast<double>(j + 1) / static_cast<double>(n + 1);
    const double residual = target - config.prior.cdf(x);
    loss += residual * residual;
    if (!grad_out.empty()) {
      grad_out[perm[j]] = static_cast<T>(-2.0 * coeff * config.prior.pdf(x) * residual);
    }
  }
  return coeff * loss;
}

template <typename T>
double network_shaping_loss(const std::vector<std::vector<T>>& gate_batches,
                            const ShapingConfig& config) {
  config.validate();
  double total = 0.0;
  if (gate_batches.empty()) return total;
  const std::size_t n = gate_batches.front().size();
  for (std::size_t m = 0; m < gate_batches.size(); ++m) {
    if (gate_batches[m].size() != n) {
      throw std::invalid_argument("network_shaping_loss: gate " + std::to_string(m) +
                                  " has batch length " + std::to_string(gate_batches[m].size()) +
                                  ", expected " + std::to_string(n));
    }
  }
  for (const auto& batch : gate_batches) total += shaping_loss<T>(batch, config);
  return total;
}

template <typename T>
double cvm_distance(std::span<const T> samples, const PriorSpec& prior) {
  return shaping_loss<T>(samples, ShapingConfig{prior, 1.0});
}

template <typename T>
Variable<T> shaping_loss(const Variable<T>& values, const ShapingConfig& config) {
  config.validate();
  const Shape& s = values.shape();
  if (s.size() != 1 && s.size() != 2) {
    throw std::invalid_argument("shaping_loss: expected [N] or [N,M], got " + shape_str(s));
  }
  const std::size_t n = s[0];
  const std::size_t m = s.size() == 2 ? s[1] : 1;
  Tensor<T> grad(s);
  std::vector<T> column(n), column_grad(n);
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = values.value()[i * m + j];
    total += shaping_loss<T>(column, config, std::span<T>(column_grad));
    for (std::size_t i = 0; i < n; ++i) grad[i * m + j] = column_grad[i];
  }
  return make_result<T>(
      Tensor<T>::scalar(static_cast<T>(total)), {values},
      [grad = std::move(grad)](TapeNode<T>& self) {
        T* d = self.inputs[0]->grad_buffer().raw();
        const T up = self.grad[0];
        for (std::size_t i = 0; i < grad.size(); ++i) d[i] += up * grad[i];
      },
      "shaping_loss");
}

template double shaping_loss(std::span<const float>, const ShapingConfig&, std::span<float>);
template double shaping_loss(std::span<const double>, const ShapingConfig&, std::span<double>);
template double network_shaping_loss(const std::vector<std::vector<float>>&, const ShapingConfig&);
template double network_shaping_loss(const std::vector<std::vector<double>>&, const ShapingConfig&);
template double cvm_distance(std::span<const float>, const PriorSpec&);
template double cvm_distance(std::span<const double>, const PriorSpec&);
template Variable<float> shaping_loss(const Variable<float>&, const ShapingConfig&);
template Variable<double> shaping_loss(const Variable<double>&, const ShapingConfig&);

}  // namespace chgate
