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

// Reverse-mode differentiation over a dynamically recorded graph.
//
// Every op producing a Variable records a TapeNode holding its inputs and a
// closure that captures whatever forward context the op needs (sort
// permutations, normalization statistics, ...). backward() orders the nodes
// reachable from a scalar root topologically and runs each closure once.
// Leaf gradients accumulate across calls; interior gradients are reset.
//
// A graph is confined to the thread that built it.

#ifndef CHGATE_AUTOGRAD_HPP_
#define CHGATE_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "chgate/tensor.hpp"

namespace chgate {

template <typename T>
struct TapeNode {
  Tensor<T> value;
  Tensor<T> grad;
  bool has_grad = false;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TapeNode>> inputs;
  std::function<void(TapeNode&)> backward;

  bool is_leaf() const { return inputs.empty(); }
  /// Lazily allocated, zero-initialized gradient buffer.
  Tensor<T>& grad_buffer();
};

/// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

template <typename T>
class Variable {
 public:
  Variable();
  explicit Variable(Tensor<T> value, bool requires_grad = false);

  const Tensor<T>& value() const { return node_->value; }
  /// Direct access for optimizers and loaders; does not touch the graph.
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->has_grad; }
  /// Gradient, or zeros of the value's shape when none has been accumulated.
  Tensor<T> grad() const;
  void zero_grad();

  const std::shared_ptr<TapeNode<T>>& node() const { return node_; }
  const char* op() const { return node_->op; }

 private:
  std::shared_ptr<TapeNode<T>> node_;
};

/// Builds a recorded result. When recording is off or no input requires a
/// gradient the result is a constant and `backward` is dropped.
template <typename T>
Variable<T> make_result(Tensor<T> value, std::vector<Variable<T>> inputs,
                        std::function<void(TapeNode<T>&)> backward, const char* op);

/// Accumulates d(root)/d(leaf) into every reachable leaf requiring a gradient.
/// Throws std::invalid_argument when `root` is not a scalar.
template <typename T>
void backward(const Variable<T>& root);

extern template class Variable<float>;
extern template class Variable<double>;

}  // namespace chgate

#endif  // CHGATE_AUTOGRAD_HPP_
