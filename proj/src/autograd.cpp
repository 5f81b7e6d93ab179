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

#include "chgate/autograd.hpp"

#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace chgate {

namespace {
thread_local bool t_grad_enabled = true;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() { return t_grad_enabled; }

template <typename T>
Tensor<T>& TapeNode<T>::grad_buffer() {
  if (!has_grad) {
    grad = Tensor<T>(value.shape());
    has_grad = true;
  }
  return grad;
}

template <typename T>
Variable<T>::Variable() : node_(std::make_shared<TapeNode<T>>()) {}

template <typename T>
Variable<T>::Variable(Tensor<T> value, bool requires_grad) : node_(std::make_shared<TapeNode<T>>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Variable<T>::grad() const {
  if (node_->has_grad) return node_->grad;
  return Tensor<T>(node_->value.shape());
}

template <typename T>
void Variable<T>::zero_grad() {
  node_->has_grad = false;
  node_->grad = Tensor<T>();
}

template <typename T>
Variable<T> make_result(Tensor<T> value, std::vector<Variable<T>> inputs,
                        std::function<void(TapeNode<T>&)> backward_fn, const char* op) {
  Variable<T> out(std::move(value), false);
  auto& node = *out.node();
  node.op = op;
  if (!grad_enabled()) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  node.requires_grad = true;
  node.inputs.reserve(inputs.size());
  for (auto& in : inputs) node.inputs.push_back(in.node());
  node.backward = std::move(backward_fn);
  return out;
}

template <typename T>
void backward(const Variable<T>& root) {
  if (!root.value().is_scalar()) {
    throw std::invalid_argument(std::string("backward() needs a scalar root, got shape ") +
                                shape_str(root.shape()));
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS; `order` ends with the root.
  std::vector<TapeNode<T>*> order;
  std::unordered_set<TapeNode<T>*> seen;
  std::vector<std::pair<TapeNode<T>*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      TapeNode<T>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (TapeNode<T>* node : order) {
    if (!node->is_leaf()) {
      node->has_grad = false;
      node->grad = Tensor<T>();
    }
  }
  root.node()->grad_buffer()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TapeNode<T>* node = *it;
    if (node->is_leaf() || !node->has_grad || !node->backward) continue;
    node->backward(*node);
  }
}

template class Variable<float>;
template class Variable<double>;
template struct TapeNode<float>;
template struct TapeNode<double>;

template Variable<float> make_result(Tensor<float>, std::vector<Variable<float>>,
                                     std::function<void(TapeNode<float>&)>, const char*);
template Variable<double> make_result(Tensor<double>, std::vector<Variable<double>>,
                                      std::function<void(TapeNode<double>&)>, const char*);
template void backward(const Variable<float>&);
template void backward(const Variable<double>&);

}  // namespace chgate
