// core/tensor.cc

// Copyright 2026 castkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/tensor.h"

#include <algorithm>
#include <unordered_set>

namespace cast {

namespace {
thread_local bool g_grad_enabled = true;
}

size_t Tensor::NumElements(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    CASTK_CHECK(d > 0, "Tensor: shape entries must be positive, got ", ShapeStr(shape));
    n *= static_cast<size_t>(d);
  }
  return n;
}

TensorPtr Tensor::Leaf(std::vector<int> shape, std::vector<double> values,
                       bool requires_grad) {
  size_t n = NumElements(shape);
  CASTK_CHECK(values.size() == n, "Tensor: buffer length ", values.size(),
              " does not match shape ", ShapeStr(shape));
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->value = std::move(values);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::Zeros(std::vector<int> shape, bool requires_grad) {
  size_t n = NumElements(shape);
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->value.assign(n, 0.0);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::Full(std::vector<int> shape, double v, bool requires_grad) {
  auto t = Zeros(std::move(shape), requires_grad);
  std::fill(t->value.begin(), t->value.end(), v);
  return t;
}

TensorPtr Tensor::Scalar(double v, bool requires_grad) {
  return Leaf({1}, {v}, requires_grad);
}

TensorPtr Tensor::Randn(std::vector<int> shape, Rng* rng, double std,
                        bool requires_grad) {
  auto t = Zeros(std::move(shape), requires_grad);
  for (double& v : t->value) v = std * rng->Normal();
  return t;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool GradModeEnabled() { return g_grad_enabled; }

void Backward(const TensorPtr& root) {
  CASTK_CHECK(root != nullptr, "Backward: null root");
  CASTK_CHECK(root->IsScalar(), "Backward: root must be scalar, got shape ",
              ShapeStr(root->shape));

  // Iterative post-order DFS: children after all parents in topo order.
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> visited;
  std::vector<std::pair<Tensor*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Tensor* parent = node->parents[next].get();
      ++next;
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->EnsureGrad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor* node = *it;
    if (node->backprop && !node->grad.empty()) node->backprop(*node);
  }
}

}  // namespace cast
